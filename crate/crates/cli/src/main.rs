mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser)]
#[command(name = "dynarisk", version, about = "Dynamic utility functionals on finite trees and their time-consistency")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Seed for the generated test processes. DYNARISK_SEED wins when set.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Relative tolerance for floating point comparisons.
    #[arg(long, default_value_t = 1e-9, global = true)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BatteryArgs {
    /// Extra test processes, checked before the generated ones.
    #[arg(long = "process")]
    processes: Vec<PathBuf>,
    /// Number of generated random processes.
    #[arg(long, default_value_t = 100)]
    battery: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional utility of a process at a date.
    Eval {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        process: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
    },
    /// Tests the consistency identity on a battery of processes.
    Check {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Sweep)]
        mode: Mode,
        #[command(flatten)]
        battery: BatteryArgs,
    },
    /// Looks for a sufficient condition for consistency.
    Certify {
        #[arg(long)]
        functional: PathBuf,
        #[command(flatten)]
        battery: BatteryArgs,
    },
    /// Minimal penalty of a scenario for a robust functional.
    Penalty {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
    },
    /// Backward recursion of a worst stopping functional.
    Snell {
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        process: PathBuf,
        #[arg(long, default_value_t = 0)]
        time: usize,
    },
    /// Built-in examples on the seven-node tree.
    Demo {
        #[arg(value_enum)]
        name: commands::Demo,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    OneStep,
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.render(cli.format));
            ExitCode::from(out.exit)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<output::Output, commands::CliError> {
    let mut ctx = commands::Context::new(cli.seed, cli.tolerance)?;
    match &cli.command {
        Command::Eval { functional, process, time } => ctx.eval(functional, process, *time),
        Command::Check { functional, mode, battery } => {
            let one_step = matches!(mode, Mode::OneStep);
            ctx.check(functional, &battery.processes, battery.battery, one_step)
        }
        Command::Certify { functional, battery } => ctx.certify(functional, &battery.processes, battery.battery),
        Command::Penalty { functional, scenario, time } => ctx.penalty(functional, scenario, *time),
        Command::Snell { functional, process, time } => ctx.snell(functional, process, *time),
        Command::Demo { name } => ctx.demo(*name),
    }
}
