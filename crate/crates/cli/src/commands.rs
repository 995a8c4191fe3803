use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{json, Value};

use dynarisk::consistency::{
    certify_sufficiency, check_time_consistency, check_time_consistency_with, generate_battery, ConsistencyReport,
    SweepMode, SweepOptions, Verdict,
};
use dynarisk::demo::{counterexample_process, inf_time_process};
use dynarisk::filtration::{FiltrationTree, StoppingTime, Tree};
use dynarisk::functionals::{
    eval_at_time, penalty_sharp, snell_worst_stopping, stitch, worst_stopping_brute_force, AggregatedProcess,
    Aggregation, EntropicProcess, Representation, TerminalBase, TerminalKind, UtilityProcess, WorstStoppingProcess,
};
use dynarisk::io::Loader;
use dynarisk::scalar::{int, rat};
use dynarisk::{AdaptedProcess, ConditionalValue, Error, Rational, Scalar};

use crate::output::{tuple, Output};

pub const SEED_VAR: &str = "DYNARISK_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Library(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, ValueEnum)]
pub enum Demo {
    /// Running infimum over time: consistent at every date alone, but not as a family.
    Counterexample,
    /// Snell envelope against brute force over all stopping times.
    WorstStopping,
    /// Robust entropic utility with a set closed under pasting.
    Entropic,
    /// Weighted average over time of terminal expectations.
    Weighted,
}

pub struct Context {
    seed: u64,
    tolerance: f64,
    loader: Loader,
}

fn rendered<S: Scalar>(tree: &FiltrationTree, v: &ConditionalValue<S>) -> (Value, Vec<(String, String)>) {
    let rows = v.render(tree);
    let json = rows.iter().map(|(a, v)| json!({ "atom": a, "value": v })).collect();
    (json, rows)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn report_output(report: &ConsistencyReport, extra: Value) -> Output {
    let mut json = serde_json::to_value(report).expect("serializable");
    if let (Value::Object(map), Value::Object(more)) = (&mut json, extra) {
        map.extend(more);
    }
    let mut out = Output::new(json);
    out.line(format!("verdict: {}", report.verdict.as_str()));
    out.line(format!("method: {}", report.method));
    out.line(format!("identities checked: {}, skipped: {}", report.checks, report.skipped));
    if let Some(c) = &report.certificate {
        out.line(format!("certificate: {c}"));
    }
    for w in &report.witnesses {
        let process = w.process.map(|i| format!("process #{i}, ")).unwrap_or_default();
        out.line(format!(
            "  witness: {process}atom `{}` at t = {}, theta stops at {{{}}}: {} vs {}",
            w.atom,
            w.time,
            w.theta.join(", "),
            w.lhs,
            w.rhs
        ));
    }
    out.exit = u8::from(report.refuted());
    out
}

/// The four-density set on the seven-node tree that is closed under
/// pasting.
fn stable_densities() -> Vec<Vec<Rational>> {
    vec![
        vec![int(1), int(1), int(1), int(1)],
        vec![rat(3, 2), rat(1, 2), int(1), int(1)],
        vec![rat(1, 2), rat(1, 2), rat(3, 2), rat(3, 2)],
        vec![rat(3, 4), rat(1, 4), rat(3, 2), rat(3, 2)],
    ]
}

impl Context {
    pub fn new(seed: u64, tolerance: f64) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {tolerance}")));
        }
        let seed = match std::env::var(SEED_VAR) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_VAR} must be an unsigned integer, got `{s}`")))?,
            Err(_) => seed,
        };
        Ok(Context { seed, tolerance, loader: Loader::new() })
    }

    fn battery(&mut self, tree: &Tree, files: &[PathBuf], count: usize) -> Result<Vec<AdaptedProcess<Rational>>> {
        let mut out = Vec::with_capacity(files.len() + count);
        for f in files {
            let x = self.loader.process(f)?;
            if !x.tree().same_as(tree) {
                return Err(Error::TreeMismatch.into());
            }
            out.push(x);
        }
        out.extend(generate_battery(tree, count, self.seed));
        Ok(out)
    }

    fn battery_json(&self, files: &[PathBuf], count: usize) -> Value {
        json!({
            "battery": {
                "fixtures": files.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
                "generated": count,
                "seed": self.seed,
            }
        })
    }

    pub fn eval(&mut self, functional: &Path, process: &Path, time: usize) -> Result<Output> {
        let f = self.loader.functional(functional)?;
        let x = self.loader.process(process)?;
        let tree = UtilityProcess::<Rational>::tree(&f).clone();
        let (values, rows) = if f.needs_float() {
            rendered(&tree, &eval_at_time(&f, &x.to_f64(), time)?)
        } else {
            rendered(&tree, &eval_at_time(&f, &x, time)?)
        };
        let mut out = Output::new(json!({
            "command": "eval",
            "functional": f.tag(),
            "time": time,
            "values": values,
        }));
        out.line(format!("{} functional at t = {time}", f.tag()));
        out.rows(&rows);
        Ok(out)
    }

    pub fn check(&mut self, functional: &Path, files: &[PathBuf], count: usize, one_step: bool) -> Result<Output> {
        let f = self.loader.functional(functional)?;
        let tree = UtilityProcess::<Rational>::tree(&f).clone();
        let battery = self.battery(&tree, files, count)?;
        let mode = if one_step { SweepMode::OneStep } else { SweepMode::AllStoppingTimes };
        let opts = SweepOptions { tolerance: self.tolerance, ..SweepOptions::default() };
        let report = if f.needs_float() {
            let fb: Vec<AdaptedProcess<f64>> = battery.iter().map(|x| x.to_f64()).collect();
            check_time_consistency_with(&f, &fb, mode, &opts)?
        } else {
            check_time_consistency_with(&f, &battery, mode, &opts)?
        };
        let mut extra = self.battery_json(files, count);
        extra["functional"] = json!(f.tag());
        extra["command"] = json!("check");
        Ok(report_output(&report, extra))
    }

    pub fn certify(&mut self, functional: &Path, files: &[PathBuf], count: usize) -> Result<Output> {
        let f = self.loader.functional(functional)?;
        let tree = UtilityProcess::<Rational>::tree(&f).clone();
        let battery = self.battery(&tree, files, count)?;
        let report = certify_sufficiency(&f, &battery)?;
        let mut extra = self.battery_json(files, count);
        extra["functional"] = json!(f.tag());
        extra["command"] = json!("certify");
        Ok(report_output(&report, extra))
    }

    pub fn penalty(&mut self, functional: &Path, scenario: &Path, time: usize) -> Result<Output> {
        let Representation::Robust(f) = self.loader.functional(functional)? else {
            return Err(CliError::Usage("penalties are defined for robust functionals only".into()));
        };
        let a = self.loader.density(scenario)?;
        let tree = UtilityProcess::<Rational>::tree(&f).clone();
        if !a.tree().same_as(&tree) {
            return Err(Error::TreeMismatch.into());
        }
        if time > tree.horizon() {
            return Err(Error::WindowViolation(format!("time {time} beyond the horizon")).into());
        }
        let (values, rows) = rendered(&tree, &penalty_sharp(&f, &a, &StoppingTime::constant(&tree, time))?);
        let mut out = Output::new(json!({
            "command": "penalty",
            "scenario": path_str(scenario),
            "time": time,
            "values": values,
        }));
        out.line(format!("minimal penalty at t = {time}"));
        out.rows(&rows);
        Ok(out)
    }

    pub fn snell(&mut self, functional: &Path, process: &Path, time: usize) -> Result<Output> {
        let Representation::WorstStopping(w) = self.loader.functional(functional)? else {
            return Err(CliError::Usage("the envelope needs a worst_stopping functional".into()));
        };
        let x = self.loader.process(process)?;
        match w.base().kind() {
            TerminalKind::Expectation => snell_output(w.base(), &x, time),
            TerminalKind::Entropic => snell_output(w.base(), &x.to_f64(), time),
        }
    }

    pub fn demo(&mut self, which: Demo) -> Result<Output> {
        let tree = FiltrationTree::seven_node();
        let x = counterexample_process(&tree)?;
        let battery = generate_battery(&tree, 100, self.seed);
        match which {
            Demo::Counterexample => counterexample_demo(&tree, &x),
            Demo::WorstStopping => {
                let base = TerminalBase::new(tree.clone(), TerminalKind::Expectation, stable_densities())?;
                let mut out = snell_output(&base, &x, 0)?;
                let report = certify_sufficiency(&Representation::WorstStopping(WorstStoppingProcess::new(base, 0)), &battery)?;
                out.json["command"] = json!("demo worst-stopping");
                out.json["certify"] = serde_json::to_value(&report).expect("serializable");
                out.line(format!("certify: {} ({})", report.verdict.as_str(), report.method));
                Ok(out)
            }
            Demo::Entropic => {
                let f = Representation::Entropic(EntropicProcess::new(tree.clone(), stable_densities(), 0)?);
                terminal_demo("demo entropic", &tree, &f, &x, &battery)
            }
            Demo::Weighted => {
                let weights = vec![rat(1, 2), rat(1, 4), rat(1, 4)];
                let agg = AggregatedProcess::new(tree.clone(), stable_densities(), Aggregation::Weighted(weights), 0)?;
                terminal_demo("demo weighted", &tree, &Representation::Aggregated(agg), &x, &battery)
            }
        }
    }
}

fn snell_output<S: Scalar>(base: &TerminalBase, x: &AdaptedProcess<S>, time: usize) -> Result<Output> {
    let tree = base.tree().clone();
    let r = snell_worst_stopping(base, x, time)?;
    let (values, rows) = rendered(&tree, &r.values);
    let stops: Vec<String> = r.stopping.nodes().iter().map(|&n| tree.label(n).to_string()).collect();
    let envelope: Vec<(String, String)> = tree
        .node_ids()
        .filter(|&n| tree.time(n) >= time)
        .map(|n| (tree.label(n).to_string(), r.envelope.get(n).render()))
        .collect();
    // The direct search is only affordable on small subtrees.
    let brute = match worst_stopping_brute_force(base, x, time) {
        Ok(v) => Some(v),
        Err(Error::EnumerationCapExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mut json = json!({
        "command": "snell",
        "time": time,
        "values": values,
        "stopping": stops,
        "envelope": envelope.iter().map(|(n, v)| json!({ "node": n, "value": v })).collect::<Vec<_>>(),
    });
    let mut out_lines = vec![format!("worst stopping value at t = {time}")];
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    out_lines.extend(rows.iter().map(|(l, v)| format!("  {l:<width$}  {v}")));
    out_lines.push(format!("optimal stopping nodes: {{{}}}", stops.join(", ")));
    out_lines.push(format!("envelope: {}", envelope.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(" ")));
    if let Some(b) = brute {
        let agree = b.close_to(&r.values, dynarisk::functionals::FLOAT_TOLERANCE)?;
        json["brute_force"] = rendered(&tree, &b).0;
        json["agree"] = json!(agree);
        out_lines.push(format!(
            "minimum over all stopping times: {} ({})",
            tuple(&b.render(&tree)),
            if agree { "agrees" } else { "DIFFERS" }
        ));
    }
    let mut out = Output::new(json);
    out.lines = out_lines;
    Ok(out)
}

fn counterexample_demo(tree: &Tree, x: &AdaptedProcess<Rational>) -> Result<Output> {
    let f = inf_time_process(tree)?;
    let v0 = eval_at_time(&f, x, 0)?;
    let v1 = eval_at_time(&f, x, 1)?;
    let y = stitch(&f, x, &StoppingTime::constant(tree, 1))?;
    let w0 = eval_at_time(&f, &y, 0)?;
    let report = check_time_consistency(&f, std::slice::from_ref(x), SweepMode::OneStep)?;
    let (r0, r1, rw) = (v0.render(tree), v1.render(tree), w0.render(tree));
    let json = json!({
        "command": "demo counterexample",
        "process": x.tree().node_ids().map(|n| json!({ "node": tree.label(n), "value": x.get(n).render() })).collect::<Vec<_>>(),
        "phi_0": rendered(tree, &v0).0,
        "phi_1": rendered(tree, &v1).0,
        "phi_0_of_stitched": rendered(tree, &w0).0,
        "verdict": report.verdict.as_str(),
        "witnesses": serde_json::to_value(&report.witnesses).expect("serializable"),
    });
    let mut out = Output::new(json);
    out.line("running infimum under the reference measure, X = (2; 4, 1; 5, 1, 2, -1)");
    out.line(format!("phi_0,2(X) = {}", r0[0].1));
    out.line(format!("phi_1,2(X) = {}", tuple(&r1)));
    out.line(format!("phi_0,2(X 1_{{0}} + phi_1,2(X) 1_[1,inf)) = {}", rw[0].1));
    out.line(format!("verdict: {}", report.verdict.as_str()));
    out.exit = u8::from(report.verdict == Verdict::Refuted);
    Ok(out)
}

fn terminal_demo(
    name: &str,
    tree: &Tree,
    f: &Representation,
    x: &AdaptedProcess<Rational>,
    battery: &[AdaptedProcess<Rational>],
) -> Result<Output> {
    let cert = certify_sufficiency(f, battery)?;
    let sweep = if f.needs_float() {
        let fb: Vec<AdaptedProcess<f64>> = battery.iter().map(|x| x.to_f64()).collect();
        check_time_consistency(f, &fb, SweepMode::AllStoppingTimes)?
    } else {
        check_time_consistency(f, battery, SweepMode::AllStoppingTimes)?
    };
    let mut json = json!({ "command": name, "functional": f.tag() });
    let mut out_lines = vec![format!("{} functional on four densities closed under pasting", f.tag())];
    for t in 0..=tree.horizon() {
        let (v, rows) = if f.needs_float() {
            rendered(tree, &eval_at_time(f, &x.to_f64(), t)?)
        } else {
            rendered(tree, &eval_at_time(f, x, t)?)
        };
        json[format!("phi_{t}")] = v;
        out_lines.push(format!("phi_{t},2(X) = {}", tuple(&rows)));
    }
    json["certify"] = serde_json::to_value(&cert).expect("serializable");
    json["sweep"] = serde_json::to_value(&sweep).expect("serializable");
    out_lines.push(format!("certify: {} ({})", cert.verdict.as_str(), cert.method));
    out_lines.push(format!("sweep over {} processes: {}", battery.len(), sweep.verdict.as_str()));
    let mut out = Output::new(json);
    out.lines = out_lines;
    out.exit = u8::from(cert.refuted() || sweep.refuted());
    Ok(out)
}
