use std::path::PathBuf;

use dynarisk::consistency::{certify_sufficiency, check_time_consistency, generate_battery, SweepMode, Verdict};
use dynarisk::filtration::FiltrationTree;
use dynarisk::functionals::{eval_at_time, Representation};
use dynarisk::io::Loader;
use dynarisk::scalar::{int, rat};
use dynarisk::{Error, Ext, Rational};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn shipped_tree_is_the_builtin_one() {
    let mut l = Loader::new();
    let t = l.tree_file(&fixture("seven_node.json")).unwrap();
    assert!(t.same_as(&FiltrationTree::seven_node()));
}

#[test]
fn final_uniform_mean_of_counterexample() {
    let mut l = Loader::new();
    let f = l.functional(&fixture("final_uniform.json")).unwrap();
    let x = l.process(&fixture("counterexample.json")).unwrap();
    let v = eval_at_time::<Rational, _>(&f, &x, 0).unwrap();
    assert_eq!(v.values(), &[Ext::Finite(rat(7, 4))]);
}

#[test]
fn inf_time_fixture_is_refuted() {
    let mut l = Loader::new();
    let f = l.functional(&fixture("inf_time.json")).unwrap();
    let x = l.process(&fixture("counterexample.json")).unwrap();
    assert_eq!(eval_at_time::<Rational, _>(&f, &x, 0).unwrap().values(), &[Ext::Finite(rat(3, 4))]);
    let r = check_time_consistency(&f, &[x], SweepMode::OneStep).unwrap();
    assert_eq!(r.verdict, Verdict::Refuted);
    assert_eq!((r.witnesses[0].lhs.as_str(), r.witnesses[0].rhs.as_str()), ("3/4", "1"));
}

#[test]
fn certify_verdicts_of_shipped_functionals() {
    let battery = generate_battery(&FiltrationTree::seven_node(), 30, 7);
    let expect = [
        ("stable_robust.json", Verdict::Certified),
        ("unstable_robust.json", Verdict::Refuted),
        ("entropic.json", Verdict::Certified),
        ("weighted.json", Verdict::Certified),
        ("worst_stopping.json", Verdict::Certified),
        ("inf_time.json", Verdict::Refuted),
        ("final_uniform.json", Verdict::Certified),
    ];
    let mut l = Loader::new();
    for (name, verdict) in expect {
        let f = l.functional(&fixture(name)).unwrap();
        let r = certify_sufficiency(&f, &battery).unwrap();
        assert_eq!(r.verdict, verdict, "{name}: {}", r.method);
    }
}

#[test]
fn worst_stopping_fixture_is_below_the_process() {
    let mut l = Loader::new();
    let f = l.functional(&fixture("worst_stopping.json")).unwrap();
    assert!(matches!(f, Representation::WorstStopping(_)));
    let x = l.process(&fixture("counterexample.json")).unwrap();
    let v = eval_at_time::<Rational, _>(&f, &x, 0).unwrap();
    assert!(v.values()[0] <= Ext::Finite(int(2)));
}

#[test]
fn density_and_scenario_set_fixtures() {
    let mut l = Loader::new();
    let a = l.density(&fixture("uniform_density.json")).unwrap();
    assert_eq!(a.tree().len(), 7);
    let q = l.scenario_set(&fixture("scenarios.json")).unwrap();
    assert_eq!(q.len(), 3);
}

#[test]
fn missing_and_malformed_files() {
    let mut l = Loader::new();
    assert!(matches!(l.process(&fixture("missing.json")), Err(Error::FixtureParse(_))));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"tree": "seven_node", "values": {"root": "1/0"}}"#).unwrap();
    assert!(l.process(&bad).is_err());
    std::fs::write(&bad, r#"{"tree": "nowhere.json", "values": {}}"#).unwrap();
    assert!(matches!(l.process(&bad), Err(Error::FixtureParse(_))));
}
