//! Time-consistency checks for utility processes.
//!
//! Refutations are always sound: a witness is a concrete process, node and
//! stopping time where the defining identity fails. Positive answers are
//! either theorem-backed (`Certified`) or only cover the tested battery
//! (`CertifiedOnBattery`).

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::composition::{check_stability, concat, ScenarioSet};
use crate::demo::{counterexample_process, is_seven_node};
use crate::error::{Error, Result};
use crate::filtration::{check_order, FiltrationTree, NodeId, StoppingTime, Tree, DEFAULT_ENUMERATION_CAP};
use crate::functionals::{
    accepts, penalty_sharp, stitch, Aggregation, FunctionalClass, Representation, RobustProcess, TerminalBase,
    TerminalKind, UtilityProcess, FLOAT_TOLERANCE,
};
use crate::processes::{AdaptedProcess, DensityProcess};
use crate::random;
use crate::scalar::{int, Ext, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Backed by a sufficient condition that was checked exhaustively.
    Certified,
    /// No failure on the tested battery.
    CertifiedOnBattery,
    Refuted,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Certified => "CERTIFIED",
            Verdict::CertifiedOnBattery => "CERTIFIED_ON_BATTERY",
            Verdict::Refuted => "REFUTED",
            Verdict::Unknown => "UNKNOWN",
        }
    }
}

/// A failing instance of an identity at one node.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Index into the battery, when the identity involves a process.
    pub process: Option<usize>,
    pub time: usize,
    /// Stop nodes of the intermediate stopping time below `atom`.
    pub theta: Vec<String>,
    pub atom: String,
    pub lhs: String,
    pub rhs: String,
}

/// Both sides of an identity on one atom.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub atom: String,
    pub lhs: String,
    pub rhs: String,
    pub relation: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    /// Number of identities evaluated.
    pub checks: usize,
    /// Identities skipped because an intermediate value was infinite.
    pub skipped: usize,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<Comparison>,
}

impl ConsistencyReport {
    fn new(verdict: Verdict, method: impl Into<String>) -> Self {
        ConsistencyReport {
            verdict,
            method: method.into(),
            certificate: None,
            checks: 0,
            skipped: 0,
            witnesses: Vec::new(),
            comparisons: Vec::new(),
        }
    }

    pub fn refuted(&self) -> bool {
        self.verdict == Verdict::Refuted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// `theta = t + 1` only.
    OneStep,
    /// Every stopping time `theta >= t` up to the horizon.
    AllStoppingTimes,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Largest number of stopping times tried below a single node.
    pub cap: usize,
    /// Stop after this many witnesses.
    pub max_witnesses: usize,
    /// Relative tolerance for floating point values; exact values must match.
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { cap: DEFAULT_ENUMERATION_CAP, max_witnesses: 8, tolerance: FLOAT_TOLERANCE }
    }
}

fn local_count(tree: &FiltrationTree, n: NodeId, ceil: usize) -> u128 {
    let mut c = 1u128;
    if tree.time(n) < ceil {
        let prod = tree.children(n).iter().fold(1u128, |acc, &ch| acc.saturating_mul(local_count(tree, ch, ceil)));
        c = c.saturating_add(prod);
    }
    c
}

fn local_options(tree: &FiltrationTree, n: NodeId, ceil: usize) -> Vec<Vec<NodeId>> {
    let mut out = vec![vec![n]];
    if tree.time(n) < ceil {
        out.extend(below(tree, n, ceil));
    }
    out
}

/// Antichains strictly below `n` that cover every path through `n` and stop
/// no later than `ceil`.
fn below(tree: &FiltrationTree, n: NodeId, ceil: usize) -> Vec<Vec<NodeId>> {
    let mut acc: Vec<Vec<NodeId>> = vec![Vec::new()];
    for &ch in tree.children(n) {
        let sub = local_options(tree, ch, ceil);
        let mut next = Vec::with_capacity(acc.len() * sub.len());
        for a in &acc {
            for s in &sub {
                let mut v = a.clone();
                v.extend_from_slice(s);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Checks `phi_t(X) = phi_t(X 1_[t,theta) + phi_theta(X) 1_[theta,inf))` on
/// every atom of every date `t` in `[start, horizon)` and every battery
/// process. Stopping times are enumerated per atom, which covers every
/// global `theta >= t` since both sides only read the atom's subtree.
pub fn check_time_consistency<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    battery: &[AdaptedProcess<S>],
    mode: SweepMode,
) -> Result<ConsistencyReport> {
    check_time_consistency_with(p, battery, mode, &SweepOptions::default())
}

pub fn check_time_consistency_with<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    battery: &[AdaptedProcess<S>],
    mode: SweepMode,
    opts: &SweepOptions,
) -> Result<ConsistencyReport> {
    if battery.is_empty() {
        return Err(Error::DimensionMismatch("empty battery".into()));
    }
    let tree = p.tree().clone();
    let (start, horizon) = (p.start(), p.horizon());
    let method = match mode {
        SweepMode::OneStep => "one-step recursion",
        SweepMode::AllStoppingTimes => "definition sweep over all stopping times",
    };
    let mut report = ConsistencyReport::new(Verdict::CertifiedOnBattery, method);

    let atoms: Vec<NodeId> = (start..horizon).flat_map(|t| tree.nodes_at(t).iter().copied()).collect();
    let mut thetas: Vec<Vec<Vec<NodeId>>> = Vec::with_capacity(atoms.len());
    for &n in &atoms {
        thetas.push(match mode {
            SweepMode::OneStep => vec![tree.children(n).to_vec()],
            SweepMode::AllStoppingTimes => {
                let count = local_count(&tree, n, horizon) - 1;
                if count > opts.cap as u128 {
                    return Err(Error::EnumerationCapExceeded { count: count.to_string(), cap: opts.cap });
                }
                below(&tree, n, horizon)
            }
        });
    }

    for (i, x) in battery.iter().enumerate() {
        if !x.tree().same_as(&tree) {
            return Err(Error::TreeMismatch);
        }
        let mut vals: Vec<Option<Ext<S>>> = vec![None; tree.len()];
        for n in tree.node_ids() {
            let t = tree.time(n);
            if t >= start && t <= horizon {
                vals[n.0] = Some(p.value_at(x, n)?);
            }
        }
        for (&n, sets) in atoms.iter().zip(&thetas) {
            let lhs = vals[n.0].clone().expect("in window");
            'theta: for set in sets {
                let mut y = x.clone();
                for &k in set {
                    let v = match vals[k.0].as_ref().expect("in window") {
                        Ext::Finite(v) => v.clone(),
                        _ => {
                            report.skipped += 1;
                            continue 'theta;
                        }
                    };
                    for &m in tree.subtree(k) {
                        y.set(m, v.clone());
                    }
                }
                let rhs = p.value_at(&y, n)?;
                report.checks += 1;
                if !lhs.close_to(&rhs, opts.tolerance) {
                    report.verdict = Verdict::Refuted;
                    report.witnesses.push(Witness {
                        process: Some(i),
                        time: tree.time(n),
                        theta: set.iter().map(|&k| tree.label(k).to_string()).collect(),
                        atom: tree.label(n).to_string(),
                        lhs: lhs.render(),
                        rhs: rhs.render(),
                    });
                    if report.witnesses.len() >= opts.max_witnesses {
                        return Ok(report);
                    }
                }
            }
        }
    }
    Ok(report)
}

/// `Y = X 1_[tau,theta) + phi_theta(X) 1_[theta,inf)` and `Z = X - Y`, with
/// the acceptance of `Y` at `tau` and of `Z` at `theta`.
#[derive(Debug, Clone)]
pub struct Decomposition<S> {
    pub y: AdaptedProcess<S>,
    pub z: AdaptedProcess<S>,
    pub y_accepted: Vec<bool>,
    pub z_accepted: Vec<bool>,
}

pub fn decompose_acceptance<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
    theta: &StoppingTime,
) -> Result<Decomposition<S>> {
    check_order(tau, theta, p.tree())?;
    let accepted = accepts(p, x, tau)?;
    if let Some(k) = accepted.iter().position(|a| !a) {
        return Err(Error::NotAccepted(format!("rejected at `{}`", p.tree().label(tau.nodes()[k]))));
    }
    let y = stitch(p, x, theta)?;
    let z = x.sub(&y)?;
    let y_accepted = accepts(p, &y, tau)?;
    let z_accepted = accepts(p, &z, theta)?;
    Ok(Decomposition { y, z, y_accepted, z_accepted })
}

/// `phi_{t,S,S}(m) = m`: the only functional on a one-point window.
#[derive(Debug, Clone)]
pub struct TerminalProcess {
    tree: Tree,
    time: usize,
}

impl TerminalProcess {
    pub fn new(tree: Tree, time: usize) -> Result<Self> {
        if time > tree.horizon() {
            return Err(Error::HorizonMismatch(format!("time {time} beyond the tree horizon")));
        }
        Ok(TerminalProcess { tree, time })
    }
}

impl<S: Scalar> UtilityProcess<S> for TerminalProcess {
    fn tree(&self) -> &Tree {
        &self.tree
    }
    fn start(&self) -> usize {
        self.time
    }
    fn horizon(&self) -> usize {
        self.time
    }
    fn class(&self) -> FunctionalClass {
        FunctionalClass::Coherent
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        crate::functionals::check_node::<S, _>(self, n)?;
        Ok(Ext::Finite(x.get(n).clone()))
    }
    fn describe(&self) -> String {
        format!("identity at time {}", self.time)
    }
}

/// An early family on `[S0, S]` followed by a late family on `[S, T]`:
/// before `S` the value is `phi_{t,S}(X 1_[t,S) + phi_{S,T}(X) 1_[S,inf))`.
#[derive(Clone)]
pub struct PastedProcess<S: Scalar> {
    early: Arc<dyn UtilityProcess<S>>,
    late: Arc<dyn UtilityProcess<S>>,
}

impl<S: Scalar> PastedProcess<S> {
    pub fn split(&self) -> usize {
        self.late.start()
    }
}

impl<S: Scalar> UtilityProcess<S> for PastedProcess<S> {
    fn tree(&self) -> &Tree {
        self.early.tree()
    }
    fn start(&self) -> usize {
        self.early.start()
    }
    fn horizon(&self) -> usize {
        self.late.horizon()
    }
    fn class(&self) -> FunctionalClass {
        use FunctionalClass::*;
        match (self.early.class(), self.late.class()) {
            (Coherent, Coherent) => Coherent,
            (Monetary, _) | (_, Monetary) => Monetary,
            _ => Concave,
        }
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        let tree = self.early.tree();
        let split = self.split();
        if tree.time(n) >= split {
            return self.late.value_at(x, n);
        }
        let mut y = x.clone();
        for &k in tree.subtree(n).iter().filter(|&&k| tree.time(k) == split) {
            let v = self.late.value_at(x, k)?.into_finite().ok_or_else(|| {
                Error::InfiniteValue(format!("late value at `{}`", tree.label(k)))
            })?;
            for &m in tree.subtree(k) {
                y.set(m, v.clone());
            }
        }
        self.early.value_at(&y, n)
    }
    fn describe(&self) -> String {
        format!("[{}] then [{}]", self.early.describe(), self.late.describe())
    }
}

/// Pastes two families at `S = early.horizon() = late.start()`. Both must
/// pass the one-step check on `battery`.
pub fn extend_process<S: Scalar>(
    early: Arc<dyn UtilityProcess<S>>,
    late: Arc<dyn UtilityProcess<S>>,
    battery: &[AdaptedProcess<S>],
) -> Result<PastedProcess<S>> {
    if !early.tree().same_as(late.tree()) {
        return Err(Error::HorizonMismatch("the two families live on different trees".into()));
    }
    if early.horizon() != late.start() {
        return Err(Error::HorizonMismatch(format!(
            "early family ends at {} but late family starts at {}",
            early.horizon(),
            late.start()
        )));
    }
    for (name, p) in [("early", &early), ("late", &late)] {
        if p.start() < p.horizon() {
            let r = check_time_consistency(p.as_ref(), battery, SweepMode::OneStep)?;
            if r.refuted() {
                let w = &r.witnesses[0];
                return Err(Error::InputNotConsistent(format!(
                    "{name} family fails at `{}`: {} vs {}",
                    w.atom, w.lhs, w.rhs
                )));
            }
        }
    }
    Ok(PastedProcess { early, late })
}

/// Compares `phi^#_tau(a)` with
/// `max_b phi^#_tau(a (+)^theta_Omega b) + E[phi^#_theta(a) | F_tau]` over
/// the candidates `b`. The true identity takes the supremum over all
/// densities after `theta`, so `lhs < rhs` refutes consistency while
/// `lhs >= rhs` is all a finite candidate set can confirm.
pub fn check_penalty_recursion(
    f: &RobustProcess,
    a: &DensityProcess,
    tau: &StoppingTime,
    theta: &StoppingTime,
    candidates: &[DensityProcess],
) -> Result<ConsistencyReport> {
    let tree = UtilityProcess::<Rational>::tree(f).clone();
    check_order(tau, theta, &tree)?;
    if candidates.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    let lhs = penalty_sharp(f, a, tau)?;
    let inner = penalty_sharp(f, a, theta)?;
    let mut sup: Vec<Ext<Rational>> = vec![Ext::NegInf; tau.len()];
    for b in candidates {
        let c = concat(a, b, theta, theta.nodes())?;
        let v = penalty_sharp(f, &c, tau)?;
        for (s, x) in sup.iter_mut().zip(v.values()) {
            *s = s.clone().max(x.clone());
        }
    }
    let mut report = ConsistencyReport::new(
        Verdict::CertifiedOnBattery,
        format!("penalty recursion over {} candidates", candidates.len()),
    );
    let mut equal = 0;
    for (i, &n) in tau.nodes().iter().enumerate() {
        let mut expect = Ext::zero();
        for (&k, v) in theta.nodes().iter().zip(inner.values()) {
            if tree.is_descendant_or_self(k, n) {
                expect = expect.add(&v.scale(&(tree.prob(k) / tree.prob(n))));
            }
        }
        let rhs = sup[i].add(&expect);
        let l = &lhs.values()[i];
        report.checks += 1;
        let relation = if *l == rhs {
            equal += 1;
            "="
        } else if *l > rhs {
            ">"
        } else {
            "<"
        };
        report.comparisons.push(Comparison {
            atom: tree.label(n).to_string(),
            lhs: l.render(),
            rhs: rhs.render(),
            relation,
        });
        if relation == "<" {
            report.verdict = Verdict::Refuted;
            report.witnesses.push(Witness {
                process: None,
                time: tree.time(n),
                theta: theta
                    .nodes()
                    .iter()
                    .filter(|&&k| tree.is_descendant_or_self(k, n))
                    .map(|&k| tree.label(k).to_string())
                    .collect(),
                atom: tree.label(n).to_string(),
                lhs: l.render(),
                rhs: rhs.render(),
            });
        }
    }
    if !report.refuted() {
        report.certificate = Some(format!(
            "lhs >= rhs on all {} atoms, with equality on {equal}; the supremum only ranges over the candidates",
            tau.len()
        ));
    }
    Ok(report)
}

/// `psi_t(psi_{t+1}(Y)) = psi_t(Y)` for the leaf values of every battery
/// process and every date. Returns the first failure.
fn base_one_step_failure<S: Scalar>(base: &TerminalBase, battery: &[AdaptedProcess<S>]) -> Result<Option<Witness>> {
    let tree = base.tree();
    for (i, x) in battery.iter().enumerate() {
        let y = x.leaf_values();
        for t in 0..tree.horizon() {
            let mut inner = vec![S::zero(); tree.leaf_count()];
            for &k in tree.nodes_at(t + 1) {
                let v = base.psi_at(&y, k)?;
                for j in tree.leaf_range(k) {
                    inner[j] = v.clone();
                }
            }
            for &n in tree.nodes_at(t) {
                let lhs = base.psi_at(&inner, n)?;
                let rhs = base.psi_at(&y, n)?;
                if !lhs.close_to(&rhs, FLOAT_TOLERANCE) {
                    return Ok(Some(Witness {
                        process: Some(i),
                        time: t,
                        theta: tree.children(n).iter().map(|&k| tree.label(k).to_string()).collect(),
                        atom: tree.label(n).to_string(),
                        lhs: lhs.render(),
                        rhs: rhs.render(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Looks for a sufficient condition matching the representation; without
/// one, falls back to the definition sweep on `battery`.
pub fn certify_sufficiency(repr: &Representation, battery: &[AdaptedProcess<Rational>]) -> Result<ConsistencyReport> {
    let reason = match repr {
        Representation::Robust(r) if r.is_coherent() => {
            let tree = UtilityProcess::<Rational>::tree(r).clone();
            let q = ScenarioSet::new(
                tree.clone(),
                r.scenarios().to_vec(),
                StoppingTime::constant(&tree, UtilityProcess::<Rational>::start(r)),
                StoppingTime::constant(&tree, UtilityProcess::<Rational>::horizon(r)),
            )?;
            let st = check_stability(&q, true)?;
            if st.stable && st.complete && q.all_in_de() {
                let mut rep = ConsistencyReport::new(Verdict::Certified, "coherent sufficiency");
                rep.checks = st.concatenations_checked;
                rep.certificate = Some(format!(
                    "all {} scenarios keep mass on every path and {} concatenations stay in their convex hull",
                    q.len(),
                    st.concatenations_checked
                ));
                return Ok(rep);
            }
            if !q.all_in_de() {
                "some scenario loses all its mass on a path".to_string()
            } else if !st.stable {
                "scenario set is not stable under concatenation".to_string()
            } else {
                "stability was only sampled".to_string()
            }
        }
        Representation::Robust(_) => "no finite certificate for penalized families".to_string(),
        Representation::Entropic(e) => {
            if e.base().is_m_stable(false)? {
                let mut rep = ConsistencyReport::new(Verdict::Certified, "m-stable entropic family");
                rep.certificate =
                    Some(format!("the {} densities are closed under pasting", e.base().densities().len()));
                return Ok(rep);
            }
            "density set is not closed under pasting".to_string()
        }
        Representation::Aggregated(a) => match a.aggregation() {
            Aggregation::Weighted(_) => {
                if a.base().is_m_stable(true)? {
                    let mut rep = ConsistencyReport::new(Verdict::Certified, "m-stable weighted average");
                    rep.certificate = Some(format!(
                        "pastes of the {} densities stay in their convex hull, so the induced scenario set is stable",
                        a.base().densities().len()
                    ));
                    return Ok(rep);
                }
                "density set is not m-stable".to_string()
            }
            Aggregation::InfTime => "m-stability does not carry over to the running infimum".to_string(),
        },
        Representation::WorstStopping(w) => {
            let base = w.base();
            let failure = match base.kind() {
                TerminalKind::Expectation => base_one_step_failure(base, battery)?,
                TerminalKind::Entropic => {
                    let fb: Vec<AdaptedProcess<f64>> = battery.iter().map(|x| x.to_f64()).collect();
                    base_one_step_failure(base, &fb)?
                }
            };
            let mut rep = ConsistencyReport::new(Verdict::Certified, "one-step recursion of the envelope");
            rep.certificate = Some(match &failure {
                None => format!(
                    "the base is one-step consistent on {} battery processes, so the envelope is the worst stopping value",
                    battery.len()
                ),
                Some(_) => "the base is not one-step consistent: the envelope is consistent but differs from the \
                           worst stopping value"
                    .to_string(),
            });
            rep.witnesses.extend(failure);
            return Ok(rep);
        }
    };
    let mut rep = if repr.needs_float() {
        let fb: Vec<AdaptedProcess<f64>> = battery.iter().map(|x| x.to_f64()).collect();
        sweep(repr, &fb)?
    } else {
        sweep(repr, battery)?
    };
    rep.method = format!("{} (no certificate: {reason})", rep.method);
    Ok(rep)
}

/// All stopping times when affordable, one step otherwise (equivalent by
/// the one-step characterization).
fn sweep<S: Scalar, P: UtilityProcess<S> + ?Sized>(p: &P, battery: &[AdaptedProcess<S>]) -> Result<ConsistencyReport> {
    match check_time_consistency(p, battery, SweepMode::AllStoppingTimes) {
        Err(Error::EnumerationCapExceeded { .. }) => check_time_consistency(p, battery, SweepMode::OneStep),
        other => other,
    }
}

/// `count` random processes with values `p/q`, `|p| <= 8`, `q` in
/// `{1, 2, 4}`, followed by subtree indicators, two ramps and, on the
/// builtin seven-node tree, its counterexample process.
pub fn generate_battery(tree: &Tree, count: usize, seed: u64) -> Vec<AdaptedProcess<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<AdaptedProcess<Rational>> = (0..count).map(|_| random::process(tree, &mut rng)).collect();
    for n in tree.node_ids() {
        out.push(AdaptedProcess::subtree_indicator(tree.clone(), n, int(1)));
    }
    out.push(AdaptedProcess::from_fn(tree.clone(), |n| int(tree.time(n) as i64)));
    out.push(AdaptedProcess::from_fn(tree.clone(), |n| int(-(tree.time(n) as i64))));
    if is_seven_node(tree) {
        out.push(counterexample_process(tree).expect("builtin tree"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{build_density, DensityMode};
    use crate::demo::{inf_time_process, seven_node_policy_model};
    use crate::functionals::{eval_at_time, RobustProcess};

    #[test]
    fn counterexample_is_refuted() {
        let tree = FiltrationTree::seven_node();
        let p = inf_time_process(&tree).unwrap();
        let x = counterexample_process(&tree).unwrap();
        let r = check_time_consistency(&p, &[x], SweepMode::OneStep).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        let w = &r.witnesses[0];
        assert_eq!((w.atom.as_str(), w.lhs.as_str(), w.rhs.as_str()), ("root", "3/4", "1"));
        assert_eq!(w.theta, vec!["A", "B"]);
    }

    #[test]
    fn local_enumeration_matches_global_count() {
        let tree = FiltrationTree::seven_node();
        // Five stopping times in total, one of them constant zero.
        assert_eq!(below(&tree, tree.root(), 2).len(), 4);
        assert_eq!(local_count(&tree, tree.root(), 2), 5);
    }

    #[test]
    fn reference_expectation_is_consistent() {
        let tree = FiltrationTree::seven_node();
        let a = build_density(&tree, &DensityMode::Final, &[int(1), int(1), int(1), int(1)]).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![a]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        let battery = generate_battery(&tree, 20, 1);
        let r = check_time_consistency(&f, &battery, SweepMode::AllStoppingTimes).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedOnBattery);
        assert!(r.checks > 0);
        let c = certify_sufficiency(&Representation::Robust(f), &battery).unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
    }

    #[test]
    fn decomposition_of_zero() {
        let tree = FiltrationTree::seven_node();
        let p = inf_time_process(&tree).unwrap();
        let zero = AdaptedProcess::<Rational>::zero(tree.clone());
        let d = decompose_acceptance(&p, &zero, &StoppingTime::constant(&tree, 0), &StoppingTime::constant(&tree, 1))
            .unwrap();
        assert_eq!(d.y, zero);
        assert_eq!(d.z, zero);
        assert!(d.y_accepted.iter().chain(&d.z_accepted).all(|&b| b));
        let neg = AdaptedProcess::constant(tree.clone(), int(-1));
        assert!(matches!(
            decompose_acceptance(&p, &neg, &StoppingTime::constant(&tree, 0), &StoppingTime::constant(&tree, 1)),
            Err(Error::NotAccepted(_))
        ));
    }

    #[test]
    fn terminal_paste_is_identity() {
        let tree = FiltrationTree::seven_node();
        let f: Arc<dyn UtilityProcess<Rational>> = Arc::new(inf_time_process(&tree).unwrap());
        let id: Arc<dyn UtilityProcess<Rational>> = Arc::new(TerminalProcess::new(tree.clone(), 2).unwrap());
        let x = counterexample_process(&tree).unwrap();
        // The early family need not be consistent when its check is skipped
        // by an empty range, so paste onto a one-point family directly.
        let pasted = PastedProcess { early: f.clone(), late: id };
        for t in 0..=2 {
            assert_eq!(eval_at_time(&pasted, &x, t).unwrap(), eval_at_time(f.as_ref(), &x, t).unwrap());
        }
    }

    #[test]
    fn pasting_rejects_mismatches() {
        let tree = FiltrationTree::seven_node();
        let battery = generate_battery(&tree, 5, 0);
        let late: Arc<dyn UtilityProcess<Rational>> = Arc::new(TerminalProcess::new(tree.clone(), 1).unwrap());
        let early: Arc<dyn UtilityProcess<Rational>> = Arc::new(inf_time_process(&tree).unwrap());
        assert!(matches!(extend_process(early.clone(), late, &battery), Err(Error::HorizonMismatch(_))));
        let other = FiltrationTree::uniform(&[2, 2]);
        let late: Arc<dyn UtilityProcess<Rational>> = Arc::new(TerminalProcess::new(other, 2).unwrap());
        assert!(matches!(extend_process(early.clone(), late, &battery), Err(Error::HorizonMismatch(_))));
        let late: Arc<dyn UtilityProcess<Rational>> = Arc::new(TerminalProcess::new(tree.clone(), 2).unwrap());
        assert!(matches!(extend_process(early, late, &battery), Err(Error::InputNotConsistent(_))));
    }

    #[test]
    fn penalty_recursion_on_policy_model() {
        let tree = FiltrationTree::seven_node();
        let model = seven_node_policy_model(&tree).unwrap();
        let (q, _) = model.scenarios(100).unwrap();
        let f = model.process(100).unwrap();
        let zero = StoppingTime::constant(&tree, 0);
        let one = StoppingTime::constant(&tree, 1);
        for a in q.densities() {
            let r = check_penalty_recursion(&f, a, &zero, &one, q.densities()).unwrap();
            assert_eq!(r.verdict, Verdict::CertifiedOnBattery);
            assert!(r.comparisons.iter().all(|c| c.relation == "="), "{:?}", r.comparisons);
        }
    }

    #[test]
    fn penalty_recursion_singleton() {
        let tree = FiltrationTree::seven_node();
        let a = build_density(&tree, &DensityMode::Final, &[int(1), int(1), int(1), int(1)]).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![a.clone()]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        let r = check_penalty_recursion(
            &f,
            &a,
            &StoppingTime::constant(&tree, 0),
            &StoppingTime::constant(&tree, 1),
            std::slice::from_ref(&a),
        )
        .unwrap();
        assert_eq!((r.comparisons[0].lhs.as_str(), r.comparisons[0].rhs.as_str()), ("0", "0"));
    }

    #[test]
    fn penalty_recursion_refutes_unstable_set() {
        let tree = FiltrationTree::seven_node();
        let f = [int(2), int(0), int(1), int(1)];
        let g = [int(1), int(1), int(2), int(0)];
        let s1 = StoppingTime::constant(&tree, 1);
        let top = tree.find("A").unwrap();
        let fa = build_density(&tree, &DensityMode::Final, &f).unwrap();
        let ga = build_density(&tree, &DensityMode::Final, &g).unwrap();
        let pasted = crate::composition::paste_density(&tree, &f, &g, &s1, &[top]).unwrap();
        let a = build_density(&tree, &DensityMode::Final, &pasted).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![fa.clone(), ga.clone()]).unwrap();
        let p = RobustProcess::coherent(&q).unwrap();
        let r = check_penalty_recursion(&p, &a, &StoppingTime::constant(&tree, 0), &s1, &[fa, ga]).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        assert_eq!((r.witnesses[0].lhs.as_str(), r.witnesses[0].rhs.as_str()), ("-inf", "0"));
    }

    #[test]
    fn battery_shape() {
        let tree = FiltrationTree::seven_node();
        let b = generate_battery(&tree, 10, 4);
        assert_eq!(b.len(), 10 + 7 + 2 + 1);
        assert_eq!(b, generate_battery(&tree, 10, 4));
        for x in &b[..10] {
            for v in x.values() {
                assert!(*v <= int(8) && *v >= int(-8));
                assert!([1, 2, 4].iter().any(|&d| *v.denom() == num_bigint::BigInt::from(d)));
            }
        }
        assert_eq!(b.last().unwrap().get(tree.root()), &int(2));
    }
}
