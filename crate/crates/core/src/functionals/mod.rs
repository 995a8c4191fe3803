//! Conditional utility functionals and the families `(phi_{t,T})_t` they
//! form.
//!
//! Every representation answers one question: the value of `phi_{t,T}(X)`
//! on the atom of a single node `n` with `t = time(n)`. Conditioning at a
//! stopping time is then just evaluation at its stop nodes.

mod penalty;
mod repr;
mod robust;
mod snell;
mod terminal;

pub use penalty::{acceptance_lp, gamma_ext, penalty_sharp};
pub use repr::Representation;
pub use robust::{PenaltyFunction, RobustProcess};
pub use snell::{snell_worst_stopping, worst_stopping_brute_force, SnellResult, WorstStoppingProcess};
pub use terminal::{Aggregation, AggregatedProcess, EntropicProcess, TerminalBase, TerminalKind};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{ConditionalValue, NodeId, StoppingTime, Tree};
use crate::processes::{sup_norm, AdaptedProcess};
use crate::scalar::{rat, Ext, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalClass {
    Monetary,
    Concave,
    Coherent,
}

pub trait UtilityProcess<S: Scalar>: Send + Sync {
    fn tree(&self) -> &Tree;
    /// First date of the family.
    fn start(&self) -> usize;
    /// Last date; every member's window ends here.
    fn horizon(&self) -> usize;
    fn class(&self) -> FunctionalClass;
    /// `phi_{t,T}(X)` on the atom `n`, `t = time(n)`. Reads `X` only on the
    /// subtree of `n` up to the horizon.
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>>;
    fn describe(&self) -> String;
}

pub(crate) fn check_node<S: Scalar, P: UtilityProcess<S> + ?Sized>(p: &P, n: NodeId) -> Result<()> {
    let t = p.tree().time(n);
    if t < p.start() || t > p.horizon() {
        return Err(Error::WindowViolation(format!(
            "node `{}` at time {t} is outside [{}, {}]",
            p.tree().label(n),
            p.start(),
            p.horizon()
        )));
    }
    Ok(())
}

fn check_anchor<S: Scalar, P: UtilityProcess<S> + ?Sized>(p: &P, x: &AdaptedProcess<S>, tau: &StoppingTime) -> Result<()> {
    if !x.tree().same_as(p.tree()) {
        return Err(Error::TreeMismatch);
    }
    for &n in tau.nodes() {
        check_node(p, n)?;
    }
    Ok(())
}

/// `phi_{tau,T}(X)`, one value per stop node of `tau`.
pub fn eval<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
) -> Result<ConditionalValue<S>> {
    check_anchor(p, x, tau)?;
    let values = tau.nodes().iter().map(|&n| p.value_at(x, n)).collect::<Result<Vec<_>>>()?;
    ConditionalValue::new(tau.clone(), values)
}

/// `phi_{t,T}` at the constant date `t`.
pub fn eval_at_time<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    t: usize,
) -> Result<ConditionalValue<S>> {
    if t > p.tree().horizon() {
        return Err(Error::WindowViolation(format!("time {t} beyond the tree horizon")));
    }
    eval(p, x, &StoppingTime::constant(p.tree(), t))
}

/// The functional `phi_{tau,T}` obtained by conditioning the family at `tau`.
pub struct Conditioned<'a, S: Scalar> {
    process: &'a dyn UtilityProcess<S>,
    tau: StoppingTime,
}

pub fn condition_at<'a, S: Scalar>(process: &'a dyn UtilityProcess<S>, tau: &StoppingTime) -> Result<Conditioned<'a, S>> {
    for &n in tau.nodes() {
        check_node(process, n)?;
    }
    Ok(Conditioned { process, tau: tau.clone() })
}

impl<S: Scalar> Conditioned<'_, S> {
    pub fn tau(&self) -> &StoppingTime {
        &self.tau
    }
    pub fn eval(&self, x: &AdaptedProcess<S>) -> Result<ConditionalValue<S>> {
        eval(self.process, x, &self.tau)
    }
    pub fn accepts(&self, x: &AdaptedProcess<S>) -> Result<Vec<bool>> {
        accepts(self.process, x, &self.tau)
    }
}

pub const FLOAT_TOLERANCE: f64 = 1e-9;

fn nonnegative<S: Scalar>(v: &Ext<S>, tol: f64) -> bool {
    match v {
        Ext::PosInf => true,
        Ext::NegInf => false,
        Ext::Finite(x) => {
            if S::EXACT {
                *x >= S::zero()
            } else {
                x.to_f64() >= -tol
            }
        }
    }
}

/// Membership of `X` in the acceptance set, atom by atom.
pub fn accepts<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
) -> Result<Vec<bool>> {
    accepts_with_tolerance(p, x, tau, FLOAT_TOLERANCE)
}

pub fn accepts_with_tolerance<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
    tol: f64,
) -> Result<Vec<bool>> {
    Ok(eval(p, x, tau)?.values().iter().map(|v| nonnegative(v, tol)).collect())
}

/// `sup { m : X - m 1_[tau,inf) is accepted }` per atom, by bisection on
/// acceptance alone.
pub fn recover_from_acceptance<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
) -> Result<ConditionalValue<f64>> {
    check_anchor(p, x, tau)?;
    let theta = StoppingTime::constant(p.tree(), p.horizon());
    let norms = sup_norm(x, tau, &theta)?;
    let tree = p.tree();
    let mut out = Vec::with_capacity(tau.len());
    for (&n, bound) in tau.nodes().iter().zip(norms.values()) {
        let b = bound.to_f64() + 1.0;
        let accepted = |m: f64| -> Result<bool> {
            let shift = S::from_f64_exact(m);
            let y = x.map(|k, v| if tree.is_descendant_or_self(k, n) { v.clone() - shift.clone() } else { v.clone() });
            Ok(nonnegative(&p.value_at(&y, n)?, 0.0))
        };
        if accepted(b)? {
            out.push(Ext::PosInf);
            continue;
        }
        if !accepted(-b)? {
            out.push(Ext::NegInf);
            continue;
        }
        let (mut lo, mut hi) = (-b, b);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if accepted(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(Ext::Finite(0.5 * (lo + hi)));
    }
    ConditionalValue::new(tau.clone(), out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelevanceWitness {
    pub atom: String,
    pub epsilon: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelevanceReport {
    pub relevant: bool,
    pub witness: Option<RelevanceWitness>,
}

/// Checks `phi_{tau,T}(-eps 1_A 1_[theta,inf)) < 0` on `A` for every atom
/// `A` of `theta` and every `eps` on the grid (`{1}` for coherent families,
/// `1, 1/2, ..., 2^-10` otherwise).
pub fn check_relevance<P: UtilityProcess<Rational> + ?Sized>(
    p: &P,
    tau: &StoppingTime,
    theta: &StoppingTime,
) -> Result<RelevanceReport> {
    crate::filtration::check_order(tau, theta, p.tree())?;
    let grid: Vec<Rational> = if p.class() == FunctionalClass::Coherent {
        vec![rat(1, 1)]
    } else {
        (0..=10).map(|k| rat(1, 1 << k)).collect()
    };
    let tree = p.tree();
    for &k in theta.nodes() {
        let top = tau.covering(k).expect("tau <= theta");
        check_node(p, top)?;
        for eps in &grid {
            let x = AdaptedProcess::subtree_indicator(tree.clone(), k, -eps.clone());
            let v = p.value_at(&x, top)?;
            if v >= Ext::zero() {
                return Ok(RelevanceReport {
                    relevant: false,
                    witness: Some(RelevanceWitness {
                        atom: tree.label(k).to_string(),
                        epsilon: eps.render(),
                        value: v.render(),
                    }),
                });
            }
        }
    }
    Ok(RelevanceReport { relevant: true, witness: None })
}

/// `X 1_[tau, theta) + phi_{theta,T}(X) 1_[theta, inf)`: the process whose
/// value from `theta` on is replaced by its conditional utility.
pub fn stitch<S: Scalar, P: UtilityProcess<S> + ?Sized>(
    p: &P,
    x: &AdaptedProcess<S>,
    theta: &StoppingTime,
) -> Result<AdaptedProcess<S>> {
    let tree = p.tree();
    let mut late = Vec::with_capacity(theta.len());
    for &k in theta.nodes() {
        match p.value_at(x, k)? {
            Ext::Finite(v) => late.push(v),
            other => {
                return Err(Error::InfiniteValue(format!(
                    "conditional value {} at `{}`",
                    other.render(),
                    tree.label(k)
                )))
            }
        }
    }
    Ok(x.map(|n, v| match theta.covering(n) {
        None => v.clone(),
        Some(k) => late[theta.position(k).expect("stop node")].clone(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::{build_density, DensityMode, ScenarioSet};
    use crate::demo::{counterexample_process, inf_time_process};
    use crate::filtration::{enumerate_stopping_times, FiltrationTree};
    use crate::optim::{lp_solve, LinearProgram, LpOutcome, Relation};
    use crate::processes::DensityProcess;
    use crate::scalar::int;

    fn finite(v: &ConditionalValue<Rational>) -> Vec<Rational> {
        v.values().iter().map(|e| e.finite().unwrap().clone()).collect()
    }

    fn uniform_final(tree: &Tree) -> DensityProcess {
        build_density(tree, &DensityMode::Final, &vec![int(1); tree.leaf_count()]).unwrap()
    }

    #[test]
    fn infimum_over_time_counterexample() {
        let tree = FiltrationTree::seven_node();
        let p = inf_time_process(&tree).unwrap();
        let x = counterexample_process(&tree).unwrap();
        assert_eq!(finite(&eval_at_time(&p, &x, 0).unwrap()), vec![rat(3, 4)]);
        assert_eq!(finite(&eval_at_time(&p, &x, 1).unwrap()), vec![rat(5, 2), int(0)]);
        let y = stitch(&p, &x, &StoppingTime::constant(&tree, 1)).unwrap();
        assert_eq!(finite(&eval_at_time(&p, &y, 0).unwrap()), vec![int(1)]);
        assert_eq!(accepts(&p, &x, &StoppingTime::constant(&tree, 0)).unwrap(), vec![true]);
    }

    #[test]
    fn conditioning_at_a_stopping_time() {
        let tree = FiltrationTree::seven_node();
        let p = inf_time_process(&tree).unwrap();
        let x = counterexample_process(&tree).unwrap();
        let ids = |ls: &[&str]| ls.iter().map(|l| tree.find(l).unwrap()).collect::<Vec<_>>();
        let tau = StoppingTime::new(&tree, ids(&["A", "w3", "w4"])).unwrap();
        let c = condition_at(&p as &dyn UtilityProcess<Rational>, &tau).unwrap();
        assert_eq!(finite(&c.eval(&x).unwrap()), vec![rat(5, 2), int(2), int(-1)]);
        assert_eq!(c.accepts(&x).unwrap(), vec![true, true, false]);
        let early = StoppingTime::constant(&tree, 0);
        let late = AggregatedProcess::new(tree.clone(), vec![vec![int(1); 4]], Aggregation::InfTime, 1).unwrap();
        assert!(condition_at(&late as &dyn UtilityProcess<Rational>, &early).is_err());
    }

    #[test]
    fn robust_examples() {
        let tree = FiltrationTree::seven_node();
        let x = counterexample_process(&tree).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![uniform_final(&tree)]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        assert_eq!(finite(&eval_at_time(&f, &x, 0).unwrap()), vec![rat(7, 4)]);
        let zero = StoppingTime::constant(&tree, 0);
        let shifted = x.shift_from(&zero, &int(3));
        assert_eq!(finite(&eval_at_time(&f, &shifted, 0).unwrap()), vec![rat(19, 4)]);

        let ones = vec![int(1); 4];
        let stopped: Vec<DensityProcess> = enumerate_stopping_times(&tree, 0)
            .unwrap()
            .into_iter()
            .map(|xi| build_density(&tree, &DensityMode::Stopped(xi), &ones).unwrap())
            .collect();
        let each: Vec<Rational> = stopped
            .iter()
            .map(|a| {
                let single = ScenarioSet::full(tree.clone(), vec![a.clone()]).unwrap();
                finite(&eval_at_time(&RobustProcess::coherent(&single).unwrap(), &x, 0).unwrap())[0].clone()
            })
            .collect();
        let mut sorted = each.clone();
        sorted.sort();
        assert_eq!(sorted, vec![rat(7, 4), int(2), int(2), rat(9, 4), rat(5, 2)]);
        let all = RobustProcess::coherent(&ScenarioSet::full(tree.clone(), stopped).unwrap()).unwrap();
        assert_eq!(finite(&eval_at_time(&all, &x, 0).unwrap()), vec![rat(7, 4)]);
    }

    #[test]
    fn zero_mass_conventions() {
        let tree = FiltrationTree::seven_node();
        let w1 = tree.find("w1").unwrap();
        let a = DensityProcess::from_fn(tree.clone(), |n| if n == w1 { int(4) } else { int(0) }).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![a]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        let x = counterexample_process(&tree).unwrap();
        let v = eval_at_time(&f, &x, 1).unwrap();
        assert_eq!(v.values()[0], Ext::Finite(int(5)));
        assert_eq!(v.values()[1], Ext::PosInf);

        let penalty = PenaltyFunction::zero(1, tree.len());
        let g = RobustProcess::new(&q, Some(penalty)).unwrap();
        // With a penalty the empty scenario falls back to a point mass.
        assert_eq!(eval_at_time(&g, &x, 1).unwrap().values()[1], Ext::Finite(int(1)));
    }

    #[test]
    fn penalty_normalization_is_enforced() {
        let tree = FiltrationTree::seven_node();
        let q = ScenarioSet::full(tree.clone(), vec![uniform_final(&tree)]).unwrap();
        let gamma = PenaltyFunction::new(vec![vec![Ext::Finite(int(-1)); tree.len()]]).unwrap();
        assert!(matches!(RobustProcess::new(&q, Some(gamma)), Err(Error::NormalizationViolation(_))));
        assert!(PenaltyFunction::new(vec![vec![Ext::Finite(int(1)); tree.len()]]).is_err());
    }

    #[test]
    fn entropic_closed_form() {
        let tree = FiltrationTree::uniform(&[2]);
        let p = EntropicProcess::new(tree.clone(), vec![vec![int(1), int(1)]], 0).unwrap();
        let mut x = AdaptedProcess::<f64>::zero(tree.clone());
        x.set(tree.leaves()[1], std::f64::consts::LN_2);
        let v = eval_at_time(&p, &x, 0).unwrap().values()[0].to_f64();
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let c = AdaptedProcess::<f64>::constant(tree.clone(), 2.5);
        assert!((eval_at_time(&p, &c, 0).unwrap().values()[0].to_f64() - 2.5).abs() < 1e-12);
        let exact = AdaptedProcess::<Rational>::zero(tree.clone());
        assert!(matches!(eval_at_time(&p, &exact, 0), Err(Error::InexactArithmetic(_))));
        assert!(matches!(
            EntropicProcess::new(tree.clone(), vec![vec![int(2), int(0)]], 0),
            Err(Error::NonPositiveDensity(_))
        ));
    }

    #[test]
    fn snell_examples() {
        let tree = FiltrationTree::seven_node();
        let base = TerminalBase::reference(tree.clone(), TerminalKind::Expectation);
        let x = counterexample_process(&tree).unwrap();
        let r = snell_worst_stopping(&base, &x, 0).unwrap();
        assert_eq!(finite(&r.values), vec![rat(7, 4)]);
        assert_eq!(r.stopping, StoppingTime::constant(&tree, 2));
        let a = tree.find("A").unwrap();
        let b = tree.find("B").unwrap();
        assert_eq!((r.envelope.get(a), r.envelope.get(b)), (&int(3), &rat(1, 2)));
        assert_eq!(worst_stopping_brute_force(&base, &x, 0).unwrap(), r.values);

        let c = AdaptedProcess::constant(tree.clone(), int(5));
        let r = snell_worst_stopping(&base, &c, 1).unwrap();
        assert_eq!(finite(&r.values), vec![int(5), int(5)]);
        assert_eq!(r.stopping, StoppingTime::constant(&tree, 1));

        let w = WorstStoppingProcess::new(base, 0);
        assert_eq!(finite(&eval_at_time(&w, &x, 1).unwrap()), vec![int(3), rat(1, 2)]);
    }

    #[test]
    fn snell_detects_inconsistent_base() {
        let tree = FiltrationTree::seven_node();
        // Two densities whose paste leaves the set: the base is not one-step
        // consistent and the recursion undercuts every stopping value.
        let base = TerminalBase::new(
            tree.clone(),
            TerminalKind::Expectation,
            vec![
                vec![rat(3, 2), rat(1, 2), rat(1, 2), rat(3, 2)],
                vec![rat(1, 2), rat(3, 2), rat(3, 2), rat(1, 2)],
            ],
        )
        .unwrap();
        let x = AdaptedProcess::from_fn(tree.clone(), |n| match tree.label(n) {
            "w2" => int(4),
            "w4" => int(4),
            _ if tree.is_leaf(n) => int(0),
            _ => int(10),
        });
        assert!(matches!(snell_worst_stopping(&base, &x, 0), Err(Error::BaseNotOneStepConsistent(_))));
    }

    #[test]
    fn penalty_sharp_examples() {
        let tree = FiltrationTree::seven_node();
        let zero = StoppingTime::constant(&tree, 0);
        let f_dens = [int(2), int(0), int(1), int(1)];
        let g_dens = [int(1), int(1), int(2), int(0)];
        let fa = build_density(&tree, &DensityMode::Final, &f_dens).unwrap();
        let ga = build_density(&tree, &DensityMode::Final, &g_dens).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![fa.clone(), ga.clone()]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        assert_eq!(penalty_sharp(&f, &fa, &zero).unwrap().values(), &[Ext::zero()]);
        let mid = fa.mix(&ga, &rat(1, 3)).unwrap();
        assert_eq!(penalty_sharp(&f, &mid, &zero).unwrap().values(), &[Ext::zero()]);
        let outside = uniform_final(&tree);
        assert_eq!(penalty_sharp(&f, &outside, &zero).unwrap().values(), &[Ext::NegInf]);

        // A single scenario with penalty -1: the acceptance set is the
        // half-space <X, b> >= -1 and the sharp penalty is -1.
        let b = vec![rat(1, 4); 4];
        let mut lp = LinearProgram::new(b.to_vec());
        lp.constrain(b.to_vec(), Relation::Ge, int(-1));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(-1)),
            other => panic!("{other:?}"),
        }

        // Normalized version: a second, free scenario keeps sup gamma = 0.
        let q = ScenarioSet::full(tree.clone(), vec![outside.clone(), ga.clone()]).unwrap();
        let gamma = PenaltyFunction::new(vec![
            vec![Ext::Finite(int(-1)); tree.len()],
            vec![Ext::zero(); tree.len()],
        ])
        .unwrap();
        let f = RobustProcess::new(&q, Some(gamma)).unwrap();
        assert_eq!(penalty_sharp(&f, &outside, &zero).unwrap().values(), &[Ext::Finite(int(-1))]);
        assert_eq!(penalty_sharp(&f, &ga, &zero).unwrap().values(), &[Ext::zero()]);
    }

    #[test]
    fn gamma_ext_examples() {
        let tree = FiltrationTree::seven_node();
        let one = StoppingTime::constant(&tree, 1);
        let a = uniform_final(&tree);
        let g = |d: &DensityProcess| {
            let _ = d;
            ConditionalValue::new(one.clone(), vec![Ext::Finite(rat(-1, 2)), Ext::Finite(int(-2))])
        };
        let v = gamma_ext(g, &a, &one).unwrap();
        assert_eq!(v.values(), &[Ext::Finite(rat(-1, 2)), Ext::Finite(int(-2))]);
        let early = build_density(&tree, &DensityMode::Stopped(StoppingTime::constant(&tree, 0)), &vec![int(1); 4]).unwrap();
        let v = gamma_ext(g, &early, &StoppingTime::constant(&tree, 1)).unwrap();
        assert_eq!(v.values(), &[Ext::zero(), Ext::zero()]);
    }

    #[test]
    fn relevance() {
        let tree = FiltrationTree::seven_node();
        let zero = StoppingTime::constant(&tree, 0);
        let end = StoppingTime::constant(&tree, 2);
        let q = ScenarioSet::full(tree.clone(), vec![uniform_final(&tree)]).unwrap();
        let r = check_relevance(&RobustProcess::coherent(&q).unwrap(), &zero, &end).unwrap();
        assert!(r.relevant);

        let w1 = tree.find("w1").unwrap();
        let a = DensityProcess::from_fn(tree.clone(), |n| if n == w1 { int(4) } else { int(0) }).unwrap();
        let q = ScenarioSet::full(tree.clone(), vec![a]).unwrap();
        let r = check_relevance(&RobustProcess::coherent(&q).unwrap(), &zero, &end).unwrap();
        assert!(!r.relevant);
        let w = r.witness.unwrap();
        assert_eq!((w.atom.as_str(), w.value.as_str()), ("w2", "0"));
    }

    #[test]
    fn recovery_from_acceptance() {
        let tree = FiltrationTree::seven_node();
        let q = ScenarioSet::full(tree.clone(), vec![uniform_final(&tree)]).unwrap();
        let f = RobustProcess::coherent(&q).unwrap();
        let zero = StoppingTime::constant(&tree, 0);
        let x = counterexample_process(&tree).unwrap();
        let v = recover_from_acceptance(&f, &x, &zero).unwrap();
        assert!((v.values()[0].to_f64() - 1.75).abs() < 1e-9);
        let v = recover_from_acceptance(&f, &AdaptedProcess::<Rational>::zero(tree.clone()), &zero).unwrap();
        assert!(v.values()[0].to_f64().abs() < 1e-9);
        let m = AdaptedProcess::constant(tree.clone(), rat(-5, 2));
        let v = recover_from_acceptance(&f, &m, &zero).unwrap();
        assert!((v.values()[0].to_f64() + 2.5).abs() < 1e-9);
    }
}
