use num_traits::{Signed, Zero};

use super::{check_node, RobustProcess};
use crate::composition::normalize_from;
use crate::error::{Error, Result};
use crate::filtration::{ConditionalValue, NodeId, StoppingTime};
use crate::optim::{lp_solve, LinearProgram, LpOutcome, Relation};
use crate::processes::DensityProcess;
use crate::scalar::{Ext, Rational};

/// The acceptance polyhedron of `F` on the atom `n` with objective
/// `<X, a>_{n,T}` (not normalized). Variables are the values of `X` on the
/// window nodes below `n`, returned alongside the program.
pub fn acceptance_lp(f: &RobustProcess, a: &DensityProcess, n: NodeId) -> Result<(LinearProgram, Vec<NodeId>)> {
    use super::UtilityProcess;
    let tree = UtilityProcess::<Rational>::tree(f);
    if !a.tree().same_as(tree) {
        return Err(Error::TreeMismatch);
    }
    let vars: Vec<NodeId> = f.window_nodes(n).collect();
    let pn = tree.prob(n);
    let objective = vars.iter().map(|&m| tree.prob(m) / pn * a.get(m)).collect();
    let mut lp = LinearProgram::new(objective);
    for b in 0..f.scenarios().len() {
        let gamma = match f.penalty() {
            None => Rational::zero(),
            Some(p) => match p.get(b, n) {
                Ext::Finite(g) => g.clone(),
                _ => continue,
            },
        };
        let mass = f.mass_below(b, n);
        let row: Vec<Rational> = if mass.is_zero() {
            if f.is_coherent() {
                // Contributes +inf, never binding.
                continue;
            }
            vars.iter().map(|&m| if m == n { Rational::from_integer(1.into()) } else { Rational::zero() }).collect()
        } else {
            vars.iter().map(|&m| f.weight(b, m) / mass).collect()
        };
        lp.constrain(row, Relation::Ge, gamma);
    }
    Ok((lp, vars))
}

/// `phi^#(a) = inf { <X, a>_{tau,T} : phi_{tau,T}(X) >= 0 }` per atom of
/// `tau`, by one exact LP per atom; `-inf` where the LP is unbounded.
///
/// The primal has one row per scenario, so it is solved through its dual
/// `max <gamma, y>` over `y >= 0` with `sum_b y_b row_b = objective`, which
/// has one row per window node. Both have the same value; an infeasible dual
/// means an unbounded primal.
pub fn penalty_sharp(f: &RobustProcess, a: &DensityProcess, tau: &StoppingTime) -> Result<ConditionalValue<Rational>> {
    let mut out = Vec::with_capacity(tau.len());
    for &n in tau.nodes() {
        check_node::<Rational, _>(f, n)?;
        let (lp, _) = acceptance_lp(f, a, n)?;
        out.push(match lp_solve(&dual_of(&lp))? {
            LpOutcome::Optimal { value, .. } => Ext::Finite(-value),
            LpOutcome::Infeasible => Ext::NegInf,
            LpOutcome::Unbounded { .. } => {
                return Err(Error::LpFailure("acceptance set is empty although 0 is accepted".into()))
            }
        });
    }
    ConditionalValue::new(tau.clone(), out)
}

/// Dual of `min <c, x>` over free `x` with `A x >= g`, written as a
/// minimization: `min <-g, y>` over `y >= 0` with `A^T y = c`.
fn dual_of(lp: &LinearProgram) -> LinearProgram {
    let k = lp.constraints.len();
    let mut dual = LinearProgram::new(lp.constraints.iter().map(|c| -c.rhs.clone()).collect());
    for j in 0..k {
        dual.nonnegative(j);
    }
    for (j, c) in lp.objective.iter().enumerate() {
        dual.constrain(lp.constraints.iter().map(|r| r.coeffs[j].clone()).collect(), Relation::Eq, c.clone());
    }
    dual
}

/// `gamma^ext_{theta,T}(a) = <1, a>_{theta,T} gamma(normalize_from(a, theta))`
/// where mass remains after `theta`, and 0 elsewhere. `gamma` maps a density
/// on `[theta, T]` to its penalty on the atoms of `theta`.
pub fn gamma_ext(
    gamma: impl Fn(&DensityProcess) -> Result<ConditionalValue<Rational>>,
    a: &DensityProcess,
    theta: &StoppingTime,
) -> Result<ConditionalValue<Rational>> {
    let r = a.residual_masses();
    let g = gamma(&normalize_from(a, theta))?;
    if g.anchor() != theta {
        return Err(Error::AnchorMismatch);
    }
    let values = theta
        .nodes()
        .iter()
        .zip(g.values())
        .map(|(&k, v)| if r[k.0].is_positive() { v.scale(&r[k.0]) } else { Ext::zero() })
        .collect();
    ConditionalValue::new(theta.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{seven_node_policy_model, PolicyModel};
    use crate::filtration::FiltrationTree;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dual_matches_primal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let tree = FiltrationTree::seven_node();
        let mut families = vec![seven_node_policy_model(&tree).unwrap().process(64).unwrap()];
        for _ in 0..3 {
            let t = FiltrationTree::random(&mut rng, 2, 3);
            families.push(PolicyModel::random(&t, &mut rng).process(1 << 10).unwrap());
        }
        let mut finite = 0;
        for f in &families {
            let tree = super::super::UtilityProcess::<Rational>::tree(f).clone();
            let root = StoppingTime::constant(&tree, 0);
            for i in 0..10 {
                let a = if i % 2 == 0 {
                    f.scenarios()[i % f.scenarios().len()].clone()
                } else {
                    random::density_process(&tree, &mut rng, true)
                };
                let (lp, _) = acceptance_lp(f, &a, tree.root()).unwrap();
                let primal = match lp_solve(&lp).unwrap() {
                    LpOutcome::Optimal { value, .. } => Ext::Finite(value),
                    LpOutcome::Unbounded { .. } => Ext::NegInf,
                    LpOutcome::Infeasible => panic!("0 is accepted"),
                };
                finite += usize::from(primal.is_finite());
                assert_eq!(penalty_sharp(f, &a, &root).unwrap().values(), &[primal]);
            }
        }
        assert!(finite > 0);
    }
}
