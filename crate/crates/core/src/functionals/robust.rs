use num_traits::Zero;

use super::{check_node, FunctionalClass, UtilityProcess};
use crate::composition::ScenarioSet;
use crate::error::{Error, Result};
use crate::filtration::{NodeId, StoppingTime, Tree};
use crate::processes::{AdaptedProcess, DensityProcess};
use crate::scalar::{Ext, Rational, Scalar};

/// Penalty `gamma(b, n)` in `[-inf, 0]` for scenario `b` seen from node `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyFunction {
    values: Vec<Vec<Ext<Rational>>>,
}

impl PenaltyFunction {
    /// `values[b][n]`; positive entries are rejected.
    pub fn new(values: Vec<Vec<Ext<Rational>>>) -> Result<Self> {
        for row in &values {
            if row.iter().any(|v| *v > Ext::zero()) {
                return Err(Error::NormalizationViolation("positive penalty".into()));
            }
        }
        Ok(PenaltyFunction { values })
    }

    pub fn zero(scenarios: usize, nodes: usize) -> Self {
        PenaltyFunction { values: vec![vec![Ext::zero(); nodes]; scenarios] }
    }

    pub fn get(&self, scenario: usize, n: NodeId) -> &Ext<Rational> {
        &self.values[scenario][n.0]
    }

    pub fn values(&self) -> &[Vec<Ext<Rational>>] {
        &self.values
    }
}

/// `phi_{t,T}(X) = min_b <X, b>_{t,T} / <1, b>_{t,T} - gamma(b, t)` over a
/// finite scenario set.
///
/// Without a penalty the family is coherent and a scenario with no mass
/// left contributes `+inf`. With a penalty every scenario is first shifted
/// with `normalize_from`, so a scenario with no mass left acts as a point
/// mass on the current node.
#[derive(Debug, Clone)]
pub struct RobustProcess {
    tree: Tree,
    scenarios: Vec<DensityProcess>,
    penalty: Option<PenaltyFunction>,
    start: usize,
    horizon: usize,
    theta: StoppingTime,
    /// `P(m) Delta b_m`, zero beyond the horizon.
    weights: Vec<Vec<Rational>>,
    /// Sum of `weights` over each subtree.
    mass: Vec<Vec<Rational>>,
}

impl RobustProcess {
    pub fn new(q: &ScenarioSet, penalty: Option<PenaltyFunction>) -> Result<Self> {
        let tree = q.tree().clone();
        let start = q
            .tau()
            .as_constant(&tree)
            .ok_or_else(|| Error::WindowViolation("scenario window must start at a constant date".into()))?;
        let horizon = q
            .theta()
            .as_constant(&tree)
            .ok_or_else(|| Error::WindowViolation("scenario window must end at a constant date".into()))?;
        if let Some(p) = &penalty {
            if p.values.len() != q.len() || p.values.iter().any(|r| r.len() != tree.len()) {
                return Err(Error::DimensionMismatch("penalty table does not match scenarios x nodes".into()));
            }
            for n in tree.node_ids() {
                let t = tree.time(n);
                if t < start || t > horizon {
                    continue;
                }
                let best = (0..q.len()).map(|b| p.get(b, n).clone()).fold(Ext::NegInf, Ext::max);
                if best != Ext::zero() {
                    return Err(Error::NormalizationViolation(tree.label(n).to_string()));
                }
            }
        }
        let theta = StoppingTime::constant(&tree, horizon);
        let mut weights = Vec::with_capacity(q.len());
        let mut mass = Vec::with_capacity(q.len());
        for b in q.densities() {
            let w: Vec<Rational> = tree
                .node_ids()
                .map(|m| if tree.time(m) <= horizon { tree.prob(m) * b.get(m) } else { Rational::zero() })
                .collect();
            let mut s = w.clone();
            for k in (0..tree.len()).rev() {
                let extra: Rational = tree.children(NodeId(k)).iter().map(|c| s[c.0].clone()).sum();
                s[k] += extra;
            }
            weights.push(w);
            mass.push(s);
        }
        Ok(RobustProcess {
            tree,
            scenarios: q.densities().to_vec(),
            penalty,
            start,
            horizon,
            theta,
            weights,
            mass,
        })
    }

    pub fn coherent(q: &ScenarioSet) -> Result<Self> {
        Self::new(q, None)
    }

    pub fn scenarios(&self) -> &[DensityProcess] {
        &self.scenarios
    }
    pub fn penalty(&self) -> Option<&PenaltyFunction> {
        self.penalty.as_ref()
    }
    pub fn window_end(&self) -> &StoppingTime {
        &self.theta
    }
    pub fn is_coherent(&self) -> bool {
        self.penalty.is_none()
    }

    /// `P(m) Delta b_m` for scenario `b`.
    pub(crate) fn weight(&self, b: usize, m: NodeId) -> &Rational {
        &self.weights[b][m.0]
    }

    /// `P(n) <1, b>_{n,T}`.
    pub(crate) fn mass_below(&self, b: usize, n: NodeId) -> &Rational {
        &self.mass[b][n.0]
    }

    /// Nodes read by `value_at(_, n)`.
    pub(crate) fn window_nodes(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.tree.subtree(n).iter().copied().filter(move |&m| self.tree.time(m) <= self.horizon)
    }

    /// Scenario term `<X, b>_n / <1, b>_n - gamma(b, n)`.
    pub fn scenario_value<S: Scalar>(&self, x: &AdaptedProcess<S>, b: usize, n: NodeId) -> Ext<S> {
        let gamma = match &self.penalty {
            None => Ext::zero(),
            Some(p) => match p.get(b, n) {
                Ext::Finite(g) => Ext::Finite(S::from_rational(g)),
                _ => return Ext::PosInf,
            },
        };
        let m = &self.mass[b][n.0];
        let base = if m.is_zero() {
            if self.penalty.is_none() {
                return Ext::PosInf;
            }
            x.get(n).clone()
        } else {
            let mut s = S::zero();
            for k in self.window_nodes(n) {
                let w = &self.weights[b][k.0];
                if !w.is_zero() {
                    s = s + S::from_rational(w) * x.get(k).clone();
                }
            }
            s / S::from_rational(m)
        };
        Ext::Finite(base).sub(&gamma)
    }
}

impl<S: Scalar> UtilityProcess<S> for RobustProcess {
    fn tree(&self) -> &Tree {
        &self.tree
    }
    fn start(&self) -> usize {
        self.start
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn class(&self) -> FunctionalClass {
        if self.penalty.is_none() {
            FunctionalClass::Coherent
        } else {
            FunctionalClass::Concave
        }
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        check_node::<S, _>(self, n)?;
        if self.scenarios.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        Ok((0..self.scenarios.len())
            .map(|b| self.scenario_value(x, b, n))
            .fold(Ext::PosInf, Ext::min))
    }
    fn describe(&self) -> String {
        format!(
            "robust {} over {} scenarios on [{}, {}]",
            if self.penalty.is_none() { "coherent" } else { "concave" },
            self.scenarios.len(),
            self.start,
            self.horizon
        )
    }
}
