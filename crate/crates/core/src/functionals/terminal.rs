use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{check_node, FunctionalClass, UtilityProcess};
use crate::composition::{check_leaf_density, check_weights, paste_density};
use crate::error::{Error, Result};
use crate::filtration::{NodeId, StoppingTime, Tree};
use crate::optim::hull_membership;
use crate::processes::AdaptedProcess;
use crate::scalar::{Ext, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalKind {
    /// `psi_t(Y) = min_f E[f Y | F_t] / E[f | F_t]`.
    Expectation,
    /// `psi_t(Y) = min_f -log(E[f exp(-Y) | F_t] / E[f | F_t])`.
    Entropic,
}

/// A robust family of functionals of a terminal payoff, indexed by a
/// finite set of strictly positive leaf densities.
#[derive(Debug, Clone)]
pub struct TerminalBase {
    tree: Tree,
    kind: TerminalKind,
    densities: Vec<Vec<Rational>>,
    /// `P(l) f(l)` per density and leaf.
    weights: Vec<Vec<Rational>>,
    weights_f64: Vec<Vec<f64>>,
    /// `weights` summed over the leaves below each node.
    node_weights: Vec<Vec<Rational>>,
    node_weights_f64: Vec<Vec<f64>>,
}

impl TerminalBase {
    pub fn new(tree: Tree, kind: TerminalKind, densities: Vec<Vec<Rational>>) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        for (i, f) in densities.iter().enumerate() {
            check_leaf_density(&tree, f)?;
            if f.iter().any(|v| !v.is_positive()) {
                return Err(Error::NonPositiveDensity(format!("density {i} vanishes somewhere")));
            }
        }
        let weights: Vec<Vec<Rational>> = densities
            .iter()
            .map(|f| f.iter().zip(tree.leaves()).map(|(v, &l)| tree.prob(l) * v).collect())
            .collect();
        let weights_f64 = weights.iter().map(|w| w.iter().map(|v| v.to_f64()).collect()).collect();
        let node_weights: Vec<Vec<Rational>> = weights
            .iter()
            .map(|w| tree.node_ids().map(|n| tree.leaf_range(n).map(|i| &w[i]).sum()).collect())
            .collect();
        let node_weights_f64 = node_weights.iter().map(|w| w.iter().map(|v| v.to_f64()).collect()).collect();
        Ok(TerminalBase { tree, kind, densities, weights, weights_f64, node_weights, node_weights_f64 })
    }

    /// The single reference measure.
    pub fn reference(tree: Tree, kind: TerminalKind) -> Self {
        let one = vec![Rational::from_integer(1.into()); tree.leaf_count()];
        Self::new(tree, kind, vec![one]).expect("constant density")
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
    pub fn kind(&self) -> TerminalKind {
        self.kind
    }
    pub fn densities(&self) -> &[Vec<Rational>] {
        &self.densities
    }

    /// `psi` on the atom `n`, applied to a function `y` of the leaves
    /// (entries outside the atom are ignored).
    pub fn psi_at<S: Scalar>(&self, y: &[S], n: NodeId) -> Result<S> {
        let range = self.tree.leaf_range(n);
        match self.kind {
            TerminalKind::Expectation => {
                let mut best: Option<S> = None;
                for w in &self.weights {
                    let mut num = S::zero();
                    let mut den = S::zero();
                    for i in range.clone() {
                        let wi = S::from_rational(&w[i]);
                        num = num + wi.clone() * y[i].clone();
                        den = den + wi;
                    }
                    let v = num / den;
                    best = Some(match best {
                        None => v,
                        Some(b) => b.min_of(v),
                    });
                }
                Ok(best.expect("non-empty"))
            }
            TerminalKind::Entropic => {
                let shift = range.clone().map(|i| -y[i].to_f64()).fold(f64::NEG_INFINITY, f64::max);
                let mut best = f64::INFINITY;
                for w in &self.weights_f64 {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for i in range.clone() {
                        num += w[i] * (-y[i].to_f64() - shift).exp();
                        den += w[i];
                    }
                    let v = -(shift + num.ln() - den.ln());
                    best = best.min(v);
                }
                S::from_f64_approx(best)
                    .ok_or_else(|| Error::InexactArithmetic("entropic values need float processes".into()))
            }
        }
    }

    /// `psi` on the atom `n` of the payoff `X_xi`, summing once per stop
    /// node instead of once per leaf.
    pub fn psi_stopped<S: Scalar>(&self, x: &AdaptedProcess<S>, xi: &StoppingTime, n: NodeId) -> Result<S> {
        let tree = &self.tree;
        if let Some(k) = xi.covering(n) {
            // Stopped at or above `n`: the payoff is constant on the atom.
            return Ok(x.get(k).clone());
        }
        let stops: Vec<NodeId> = xi.nodes().iter().copied().filter(|&k| tree.is_descendant_or_self(k, n)).collect();
        match self.kind {
            TerminalKind::Expectation => {
                let mut best: Option<S> = None;
                for w in &self.node_weights {
                    let mut num = S::zero();
                    for &k in &stops {
                        num = num + S::from_rational(&w[k.0]) * x.get(k).clone();
                    }
                    let v = num / S::from_rational(&w[n.0]);
                    best = Some(match best {
                        None => v,
                        Some(b) => b.min_of(v),
                    });
                }
                Ok(best.expect("non-empty"))
            }
            TerminalKind::Entropic => {
                let shift = stops.iter().map(|&k| -x.get(k).to_f64()).fold(f64::NEG_INFINITY, f64::max);
                let mut best = f64::INFINITY;
                for w in &self.node_weights_f64 {
                    let num: f64 = stops.iter().map(|&k| w[k.0] * (-x.get(k).to_f64() - shift).exp()).sum();
                    best = best.min(-(shift + num.ln() - w[n.0].ln()));
                }
                S::from_f64_approx(best)
                    .ok_or_else(|| Error::InexactArithmetic("entropic values need float processes".into()))
            }
        }
    }

    /// Closure of the density set under single-atom pasting, checked either
    /// exactly or up to convex combinations.
    pub fn is_m_stable(&self, use_hull: bool) -> Result<bool> {
        let tree = &self.tree;
        for (i, f) in self.densities.iter().enumerate() {
            for (j, g) in self.densities.iter().enumerate() {
                if i == j {
                    continue;
                }
                for n in tree.node_ids().filter(|&n| !tree.is_leaf(n)) {
                    let theta = StoppingTime::constant(tree, tree.time(n));
                    let h = paste_density(tree, f, g, &theta, &[n])?;
                    if self.densities.contains(&h) {
                        continue;
                    }
                    if !use_hull || !hull_membership(&h, &self.densities)?.is_inside() {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// `phi_{t,T}(X) = psi_t(X_T)` with the entropic base.
#[derive(Debug, Clone)]
pub struct EntropicProcess {
    base: TerminalBase,
    start: usize,
}

impl EntropicProcess {
    pub fn new(tree: Tree, densities: Vec<Vec<Rational>>, start: usize) -> Result<Self> {
        let base = TerminalBase::new(tree, TerminalKind::Entropic, densities)?;
        Ok(EntropicProcess { base, start })
    }
    pub fn base(&self) -> &TerminalBase {
        &self.base
    }
}

impl<S: Scalar> UtilityProcess<S> for EntropicProcess {
    fn tree(&self) -> &Tree {
        &self.base.tree
    }
    fn start(&self) -> usize {
        self.start
    }
    fn horizon(&self) -> usize {
        self.base.tree.horizon()
    }
    fn class(&self) -> FunctionalClass {
        FunctionalClass::Concave
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        check_node::<S, _>(self, n)?;
        Ok(Ext::Finite(self.base.psi_at(&x.leaf_values(), n)?))
    }
    fn describe(&self) -> String {
        format!("entropic over {} densities", self.base.densities.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    /// Path-wise running infimum from the evaluation date.
    InfTime,
    /// `sum_{s >= t} mu_s X_s / sum_{s >= t} mu_s`.
    Weighted(Vec<Rational>),
}

/// `phi_{t,T}(X) = min_f E[f agg_t(X) | F_t] / E[f | F_t]`.
#[derive(Debug, Clone)]
pub struct AggregatedProcess {
    base: TerminalBase,
    agg: Aggregation,
    start: usize,
}

impl AggregatedProcess {
    pub fn new(tree: Tree, densities: Vec<Vec<Rational>>, agg: Aggregation, start: usize) -> Result<Self> {
        if let Aggregation::Weighted(mu) = &agg {
            check_weights(&tree, mu)?;
        }
        let base = TerminalBase::new(tree, TerminalKind::Expectation, densities)?;
        Ok(AggregatedProcess { base, agg, start })
    }
    pub fn base(&self) -> &TerminalBase {
        &self.base
    }
    pub fn aggregation(&self) -> &Aggregation {
        &self.agg
    }

    fn aggregate<S: Scalar>(&self, x: &AdaptedProcess<S>, n: NodeId) -> Vec<S> {
        let tree = &self.base.tree;
        let t = tree.time(n);
        let mut y = vec![S::zero(); tree.leaf_count()];
        for i in tree.leaf_range(n) {
            let mut node = tree.leaves()[i];
            let mut acc: Option<S> = None;
            let mut wsum = Rational::zero();
            loop {
                let v = x.get(node).clone();
                match &self.agg {
                    Aggregation::InfTime => {
                        acc = Some(match acc {
                            None => v,
                            Some(a) => a.min_of(v),
                        })
                    }
                    Aggregation::Weighted(mu) => {
                        let m = &mu[tree.time(node)];
                        wsum += m;
                        let term = S::from_rational(m) * v;
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a + term,
                        })
                    }
                }
                if tree.time(node) == t {
                    break;
                }
                node = tree.parent(node).expect("below n");
            }
            let a = acc.expect("non-empty path");
            y[i] = match &self.agg {
                Aggregation::InfTime => a,
                Aggregation::Weighted(_) => a / S::from_rational(&wsum),
            };
        }
        y
    }
}

impl<S: Scalar> UtilityProcess<S> for AggregatedProcess {
    fn tree(&self) -> &Tree {
        &self.base.tree
    }
    fn start(&self) -> usize {
        self.start
    }
    fn horizon(&self) -> usize {
        self.base.tree.horizon()
    }
    fn class(&self) -> FunctionalClass {
        FunctionalClass::Coherent
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        check_node::<S, _>(self, n)?;
        let y = self.aggregate(x, n);
        Ok(Ext::Finite(self.base.psi_at(&y, n)?))
    }
    fn describe(&self) -> String {
        let a = match &self.agg {
            Aggregation::InfTime => "infimum over time".to_string(),
            Aggregation::Weighted(mu) => {
                format!("weighted average ({})", mu.iter().map(|m| m.render()).collect::<Vec<_>>().join(", "))
            }
        };
        format!("{a} over {} densities", self.base.densities.len())
    }
}
