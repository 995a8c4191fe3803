//! Adapted value processes, nonnegative increment processes, windows and
//! the conditional pairing between them.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::filtration::{check_order, ConditionalValue, NodeId, StoppingTime, Tree};
use crate::scalar::{Ext, Rational, Scalar};

/// One value per node. Values are read only inside the window of whatever
/// operation consumes the process; [`AdaptedProcess::project`] produces the
/// canonical form (zero before `tau`, frozen after `theta`).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<S> {
    tree: Tree,
    values: Vec<S>,
}

impl<S: Scalar> AdaptedProcess<S> {
    pub fn new(tree: Tree, values: Vec<S>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                tree.len()
            )));
        }
        Ok(AdaptedProcess { tree, values })
    }

    pub fn from_fn(tree: Tree, f: impl Fn(NodeId) -> S) -> Self {
        let values = tree.node_ids().map(f).collect();
        AdaptedProcess { tree, values }
    }

    pub fn constant(tree: Tree, c: S) -> Self {
        Self::from_fn(tree, |_| c.clone())
    }

    pub fn zero(tree: Tree) -> Self {
        Self::constant(tree, S::zero())
    }

    /// `c` on `n` and everything below it, zero elsewhere.
    pub fn subtree_indicator(tree: Tree, n: NodeId, c: S) -> Self {
        let t2 = tree.clone();
        Self::from_fn(tree, |m| if t2.is_descendant_or_self(m, n) { c.clone() } else { S::zero() })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
    pub fn values(&self) -> &[S] {
        &self.values
    }
    pub fn get(&self, n: NodeId) -> &S {
        &self.values[n.0]
    }
    pub fn set(&mut self, n: NodeId, v: S) {
        self.values[n.0] = v;
    }

    /// Terminal values, indexed like `tree.leaves()`.
    pub fn leaf_values(&self) -> Vec<S> {
        self.tree.leaves().iter().map(|&l| self.values[l.0].clone()).collect()
    }

    pub fn map(&self, f: impl Fn(NodeId, &S) -> S) -> Self {
        let values = self.tree.node_ids().map(|n| f(n, &self.values[n.0])).collect();
        AdaptedProcess { tree: self.tree.clone(), values }
    }

    fn zip(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        if !self.tree.same_as(&other.tree) {
            return Err(Error::TreeMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Ok(AdaptedProcess { tree: self.tree.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, k: &S) -> Self {
        self.map(|_, v| v.clone() * k.clone())
    }

    /// Adds `m` on every node at or after `tau`.
    pub fn shift_from(&self, tau: &StoppingTime, m: &S) -> Self {
        self.map(|n, v| if tau.is_before(n) { v.clone() } else { v.clone() + m.clone() })
    }

    /// Goes through `f64`; meant for moving exact data into float evaluators.
    pub fn convert<T: Scalar>(&self) -> AdaptedProcess<T> {
        let values = self.values.iter().map(|v| T::from_f64_exact(v.to_f64())).collect();
        AdaptedProcess { tree: self.tree.clone(), values }
    }

    /// `pi_{tau,theta}(X)_t = 1_{tau <= t} X_{t ^ theta}`.
    pub fn project(&self, tau: &StoppingTime, theta: &StoppingTime) -> Result<Self> {
        check_order(tau, theta, &self.tree)?;
        Ok(self.map(|n, v| {
            if tau.is_before(n) {
                S::zero()
            } else {
                match theta.covering(n) {
                    Some(s) => self.values[s.0].clone(),
                    None => v.clone(),
                }
            }
        }))
    }

    pub fn render(&self) -> Vec<(String, String)> {
        self.tree
            .node_ids()
            .map(|n| (self.tree.label(n).to_string(), self.values[n.0].render()))
            .collect()
    }
}

impl AdaptedProcess<Rational> {
    pub fn to_f64(&self) -> AdaptedProcess<f64> {
        AdaptedProcess {
            tree: self.tree.clone(),
            values: self.values.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

/// A nonnegative increment process `Delta a_t`, one increment per node.
/// Equality and hashing look at the increments only.
#[derive(Debug, Clone)]
pub struct DensityProcess {
    tree: Tree,
    inc: Vec<Rational>,
}

impl PartialEq for DensityProcess {
    fn eq(&self, other: &Self) -> bool {
        self.inc == other.inc
    }
}
impl Eq for DensityProcess {}
impl std::hash::Hash for DensityProcess {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.inc.hash(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DensityClass {
    #[serde(rename = "IN_D")]
    InD,
    #[serde(rename = "IN_D_E")]
    InDe,
    #[serde(rename = "NOT_IN_D")]
    NotInD,
}

impl DensityProcess {
    pub fn new(tree: Tree, inc: Vec<Rational>) -> Result<Self> {
        if inc.len() != tree.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} increments for {} nodes",
                inc.len(),
                tree.len()
            )));
        }
        if let Some(i) = inc.iter().position(|v| v.is_negative()) {
            return Err(Error::NotADensity(format!(
                "negative increment at `{}`",
                tree.label(NodeId(i))
            )));
        }
        Ok(DensityProcess { tree, inc })
    }

    pub fn from_fn(tree: Tree, f: impl Fn(NodeId) -> Rational) -> Result<Self> {
        let inc = tree.node_ids().map(f).collect();
        Self::new(tree, inc)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
    pub fn increments(&self) -> &[Rational] {
        &self.inc
    }
    pub fn get(&self, n: NodeId) -> &Rational {
        &self.inc[n.0]
    }

    /// `<1, a>_{t,T}` seen from each node: conditional mass still to come,
    /// including the node's own increment.
    pub fn residual_masses(&self) -> Vec<Rational> {
        let tree = self.tree();
        let mut w = vec![Rational::zero(); self.inc.len()];
        for k in (0..self.inc.len()).rev() {
            let n = NodeId(k);
            let mut s = tree.prob(n) * &self.inc[k];
            for c in tree.children(n) {
                s += &w[c.0];
            }
            w[k] = s;
        }
        for k in 0..self.inc.len() {
            w[k] = &w[k] / tree.prob(NodeId(k));
        }
        w
    }

    /// `<1, a>_{tau,theta}`.
    pub fn mass(&self, tau: &StoppingTime, theta: &StoppingTime) -> Result<ConditionalValue<Rational>> {
        let one = AdaptedProcess::constant(self.tree().clone(), Rational::from_integer(1.into()));
        pairing(&one, self, tau, theta)
    }

    pub fn scale(&self, k: &Rational) -> Result<Self> {
        Self::new(self.tree().clone(), self.inc.iter().map(|v| v * k).collect())
    }

    /// `lambda a + (1 - lambda) b`.
    pub fn mix(&self, other: &Self, lambda: &Rational) -> Result<Self> {
        if !self.tree().same_as(other.tree()) {
            return Err(Error::TreeMismatch);
        }
        let one = Rational::from_integer(1.into());
        let inc = self
            .inc
            .iter()
            .zip(&other.inc)
            .map(|(a, b)| a * lambda + b * (&one - lambda))
            .collect();
        Self::new(self.tree().clone(), inc)
    }

    pub fn render(&self) -> Vec<(String, String)> {
        let tree = self.tree();
        tree.node_ids()
            .filter(|n| !self.inc[n.0].is_zero())
            .map(|n| (tree.label(n).to_string(), crate::scalar::render_rational(&self.inc[n.0])))
            .collect()
    }
}

fn pair_at<S: Scalar>(
    x: &AdaptedProcess<S>,
    a: &DensityProcess,
    n: NodeId,
    theta: &StoppingTime,
) -> S {
    let tree = x.tree();
    let mut s = S::zero();
    for &m in tree.subtree(n) {
        if theta.is_at_or_before(m) && !a.inc[m.0].is_zero() {
            s = s + tree.prob_as::<S>(m) * S::from_rational(&a.inc[m.0]) * x.values[m.0].clone();
        }
    }
    s / tree.prob_as::<S>(n)
}

/// `<X, a>_{tau,theta} = E[sum_{t in [tau,theta]} X_t Delta a_t | F_tau]`.
pub fn pairing<S: Scalar>(
    x: &AdaptedProcess<S>,
    a: &DensityProcess,
    tau: &StoppingTime,
    theta: &StoppingTime,
) -> Result<ConditionalValue<S>> {
    if !x.tree().same_as(a.tree()) {
        return Err(Error::TreeMismatch);
    }
    check_order(tau, theta, x.tree())?;
    let values = tau.nodes().iter().map(|&n| pair_at(x, a, n, theta)).collect();
    ConditionalValue::from_finite(tau.clone(), values)
}

/// Pairing at a single node with the window running from that node to `theta`.
pub fn pairing_at<S: Scalar>(
    x: &AdaptedProcess<S>,
    a: &DensityProcess,
    n: NodeId,
    theta: &StoppingTime,
) -> S {
    pair_at(x, a, n, theta)
}

/// Per `tau` atom, the largest `|X_t|` over the window below it.
pub fn sup_norm<S: Scalar>(
    x: &AdaptedProcess<S>,
    tau: &StoppingTime,
    theta: &StoppingTime,
) -> Result<ConditionalValue<S>> {
    check_order(tau, theta, x.tree())?;
    let tree = x.tree();
    let values = tau
        .nodes()
        .iter()
        .map(|&n| {
            tree.subtree(n)
                .iter()
                .filter(|&&m| theta.is_at_or_before(m))
                .fold(S::zero(), |acc, &m| acc.max_of(x.values[m.0].abs()))
        })
        .collect();
    ConditionalValue::from_finite(tau.clone(), values)
}

pub fn classify_density(a: &DensityProcess, tau: &StoppingTime, theta: &StoppingTime) -> DensityClass {
    let tree = a.tree();
    if !tau.le(theta) {
        return DensityClass::NotInD;
    }
    let outside = tree
        .node_ids()
        .any(|m| (tau.is_before(m) || !theta.is_at_or_before(m)) && !a.inc[m.0].is_zero());
    if outside {
        return DensityClass::NotInD;
    }
    let one = Rational::from_integer(1.into());
    let unit = tau.nodes().iter().all(|&n| {
        let one_p = AdaptedProcess::constant(tree.clone(), one.clone());
        pair_at(&one_p, a, n, theta) == one
    });
    if !unit {
        return DensityClass::NotInD;
    }
    // Residual mass sum_{j >= t ^ theta} Delta a_j along every path.
    for leaf in 0..tree.leaf_count() {
        let path = tree.path(leaf);
        let stop = tree.time(theta.at_leaf(tree, leaf));
        let mut suffix = vec![Rational::zero(); path.len() + 1];
        for j in (0..path.len()).rev() {
            suffix[j] = &suffix[j + 1] + &a.inc[path[j].0];
        }
        if (0..=tree.horizon()).any(|t| !suffix[t.min(stop)].is_positive()) {
            return DensityClass::InD;
        }
    }
    DensityClass::InDe
}

/// Lifts a conditional value to a process: `v(tau-node)` from `tau` onward,
/// zero before.
pub fn lift<S: Scalar>(tree: &Tree, v: &ConditionalValue<S>) -> Result<AdaptedProcess<S>> {
    let mut values = Vec::with_capacity(tree.len());
    for n in tree.node_ids() {
        match v.at_path_of(n) {
            None => values.push(S::zero()),
            Some(Ext::Finite(x)) => values.push(x.clone()),
            Some(_) => {
                return Err(Error::InfiniteValue(format!("at `{}`", tree.label(n))));
            }
        }
    }
    AdaptedProcess::new(tree.clone(), values)
}
