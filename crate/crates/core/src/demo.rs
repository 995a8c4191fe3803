//! Ready-made fixtures: the seven-node tree with its counterexample
//! process, and generators for consistent coherent and concave families.

use num_traits::Zero;
use rand::Rng;

use crate::composition::{build_density, concat_closure, DensityMode, ScenarioSet};
use crate::error::{Error, Result};
use crate::filtration::{FiltrationTree, NodeId, Tree};
use crate::functionals::{Aggregation, AggregatedProcess, PenaltyFunction, RobustProcess};
use crate::processes::{AdaptedProcess, DensityProcess};
use crate::scalar::{int, rat, Ext, Rational};

const SEVEN_NODE_LABELS: [&str; 7] = ["root", "A", "B", "w1", "w2", "w3", "w4"];

/// True for the builtin two-period tree with four equally likely leaves.
pub fn is_seven_node(tree: &FiltrationTree) -> bool {
    tree.len() == 7
        && tree.horizon() == 2
        && SEVEN_NODE_LABELS.iter().all(|l| tree.find(l).is_some())
        && tree.leaves().iter().all(|&l| *tree.prob(l) == rat(1, 4))
}

/// `X_0 = 2`, `X_1 = (4, 1)`, `X_2 = (5, 1, 2, -1)`.
pub fn counterexample_process(tree: &Tree) -> Result<AdaptedProcess<Rational>> {
    if !is_seven_node(tree) {
        return Err(Error::TreeMismatch);
    }
    let values = [("root", 2), ("A", 4), ("B", 1), ("w1", 5), ("w2", 1), ("w3", 2), ("w4", -1)];
    Ok(AdaptedProcess::from_fn(tree.clone(), |n| {
        let v = values.iter().find(|(l, _)| *l == tree.label(n)).expect("known label").1;
        int(v)
    }))
}

/// Reference measure with the path-wise running infimum.
pub fn inf_time_process(tree: &Tree) -> Result<AggregatedProcess> {
    AggregatedProcess::new(tree.clone(), vec![vec![int(1); tree.leaf_count()]], Aggregation::InfTime, 0)
}

/// One local choice at an inner node: a law on the children and its cost.
#[derive(Debug, Clone)]
pub struct Choice {
    pub kernel: Vec<Rational>,
    pub cost: Rational,
}

/// A control problem on the tree: at every inner node an adversary picks
/// one of several child laws and pays the attached cost. Every pure policy
/// gives a terminal density; its penalty is minus the expected cost still
/// to be paid. With a zero-cost choice at every node the family is a
/// time-consistent concave utility process.
#[derive(Debug, Clone)]
pub struct PolicyModel {
    tree: Tree,
    choices: Vec<Vec<Choice>>,
}

impl PolicyModel {
    pub fn new(tree: Tree, choices: Vec<Vec<Choice>>) -> Result<Self> {
        if choices.len() != tree.len() {
            return Err(Error::DimensionMismatch("one choice list per node".into()));
        }
        for n in tree.node_ids() {
            let cs = &choices[n.0];
            if tree.is_leaf(n) {
                continue;
            }
            if cs.is_empty() {
                return Err(Error::DimensionMismatch(format!("no choice at `{}`", tree.label(n))));
            }
            let k = tree.children(n).len();
            for c in cs {
                let total: Rational = c.kernel.iter().sum();
                if c.kernel.len() != k || c.kernel.iter().any(|p| *p <= Rational::zero()) || total != int(1) {
                    return Err(Error::NotADensity(format!("kernel at `{}`", tree.label(n))));
                }
                if c.cost < Rational::zero() {
                    return Err(Error::NormalizationViolation(format!("negative cost at `{}`", tree.label(n))));
                }
            }
            if !cs.iter().any(|c| c.cost.is_zero()) {
                return Err(Error::NormalizationViolation(format!("no free choice at `{}`", tree.label(n))));
            }
        }
        Ok(PolicyModel { tree, choices })
    }

    /// Two choices per inner node: the reference law and a random positive
    /// one, one of them free and the other costing `1/4 .. 2`.
    pub fn random<R: Rng + ?Sized>(tree: &Tree, rng: &mut R) -> Self {
        let choices = tree
            .node_ids()
            .map(|n| {
                if tree.is_leaf(n) {
                    return Vec::new();
                }
                let reference: Vec<Rational> =
                    tree.children(n).iter().map(|&c| tree.prob(c) / tree.prob(n)).collect();
                let raw: Vec<i64> = tree.children(n).iter().map(|_| rng.gen_range(1..=4)).collect();
                let total: i64 = raw.iter().sum();
                let other: Vec<Rational> = raw.iter().map(|&v| rat(v, total)).collect();
                let cost = [rat(1, 4), rat(1, 2), int(1), int(2)][rng.gen_range(0..4)].clone();
                let (c0, c1) = if rng.gen_bool(0.5) { (Rational::zero(), cost) } else { (cost, Rational::zero()) };
                vec![Choice { kernel: reference, cost: c0 }, Choice { kernel: other, cost: c1 }]
            })
            .collect();
        PolicyModel::new(tree.clone(), choices).expect("valid by construction")
    }

    fn inner(&self) -> Vec<NodeId> {
        self.tree.node_ids().filter(|&n| !self.tree.is_leaf(n)).collect()
    }

    /// Number of pure policies.
    pub fn policy_count(&self) -> u128 {
        self.inner().iter().fold(1u128, |acc, n| acc.saturating_mul(self.choices[n.0].len() as u128))
    }

    /// Every pure policy as a choice index per node (0 at leaves).
    pub fn policies(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let count = self.policy_count();
        if count > cap as u128 {
            return Err(Error::EnumerationCapExceeded { count: count.to_string(), cap });
        }
        let mut out = vec![vec![0usize; self.tree.len()]];
        for n in self.inner() {
            let k = self.choices[n.0].len();
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..k).map(move |c| {
                        let mut q = p.clone();
                        q[n.0] = c;
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Terminal density of a policy relative to the tree's measure.
    pub fn density(&self, policy: &[usize]) -> Vec<Rational> {
        let tree = &self.tree;
        let mut f = vec![int(1); tree.len()];
        for n in tree.node_ids() {
            if tree.is_leaf(n) {
                continue;
            }
            let kernel = &self.choices[n.0][policy[n.0]].kernel;
            for (i, &c) in tree.children(n).iter().enumerate() {
                let ratio = &kernel[i] * tree.prob(n) / tree.prob(c);
                f[c.0] = &f[n.0] * ratio;
            }
        }
        tree.leaves().iter().map(|l| f[l.0].clone()).collect()
    }

    /// Expected remaining cost of a policy from every node.
    pub fn remaining_cost(&self, policy: &[usize]) -> Vec<Rational> {
        let tree = &self.tree;
        let mut g = vec![Rational::zero(); tree.len()];
        for k in (0..tree.len()).rev() {
            let n = NodeId(k);
            if tree.is_leaf(n) {
                continue;
            }
            let choice = &self.choices[k][policy[k]];
            let below: Rational =
                tree.children(n).iter().zip(&choice.kernel).map(|(c, p)| p * &g[c.0]).sum();
            g[k] = &choice.cost + below;
        }
        g
    }

    /// Scenario set of all pure policies over `[0, T]` with the cost penalty.
    pub fn scenarios(&self, cap: usize) -> Result<(ScenarioSet, PenaltyFunction)> {
        let policies = self.policies(cap)?;
        let mut densities = Vec::with_capacity(policies.len());
        let mut penalty = Vec::with_capacity(policies.len());
        for p in &policies {
            densities.push(build_density(&self.tree, &DensityMode::Final, &self.density(p))?);
            penalty.push(self.remaining_cost(p).into_iter().map(|c| Ext::Finite(-c)).collect());
        }
        Ok((ScenarioSet::full(self.tree.clone(), densities)?, PenaltyFunction::new(penalty)?))
    }

    pub fn process(&self, cap: usize) -> Result<RobustProcess> {
        let (q, gamma) = self.scenarios(cap)?;
        RobustProcess::new(&q, Some(gamma))
    }
}

/// The fixed policy model on the seven-node tree used by the demos.
pub fn seven_node_policy_model(tree: &Tree) -> Result<PolicyModel> {
    if !is_seven_node(tree) {
        return Err(Error::TreeMismatch);
    }
    let pick = |label: &str, cs: Vec<(Vec<Rational>, Rational)>| {
        (tree.find(label).expect("known label"), cs)
    };
    let table = [
        pick("root", vec![(vec![rat(1, 2), rat(1, 2)], int(0)), (vec![rat(1, 4), rat(3, 4)], rat(1, 2))]),
        pick("A", vec![(vec![rat(1, 2), rat(1, 2)], int(0)), (vec![rat(3, 4), rat(1, 4)], int(1))]),
        pick("B", vec![(vec![rat(2, 3), rat(1, 3)], int(0)), (vec![rat(1, 2), rat(1, 2)], rat(1, 4))]),
    ];
    let mut choices = vec![Vec::new(); tree.len()];
    for (n, cs) in table {
        choices[n.0] = cs.into_iter().map(|(kernel, cost)| Choice { kernel, cost }).collect();
    }
    PolicyModel::new(tree.clone(), choices)
}

/// Concatenation closure of the given generators as a scenario set on
/// `[0, T]`.
pub fn closure_scenarios(generators: &[DensityProcess], cap: usize) -> Result<ScenarioSet> {
    let first = generators.first().ok_or(Error::EmptyScenarioSet)?;
    let tree = first.tree().clone();
    ScenarioSet::full(tree, concat_closure(generators, cap)?)
}
