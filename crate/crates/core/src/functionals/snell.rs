use super::{check_node, FunctionalClass, TerminalBase, TerminalKind, UtilityProcess};
use crate::error::{Error, Result};
use crate::filtration::{enumerate_stopping_times, ConditionalValue, NodeId, StoppingTime, Tree};
use crate::processes::AdaptedProcess;
use crate::scalar::{Ext, Scalar};

#[derive(Debug, Clone)]
pub struct SnellResult<S> {
    /// `phi_{t,T}(X)` on the atoms of `F_t`.
    pub values: ConditionalValue<S>,
    /// `S_j(X)` for `j >= t`; zero before `t`.
    pub envelope: AdaptedProcess<S>,
    /// First date from `t` on where the envelope meets `X`.
    pub stopping: StoppingTime,
}

/// Backward recursion on the subtree of `n`; fills `env` for every node
/// below `n`.
fn envelope_below<S: Scalar>(base: &TerminalBase, x: &AdaptedProcess<S>, n: NodeId, env: &mut [S]) -> Result<()> {
    let tree = base.tree();
    let sub = tree.subtree(n);
    let mut y = vec![S::zero(); tree.leaf_count()];
    for &m in sub.iter().rev() {
        if tree.is_leaf(m) {
            env[m.0] = x.get(m).clone();
            continue;
        }
        for &c in tree.children(m) {
            for i in tree.leaf_range(c) {
                y[i] = env[c.0].clone();
            }
        }
        let cont = base.psi_at(&y, m)?;
        env[m.0] = x.get(m).clone().min_of(cont);
    }
    Ok(())
}

/// Worst-case stopping value `min_xi psi_t(X_xi)` computed by the recursion
/// `S_T = X_T`, `S_j = X_j ^ psi_j(S_{j+1})`. The result is checked
/// against `psi_t(X_{xi^t})`; a mismatch means the base family is not
/// one-step consistent.
pub fn snell_worst_stopping<S: Scalar>(base: &TerminalBase, x: &AdaptedProcess<S>, t: usize) -> Result<SnellResult<S>> {
    let tree = base.tree();
    if !x.tree().same_as(tree) {
        return Err(Error::TreeMismatch);
    }
    if t > tree.horizon() {
        return Err(Error::WindowViolation(format!("time {t} beyond the horizon")));
    }
    let mut env = vec![S::zero(); tree.len()];
    for &n in tree.nodes_at(t) {
        envelope_below(base, x, n, &mut env)?;
    }
    let mut stops = Vec::new();
    let mut stack: Vec<NodeId> = tree.nodes_at(t).to_vec();
    while let Some(m) = stack.pop() {
        if env[m.0] == *x.get(m) {
            stops.push(m);
        } else {
            stack.extend(tree.children(m).iter().copied());
        }
    }
    let stopping = StoppingTime::new(tree, stops)?;
    let stopped: Vec<S> = (0..tree.leaf_count())
        .map(|i| x.get(stopping.at_leaf(tree, i)).clone())
        .collect();
    let tol = super::FLOAT_TOLERANCE;
    let mut values = Vec::new();
    for &n in tree.nodes_at(t) {
        let direct = base.psi_at(&stopped, n)?;
        if !direct.close_to(&env[n.0], tol) {
            return Err(Error::BaseNotOneStepConsistent(format!(
                "at `{}` the recursion gives {} but stopping at its first hitting time gives {}",
                tree.label(n),
                env[n.0].render(),
                direct.render()
            )));
        }
        values.push(env[n.0].clone());
    }
    let envelope = AdaptedProcess::new(tree.clone(), env)?;
    Ok(SnellResult {
        values: ConditionalValue::from_finite(StoppingTime::constant(tree, t), values)?,
        envelope,
        stopping,
    })
}

/// `min_xi psi_t(X_xi)` over every enumerated stopping time `xi >= t`.
pub fn worst_stopping_brute_force<S: Scalar>(
    base: &TerminalBase,
    x: &AdaptedProcess<S>,
    t: usize,
) -> Result<ConditionalValue<S>> {
    let tree = base.tree();
    let mut best: Vec<Option<S>> = vec![None; tree.nodes_at(t).len()];
    for xi in enumerate_stopping_times(tree, t)? {
        for (k, &n) in tree.nodes_at(t).iter().enumerate() {
            let v = base.psi_stopped(x, &xi, n)?;
            best[k] = Some(match best[k].take() {
                None => v,
                Some(b) => b.min_of(v),
            });
        }
    }
    ConditionalValue::from_finite(
        StoppingTime::constant(tree, t),
        best.into_iter().map(|v| v.expect("at least one stopping time")).collect(),
    )
}

/// `phi_{t,T}(X) = S_t(X)` for a terminal base family.
#[derive(Debug, Clone)]
pub struct WorstStoppingProcess {
    base: TerminalBase,
    start: usize,
}

impl WorstStoppingProcess {
    pub fn new(base: TerminalBase, start: usize) -> Self {
        WorstStoppingProcess { base, start }
    }
    pub fn base(&self) -> &TerminalBase {
        &self.base
    }
}

impl<S: Scalar> UtilityProcess<S> for WorstStoppingProcess {
    fn tree(&self) -> &Tree {
        self.base.tree()
    }
    fn start(&self) -> usize {
        self.start
    }
    fn horizon(&self) -> usize {
        self.base.tree().horizon()
    }
    fn class(&self) -> FunctionalClass {
        match self.base.kind() {
            TerminalKind::Expectation => FunctionalClass::Coherent,
            TerminalKind::Entropic => FunctionalClass::Concave,
        }
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        check_node::<S, _>(self, n)?;
        let mut env = vec![S::zero(); self.base.tree().len()];
        envelope_below(&self.base, x, n, &mut env)?;
        Ok(Ext::Finite(env[n.0].clone()))
    }
    fn describe(&self) -> String {
        format!("worst stopping over a {:?} base with {} densities", self.base.kind(), self.base.densities().len())
    }
}
