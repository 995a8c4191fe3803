//! Finite filtered probability spaces stored as rooted trees.
//!
//! Nodes at time `t` are the atoms of `F_t`. Node ids are assigned in time
//! order, children in parent order, so the descendants of any node form a
//! contiguous block at every level.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{int, rat, Ext, Rational, Scalar};

pub const DEFAULT_ENUMERATION_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: String,
    pub time: usize,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSpec {
    pub horizon: usize,
    pub nodes: Vec<NodeSpec>,
    pub leaf_probs: BTreeMap<String, Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationTree {
    horizon: usize,
    labels: Vec<String>,
    time: Vec<usize>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    prob: Vec<Rational>,
    prob_f64: Vec<f64>,
    by_time: Vec<Vec<NodeId>>,
    leaves: Vec<NodeId>,
    leaf_pos: Vec<Option<usize>>,
    leaf_span: Vec<(usize, usize)>,
    subtree: Vec<Vec<NodeId>>,
}

pub type Tree = Arc<FiltrationTree>;

pub fn build_tree(spec: &TreeSpec) -> Result<Tree> {
    FiltrationTree::build(spec).map(Arc::new)
}

impl FiltrationTree {
    pub fn build(spec: &TreeSpec) -> Result<Self> {
        let shape = |m: String| Error::NonTreeShape(m);
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(shape(format!("duplicate node id `{}`", n.id)));
            }
        }
        let mut roots = Vec::new();
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
        for (i, n) in spec.nodes.iter().enumerate() {
            if n.time > spec.horizon {
                return Err(shape(format!("node `{}` lies beyond the horizon", n.id)));
            }
            match &n.parent {
                None => {
                    if n.time != 0 {
                        return Err(shape(format!("node `{}` has no parent but time {}", n.id, n.time)));
                    }
                    roots.push(i);
                }
                Some(p) => {
                    let &pi = index
                        .get(p.as_str())
                        .ok_or_else(|| shape(format!("unknown parent `{p}` of `{}`", n.id)))?;
                    if spec.nodes[pi].time + 1 != n.time {
                        return Err(shape(format!("node `{}` is not one period after its parent", n.id)));
                    }
                    kids[pi].push(i);
                }
            }
        }
        if roots.len() != 1 {
            return Err(shape(format!("expected exactly one root, found {}", roots.len())));
        }
        for (i, n) in spec.nodes.iter().enumerate() {
            let leaf = kids[i].is_empty();
            if leaf && n.time != spec.horizon {
                return Err(shape(format!("leaf `{}` ends before the horizon", n.id)));
            }
            let has_prob = spec.leaf_probs.contains_key(&n.id);
            if leaf && !has_prob {
                return Err(shape(format!("leaf `{}` has no probability", n.id)));
            }
            if !leaf && has_prob {
                return Err(shape(format!("inner node `{}` carries a leaf probability", n.id)));
            }
        }
        for id in spec.leaf_probs.keys() {
            if !index.contains_key(id.as_str()) {
                return Err(shape(format!("probability given for unknown node `{id}`")));
            }
        }

        // Renumber breadth first; children keep their listed order.
        let mut order = vec![roots[0]];
        let mut head = 0;
        while head < order.len() {
            let cur = order[head];
            order.extend(kids[cur].iter().copied());
            head += 1;
        }
        if order.len() != spec.nodes.len() {
            return Err(shape("some nodes are not reachable from the root".into()));
        }
        let mut new_id = vec![0usize; spec.nodes.len()];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = k;
        }
        let n = order.len();
        let mut labels = Vec::with_capacity(n);
        let mut time = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        for &old in &order {
            let s = &spec.nodes[old];
            labels.push(s.id.clone());
            time.push(s.time);
            parent.push(s.parent.as_ref().map(|p| NodeId(new_id[index[p.as_str()]])));
            children.push(kids[old].iter().map(|&c| NodeId(new_id[c])).collect::<Vec<_>>());
        }

        let mut prob = vec![Rational::zero(); n];
        let mut total = Rational::zero();
        for k in (0..n).rev() {
            if children[k].is_empty() {
                let p = spec.leaf_probs[&labels[k]].clone();
                if p.is_zero() {
                    return Err(Error::ZeroProbabilityNode(labels[k].clone()));
                }
                if p < Rational::zero() {
                    return Err(shape(format!("negative probability at `{}`", labels[k])));
                }
                total += &p;
                prob[k] = p;
            } else {
                let mut s = Rational::zero();
                for c in &children[k] {
                    s += &prob[c.0];
                }
                prob[k] = s;
            }
        }
        if !total.is_one() {
            return Err(Error::ProbNotNormalized(crate::scalar::render_rational(&total)));
        }
        Ok(Self::assemble(spec.horizon, labels, time, parent, children, prob))
    }

    fn assemble(
        horizon: usize,
        labels: Vec<String>,
        time: Vec<usize>,
        parent: Vec<Option<NodeId>>,
        children: Vec<Vec<NodeId>>,
        prob: Vec<Rational>,
    ) -> Self {
        let n = labels.len();
        let mut by_time = vec![Vec::new(); horizon + 1];
        for k in 0..n {
            by_time[time[k]].push(NodeId(k));
        }
        let leaves: Vec<NodeId> = (0..n).filter(|&k| children[k].is_empty()).map(NodeId).collect();
        let mut leaf_pos = vec![None; n];
        for (i, l) in leaves.iter().enumerate() {
            leaf_pos[l.0] = Some(i);
        }
        let mut leaf_span = vec![(0, 0); n];
        let mut subtree: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for k in (0..n).rev() {
            if let Some(i) = leaf_pos[k] {
                leaf_span[k] = (i, i + 1);
            } else {
                let first = children[k][0].0;
                let last = children[k][children[k].len() - 1].0;
                leaf_span[k] = (leaf_span[first].0, leaf_span[last].1);
            }
            let mut sub = vec![NodeId(k)];
            for c in &children[k] {
                sub.extend(subtree[c.0].iter().copied());
            }
            sub.sort();
            subtree[k] = sub;
        }
        let prob_f64 = prob.iter().map(|p| p.to_f64()).collect();
        FiltrationTree {
            horizon,
            labels,
            time,
            parent,
            children,
            prob,
            prob_f64,
            by_time,
            leaves,
            leaf_pos,
            leaf_span,
            subtree,
        }
    }

    /// Single node, horizon 0.
    pub fn trivial() -> Tree {
        let mut leaf_probs = BTreeMap::new();
        leaf_probs.insert("root".to_string(), Rational::one());
        build_tree(&TreeSpec {
            horizon: 0,
            nodes: vec![NodeSpec { id: "root".into(), time: 0, parent: None }],
            leaf_probs,
        })
        .expect("trivial tree is valid")
    }

    /// The four-state, two-period space with equal weights and `F_1`
    /// atoms `A = {w1, w2}`, `B = {w3, w4}`.
    pub fn seven_node() -> Tree {
        let node = |id: &str, time, parent: Option<&str>| NodeSpec {
            id: id.into(),
            time,
            parent: parent.map(Into::into),
        };
        let mut leaf_probs = BTreeMap::new();
        for w in ["w1", "w2", "w3", "w4"] {
            leaf_probs.insert(w.to_string(), rat(1, 4));
        }
        build_tree(&TreeSpec {
            horizon: 2,
            nodes: vec![
                node("root", 0, None),
                node("A", 1, Some("root")),
                node("B", 1, Some("root")),
                node("w1", 2, Some("A")),
                node("w2", 2, Some("A")),
                node("w3", 2, Some("B")),
                node("w4", 2, Some("B")),
            ],
            leaf_probs,
        })
        .expect("builtin tree is valid")
    }

    /// Every node at time `t` has `branching[t]` children; uniform leaf weights.
    pub fn uniform(branching: &[usize]) -> Tree {
        let mut nodes = vec![NodeSpec { id: "n0".into(), time: 0, parent: None }];
        let mut frontier = vec!["n0".to_string()];
        for (t, &b) in branching.iter().enumerate() {
            assert!(b >= 1, "branching must be positive");
            let mut next = Vec::new();
            for p in &frontier {
                for _ in 0..b {
                    let id = format!("n{}", nodes.len());
                    nodes.push(NodeSpec { id: id.clone(), time: t + 1, parent: Some(p.clone()) });
                    next.push(id);
                }
            }
            frontier = next;
        }
        let w = rat(1, frontier.len() as i64);
        let leaf_probs = frontier.into_iter().map(|id| (id, w.clone())).collect();
        build_tree(&TreeSpec { horizon: branching.len(), nodes, leaf_probs }).expect("valid")
    }

    /// Random shape with horizon in `1..=max_horizon`, between one and
    /// `max_branching` children per inner node and small-denominator weights.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_horizon: usize, max_branching: usize) -> Tree {
        let horizon = rng.gen_range(1..=max_horizon.max(1));
        let mut nodes = vec![NodeSpec { id: "n0".into(), time: 0, parent: None }];
        let mut frontier = vec!["n0".to_string()];
        for t in 0..horizon {
            let mut next = Vec::new();
            for p in &frontier {
                let b = rng.gen_range(1..=max_branching.max(1));
                for _ in 0..b {
                    let id = format!("n{}", nodes.len());
                    nodes.push(NodeSpec { id: id.clone(), time: t + 1, parent: Some(p.clone()) });
                    next.push(id);
                }
            }
            frontier = next;
        }
        let weights: Vec<i64> = frontier.iter().map(|_| rng.gen_range(1..=4)).collect();
        let total: i64 = weights.iter().sum();
        let leaf_probs = frontier
            .into_iter()
            .zip(weights)
            .map(|(id, w)| (id, rat(w, total)))
            .collect();
        build_tree(&TreeSpec { horizon, nodes, leaf_probs }).expect("valid")
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn len(&self) -> usize {
        self.labels.len()
    }
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.labels.len()).map(NodeId)
    }
    pub fn time(&self, n: NodeId) -> usize {
        self.time[n.0]
    }
    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n.0]
    }
    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n.0]
    }
    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.children[n.0].is_empty()
    }
    pub fn label(&self, n: NodeId) -> &str {
        &self.labels[n.0]
    }
    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId)
    }
    pub fn prob(&self, n: NodeId) -> &Rational {
        &self.prob[n.0]
    }
    pub fn prob_f64(&self, n: NodeId) -> f64 {
        self.prob_f64[n.0]
    }
    /// `P(n)` converted into the scalar type.
    pub fn prob_as<S: Scalar>(&self, n: NodeId) -> S {
        if S::EXACT {
            S::from_rational(&self.prob[n.0])
        } else {
            S::from_f64_exact(self.prob_f64[n.0])
        }
    }
    pub fn nodes_at(&self, t: usize) -> &[NodeId] {
        &self.by_time[t]
    }
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }
    pub fn leaf_index(&self, n: NodeId) -> Option<usize> {
        self.leaf_pos[n.0]
    }
    /// Positions (in `leaves()`) of the leaves below `n`.
    pub fn leaf_range(&self, n: NodeId) -> std::ops::Range<usize> {
        let (a, b) = self.leaf_span[n.0];
        a..b
    }
    pub fn leaves_under(&self, n: NodeId) -> &[NodeId] {
        &self.leaves[self.leaf_range(n)]
    }
    /// `n` and all its descendants, in id order.
    pub fn subtree(&self, n: NodeId) -> &[NodeId] {
        &self.subtree[n.0]
    }
    pub fn is_descendant_or_self(&self, m: NodeId, n: NodeId) -> bool {
        let (a, b) = self.leaf_span[n.0];
        let (c, d) = self.leaf_span[m.0];
        self.time[m.0] >= self.time[n.0] && a <= c && d <= b
    }
    pub fn ancestor_at(&self, n: NodeId, t: usize) -> NodeId {
        assert!(t <= self.time(n));
        let mut cur = n;
        while self.time(cur) > t {
            cur = self.parent(cur).expect("non-root has a parent");
        }
        cur
    }
    /// Root-to-leaf path of the leaf at position `leaf`.
    pub fn path(&self, leaf: usize) -> Vec<NodeId> {
        let mut p = vec![self.leaves[leaf]];
        while let Some(q) = self.parent(*p.last().unwrap()) {
            p.push(q);
        }
        p.reverse();
        p
    }
    /// Number of nodes that have children.
    pub fn inner_count(&self) -> usize {
        self.len() - self.leaf_count()
    }

    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

/// A finite stopping time, stored as the set of nodes where it stops.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingTime {
    nodes: Vec<NodeId>,
    cover: Vec<Option<NodeId>>,
}

impl StoppingTime {
    /// Validates that every root-to-leaf path meets the set exactly once.
    pub fn new(tree: &FiltrationTree, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let mut stop = vec![false; tree.len()];
        for n in &nodes {
            if n.0 >= tree.len() {
                return Err(Error::NotAStoppingTime(format!("node index {} out of range", n.0)));
            }
            stop[n.0] = true;
        }
        let mut cover = vec![None; tree.len()];
        for k in 0..tree.len() {
            let inherited = tree.parent(NodeId(k)).and_then(|p| cover[p.0]);
            if stop[k] {
                if let Some(s) = inherited {
                    return Err(Error::NotAStoppingTime(format!(
                        "path through `{}` is stopped at `{}` and again at `{}`",
                        tree.label(NodeId(k)),
                        tree.label(s),
                        tree.label(NodeId(k))
                    )));
                }
                cover[k] = Some(NodeId(k));
            } else {
                cover[k] = inherited;
            }
        }
        for &l in tree.leaves() {
            if cover[l.0].is_none() {
                return Err(Error::NotAStoppingTime(format!(
                    "path to leaf `{}` is never stopped",
                    tree.label(l)
                )));
            }
        }
        Ok(StoppingTime { nodes, cover })
    }

    pub fn constant(tree: &FiltrationTree, t: usize) -> Self {
        assert!(t <= tree.horizon(), "constant stopping time beyond horizon");
        Self::new(tree, tree.nodes_at(t).iter().copied()).expect("a time layer is a stopping time")
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.binary_search(&n).is_ok()
    }
    pub fn position(&self, n: NodeId) -> Option<usize> {
        self.nodes.binary_search(&n).ok()
    }
    /// The stop node at or above `n`, or `None` if `n` lies strictly before
    /// the stopping time.
    pub fn covering(&self, n: NodeId) -> Option<NodeId> {
        self.cover[n.0]
    }
    pub fn is_before(&self, n: NodeId) -> bool {
        self.cover[n.0].is_none()
    }
    /// `n` lies at or before the stopping time on its paths.
    pub fn is_at_or_before(&self, n: NodeId) -> bool {
        self.cover[n.0].is_none_or(|s| s == n)
    }
    /// The stop node on the path of the leaf at position `leaf`.
    pub fn at_leaf(&self, tree: &FiltrationTree, leaf: usize) -> NodeId {
        self.cover[tree.leaves()[leaf].0].expect("validated")
    }
    /// Pointwise `self <= other`.
    pub fn le(&self, other: &StoppingTime) -> bool {
        other.nodes.iter().all(|&n| self.cover[n.0].is_some())
    }
    pub fn as_constant(&self, tree: &FiltrationTree) -> Option<usize> {
        let t = tree.time(self.nodes[0]);
        self.nodes.iter().all(|&n| tree.time(n) == t).then_some(t)
    }
    pub fn max_time(&self, tree: &FiltrationTree) -> usize {
        self.nodes.iter().map(|&n| tree.time(n)).max().unwrap_or(0)
    }
    pub fn min_time(&self, tree: &FiltrationTree) -> usize {
        self.nodes.iter().map(|&n| tree.time(n)).min().unwrap_or(0)
    }
    pub fn describe(&self, tree: &FiltrationTree) -> String {
        let names: Vec<&str> = self.nodes.iter().map(|&n| tree.label(n)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

pub fn check_order(tau: &StoppingTime, theta: &StoppingTime, tree: &FiltrationTree) -> Result<()> {
    if tau.le(theta) {
        Ok(())
    } else {
        Err(Error::WindowOrderViolation(format!(
            "{} is not below {}",
            tau.describe(tree),
            theta.describe(tree)
        )))
    }
}

/// An `F_tau`-measurable extended real: one value per stop node of `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalValue<S> {
    anchor: StoppingTime,
    values: Vec<Ext<S>>,
}

impl<S: Scalar> ConditionalValue<S> {
    pub fn new(anchor: StoppingTime, values: Vec<Ext<S>>) -> Result<Self> {
        if anchor.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} stop nodes",
                values.len(),
                anchor.len()
            )));
        }
        Ok(ConditionalValue { anchor, values })
    }

    pub fn from_finite(anchor: StoppingTime, values: Vec<S>) -> Result<Self> {
        Self::new(anchor, values.into_iter().map(Ext::Finite).collect())
    }

    pub fn anchor(&self) -> &StoppingTime {
        &self.anchor
    }
    pub fn values(&self) -> &[Ext<S>] {
        &self.values
    }
    pub fn get(&self, n: NodeId) -> Option<&Ext<S>> {
        self.anchor.position(n).map(|i| &self.values[i])
    }
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Ext<S>)> {
        self.anchor.nodes().iter().copied().zip(self.values.iter())
    }
    /// Value seen on the path through `n` (its covering stop node).
    pub fn at_path_of(&self, n: NodeId) -> Option<&Ext<S>> {
        self.anchor.covering(n).and_then(|s| self.get(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.anchor != other.anchor {
            return Err(Error::AnchorMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.add(b)).collect();
        Ok(ConditionalValue { anchor: self.anchor.clone(), values })
    }

    pub fn close_to(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.anchor != other.anchor {
            return Err(Error::AnchorMismatch);
        }
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a.close_to(b, tol)))
    }

    pub fn render(&self, tree: &FiltrationTree) -> Vec<(String, String)> {
        self.iter().map(|(n, v)| (tree.label(n).to_string(), v.render())).collect()
    }
}

/// `E[f | F_n]` at a single node, for a function of the leaves.
pub fn cond_exp_at<S: Scalar>(tree: &FiltrationTree, f: &[S], n: NodeId) -> S {
    let mut num = S::zero();
    for i in tree.leaf_range(n) {
        num = num + tree.prob_as::<S>(tree.leaves()[i]) * f[i].clone();
    }
    num / tree.prob_as::<S>(n)
}

pub fn conditional_expectation<S: Scalar>(
    tree: &FiltrationTree,
    f: &[S],
    theta: &StoppingTime,
) -> Result<ConditionalValue<S>> {
    if f.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} leaf values for {} leaves",
            f.len(),
            tree.leaf_count()
        )));
    }
    let values = theta.nodes().iter().map(|&n| cond_exp_at(tree, f, n)).collect();
    ConditionalValue::from_finite(theta.clone(), values)
}

/// All stopping times with `floor <= theta <= T`.
pub fn enumerate_stopping_times(tree: &FiltrationTree, floor: usize) -> Result<Vec<StoppingTime>> {
    enumerate_stopping_times_within(tree, floor, tree.horizon(), DEFAULT_ENUMERATION_CAP)
}

/// All stopping times with `floor <= theta <= ceil`, refusing to
/// materialize more than `cap` of them.
pub fn enumerate_stopping_times_within(
    tree: &FiltrationTree,
    floor: usize,
    ceil: usize,
    cap: usize,
) -> Result<Vec<StoppingTime>> {
    if floor > ceil || ceil > tree.horizon() {
        return Err(Error::WindowOrderViolation(format!(
            "cannot enumerate stopping times between {floor} and {ceil} on a horizon-{} tree",
            tree.horizon()
        )));
    }
    let count = count_options(tree, tree.root(), floor, ceil);
    if count > cap as u128 {
        let shown = if count == u128::MAX { "more than 2^128".to_string() } else { count.to_string() };
        return Err(Error::EnumerationCapExceeded { count: shown, cap });
    }
    Ok(options(tree, tree.root(), floor, ceil)
        .into_iter()
        .map(|set| StoppingTime::new(tree, set).expect("enumerated sets are stopping times"))
        .collect())
}

/// Number of stopping times with `floor <= theta <= T` (saturating).
pub fn count_stopping_times(tree: &FiltrationTree, floor: usize) -> u128 {
    if floor > tree.horizon() {
        return 0;
    }
    count_options(tree, tree.root(), floor, tree.horizon())
}

fn count_options(tree: &FiltrationTree, n: NodeId, floor: usize, ceil: usize) -> u128 {
    let t = tree.time(n);
    let mut c = u128::from(t >= floor && t <= ceil);
    if t < ceil {
        let mut prod: u128 = 1;
        for &ch in tree.children(n) {
            prod = prod.saturating_mul(count_options(tree, ch, floor, ceil));
        }
        c = c.saturating_add(prod);
    }
    c
}

fn options(tree: &FiltrationTree, n: NodeId, floor: usize, ceil: usize) -> Vec<Vec<NodeId>> {
    let t = tree.time(n);
    let mut out = Vec::new();
    if t >= floor && t <= ceil {
        out.push(vec![n]);
    }
    if t < ceil {
        let mut acc: Vec<Vec<NodeId>> = vec![Vec::new()];
        for &ch in tree.children(n) {
            let sub = options(tree, ch, floor, ceil);
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
        out.extend(acc);
    }
    out
}

/// Leaf values as rationals from small integers, for tests and fixtures.
pub fn leaf_values(values: &[i64]) -> Vec<Rational> {
    values.iter().map(|&v| int(v)).collect()
}
