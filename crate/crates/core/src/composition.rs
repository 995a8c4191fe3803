//! Concatenation of density processes, pasting of terminal densities,
//! normalized shifts, density constructors and stability checks.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{cond_exp_at, FiltrationTree, NodeId, StoppingTime, Tree};
use crate::optim::{hull_membership, HullMembership};
use crate::processes::{classify_density, DensityClass, DensityProcess};
use crate::scalar::Rational;

fn check_atoms(theta: &StoppingTime, atoms: &[NodeId]) -> Result<()> {
    if atoms.iter().all(|&k| theta.contains(k)) {
        Ok(())
    } else {
        Err(Error::NotAntichainSubset)
    }
}

/// `a (+)^theta_A b`: below each `k` in `A` with positive remaining mass of
/// `b`, the increments of `a` are replaced by those of `b` rescaled to the
/// remaining mass of `a` at `k`.
pub fn concat(a: &DensityProcess, b: &DensityProcess, theta: &StoppingTime, atoms: &[NodeId]) -> Result<DensityProcess> {
    if !a.tree().same_as(b.tree()) {
        return Err(Error::TreeMismatch);
    }
    check_atoms(theta, atoms)?;
    let ra = a.residual_masses();
    let rb = b.residual_masses();
    let tree = a.tree().clone();
    let mut inc = a.increments().to_vec();
    for &k in atoms {
        if rb[k.0].is_zero() {
            continue;
        }
        let ratio = &ra[k.0] / &rb[k.0];
        for &m in tree.subtree(k) {
            inc[m.0] = b.get(m) * &ratio;
        }
    }
    DensityProcess::new(tree, inc)
}

/// Checks `f >= 0` and `E[f] = 1` for a function of the leaves.
pub fn check_leaf_density(tree: &FiltrationTree, f: &[Rational]) -> Result<()> {
    if f.len() != tree.leaf_count() {
        return Err(Error::DimensionMismatch(format!("{} leaf values for {} leaves", f.len(), tree.leaf_count())));
    }
    if f.iter().any(|v| v.is_negative()) {
        return Err(Error::NotADensity("negative value".into()));
    }
    let mean = cond_exp_at(tree, f, tree.root());
    if !mean.is_one() {
        return Err(Error::NotADensity(format!("expectation is {}", crate::scalar::render_rational(&mean))));
    }
    Ok(())
}

/// `f (x)^theta_A g = (E[f|F_theta] / E[g|F_theta]) g` on `A` where
/// `E[g|F_theta] > 0`, and `f` elsewhere.
pub fn paste_density(
    tree: &FiltrationTree,
    f: &[Rational],
    g: &[Rational],
    theta: &StoppingTime,
    atoms: &[NodeId],
) -> Result<Vec<Rational>> {
    check_leaf_density(tree, f)?;
    check_leaf_density(tree, g)?;
    check_atoms(theta, atoms)?;
    let mut out = f.to_vec();
    for &k in atoms {
        let eg = cond_exp_at(tree, g, k);
        if eg.is_zero() {
            continue;
        }
        let ratio = cond_exp_at(tree, f, k) / eg;
        for i in tree.leaf_range(k) {
            out[i] = &g[i] * &ratio;
        }
    }
    Ok(out)
}

/// The conditional shift of `a` to `[theta, T]`: rescaled to unit mass
/// where mass remains, a unit point mass at `theta` where none does.
pub fn normalize_from(a: &DensityProcess, theta: &StoppingTime) -> DensityProcess {
    let r = a.residual_masses();
    let tree = a.tree().clone();
    let inc = tree
        .node_ids()
        .map(|m| match theta.covering(m) {
            None => Rational::zero(),
            Some(k) if r[k.0].is_zero() => {
                if m == k {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Some(k) => a.get(m) / &r[k.0],
        })
        .collect();
    DensityProcess::new(tree, inc).expect("nonnegative by construction")
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityMode {
    /// All mass at the horizon: `f 1_[T, inf)`.
    Final,
    /// `E[f | F_xi] 1_[xi, inf)`.
    Stopped(StoppingTime),
    /// `Delta a_t = mu_t E[f | F_t]`.
    Weighted(Vec<Rational>),
}

pub fn check_weights(tree: &FiltrationTree, mu: &[Rational]) -> Result<()> {
    if mu.len() != tree.horizon() + 1 {
        return Err(Error::BadWeights(format!("{} weights for {} dates", mu.len(), tree.horizon() + 1)));
    }
    if mu.iter().any(|m| m.is_negative()) {
        return Err(Error::BadWeights("negative weight".into()));
    }
    let total: Rational = mu.iter().sum();
    if !total.is_one() {
        return Err(Error::BadWeights(format!("weights sum to {}", crate::scalar::render_rational(&total))));
    }
    if !mu[mu.len() - 1].is_positive() {
        return Err(Error::BadWeights("tail sums must stay positive (last weight is zero)".into()));
    }
    Ok(())
}

pub fn build_density(tree: &Tree, mode: &DensityMode, f: &[Rational]) -> Result<DensityProcess> {
    check_leaf_density(tree, f)?;
    let t = tree.clone();
    match mode {
        DensityMode::Final => DensityProcess::from_fn(tree.clone(), |n| match t.leaf_index(n) {
            Some(i) => f[i].clone(),
            None => Rational::zero(),
        }),
        DensityMode::Stopped(xi) => DensityProcess::from_fn(tree.clone(), |n| {
            if xi.contains(n) {
                cond_exp_at(&t, f, n)
            } else {
                Rational::zero()
            }
        }),
        DensityMode::Weighted(mu) => {
            check_weights(tree, mu)?;
            DensityProcess::from_fn(tree.clone(), |n| &mu[t.time(n)] * cond_exp_at(&t, f, n))
        }
    }
}

/// A finite non-empty set of densities on a common window.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    tree: Tree,
    densities: Vec<DensityProcess>,
    tau: StoppingTime,
    theta: StoppingTime,
    all_in_de: bool,
}

impl ScenarioSet {
    pub fn new(tree: Tree, densities: Vec<DensityProcess>, tau: StoppingTime, theta: StoppingTime) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::EmptyScenarioSet);
        }
        let mut all_in_de = true;
        for (i, d) in densities.iter().enumerate() {
            if !d.tree().same_as(&tree) {
                return Err(Error::TreeMismatch);
            }
            match classify_density(d, &tau, &theta) {
                DensityClass::NotInD => {
                    return Err(Error::NotADensity(format!("scenario {i} does not have unit mass on the window")))
                }
                DensityClass::InD => all_in_de = false,
                DensityClass::InDe => {}
            }
        }
        Ok(ScenarioSet { tree, densities, tau, theta, all_in_de })
    }

    /// Window `[0, T]`.
    pub fn full(tree: Tree, densities: Vec<DensityProcess>) -> Result<Self> {
        let tau = StoppingTime::constant(&tree, 0);
        let theta = StoppingTime::constant(&tree, tree.horizon());
        Self::new(tree, densities, tau, theta)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
    pub fn densities(&self) -> &[DensityProcess] {
        &self.densities
    }
    pub fn tau(&self) -> &StoppingTime {
        &self.tau
    }
    pub fn theta(&self) -> &StoppingTime {
        &self.theta
    }
    pub fn all_in_de(&self) -> bool {
        self.all_in_de
    }
    pub fn len(&self) -> usize {
        self.densities.len()
    }
    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityViolation {
    pub first: usize,
    pub second: usize,
    pub time: usize,
    pub atoms: Vec<String>,
    pub result: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// False when some atom families were sampled instead of enumerated;
    /// a positive verdict then only holds up to the cap.
    pub complete: bool,
    pub concatenations_checked: usize,
    pub violations: Vec<StabilityViolation>,
}

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub subset_cap: usize,
    pub samples: usize,
    pub seed: u64,
    /// Error out instead of sampling when the cap is exceeded.
    pub strict: bool,
    /// Stop after this many violations.
    pub max_violations: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { subset_cap: 1 << 12, samples: 64, seed: 0, strict: false, max_violations: 8 }
    }
}

pub fn check_stability(q: &ScenarioSet, use_hull: bool) -> Result<StabilityReport> {
    check_stability_with(q, use_hull, &StabilityOptions::default())
}

fn atom_families(atoms: &[NodeId], opts: &StabilityOptions, rng: &mut ChaCha8Rng) -> Result<(Vec<Vec<NodeId>>, bool)> {
    let k = atoms.len();
    let total = if k >= 63 { usize::MAX } else { (1usize << k) - 1 };
    if total <= opts.subset_cap {
        let fams = (1..=total)
            .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| atoms[i]).collect())
            .collect();
        return Ok((fams, true));
    }
    if opts.strict {
        return Err(Error::SubsetEnumerationCapExceeded { count: total, cap: opts.subset_cap });
    }
    let mut fams: Vec<Vec<NodeId>> = atoms.iter().map(|&a| vec![a]).collect();
    fams.push(atoms.to_vec());
    for _ in 0..opts.samples {
        let mut pick: Vec<NodeId> = atoms.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if pick.is_empty() {
            pick.push(*atoms.choose(rng).expect("non-empty"));
        }
        fams.push(pick);
    }
    Ok((fams, false))
}

pub fn check_stability_with(q: &ScenarioSet, use_hull: bool, opts: &StabilityOptions) -> Result<StabilityReport> {
    let tree = q.tree();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let members: HashSet<&DensityProcess> = q.densities().iter().collect();
    let generators: Vec<Vec<Rational>> = q.densities().iter().map(|d| d.increments().to_vec()).collect();
    let mut report = StabilityReport { stable: true, complete: true, concatenations_checked: 0, violations: Vec::new() };
    for s in 0..=tree.horizon() {
        let theta = StoppingTime::constant(tree, s);
        let (families, complete) = atom_families(theta.nodes(), opts, &mut rng)?;
        report.complete &= complete;
        for (i, a) in q.densities().iter().enumerate() {
            for (j, b) in q.densities().iter().enumerate() {
                if i == j {
                    continue;
                }
                for fam in &families {
                    let c = concat(a, b, &theta, fam)?;
                    report.concatenations_checked += 1;
                    let inside = if members.contains(&c) {
                        true
                    } else if use_hull {
                        hull_membership(c.increments(), &generators)?.is_inside()
                    } else {
                        false
                    };
                    if !inside {
                        report.stable = false;
                        report.violations.push(StabilityViolation {
                            first: i,
                            second: j,
                            time: s,
                            atoms: fam.iter().map(|&k| tree.label(k).to_string()).collect(),
                            result: c.render(),
                        });
                        if report.violations.len() >= opts.max_violations {
                            return Ok(report);
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Smallest superset of `generators` closed under concatenation. Closing
/// under single-atom concatenations at inner nodes is enough: any other
/// concatenation is a composition of those.
pub fn concat_closure(generators: &[DensityProcess], cap: usize) -> Result<Vec<DensityProcess>> {
    let Some(first) = generators.first() else {
        return Err(Error::EmptyScenarioSet);
    };
    let tree = first.tree().clone();
    let inner: Vec<(NodeId, StoppingTime)> = tree
        .node_ids()
        .filter(|&n| !tree.is_leaf(n))
        .map(|n| (n, StoppingTime::constant(&tree, tree.time(n))))
        .collect();
    closure(generators.to_vec(), cap, |x, y, out| {
        for (n, theta) in &inner {
            out.push(concat(x, y, theta, &[*n])?);
        }
        Ok(())
    })
}

/// Smallest superset of the leaf densities closed under pasting.
pub fn paste_closure(tree: &Tree, densities: &[Vec<Rational>], cap: usize) -> Result<Vec<Vec<Rational>>> {
    if densities.is_empty() {
        return Err(Error::EmptyScenarioSet);
    }
    let inner: Vec<(NodeId, StoppingTime)> = tree
        .node_ids()
        .filter(|&n| !tree.is_leaf(n))
        .map(|n| (n, StoppingTime::constant(tree, tree.time(n))))
        .collect();
    closure(densities.to_vec(), cap, |f, g, out| {
        for (n, theta) in &inner {
            out.push(paste_density(tree, f, g, theta, &[*n])?);
        }
        Ok(())
    })
}

fn closure<T: Clone + Eq + std::hash::Hash>(
    start: Vec<T>,
    cap: usize,
    step: impl Fn(&T, &T, &mut Vec<T>) -> Result<()>,
) -> Result<Vec<T>> {
    let mut items: Vec<T> = Vec::new();
    let mut seen: HashSet<T> = HashSet::new();
    for s in start {
        if seen.insert(s.clone()) {
            items.push(s);
        }
    }
    let mut done = 0;
    let mut buf = Vec::new();
    while done < items.len() {
        let k = done;
        for j in 0..=k {
            buf.clear();
            step(&items[k], &items[j], &mut buf)?;
            if j != k {
                step(&items[j], &items[k], &mut buf)?;
            }
            for c in buf.drain(..) {
                if seen.insert(c.clone()) {
                    items.push(c);
                    if items.len() > cap {
                        return Err(Error::EnumerationCapExceeded { count: format!("more than {cap}"), cap });
                    }
                }
            }
        }
        done += 1;
    }
    Ok(items)
}

/// The conditional law of `a` seen from node `n` over the window ending at
/// `theta`: `P(m | n) Delta a_m / <1, a>_n` for `m` below `n`, or `None`
/// when no mass remains.
pub fn atom_vector(a: &DensityProcess, n: NodeId, theta: &StoppingTime) -> Option<Vec<Rational>> {
    let tree = a.tree();
    let sub = tree.subtree(n);
    let raw: Vec<Rational> = sub
        .iter()
        .map(|&m| {
            if theta.is_at_or_before(m) {
                tree.prob(m) / tree.prob(n) * a.get(m)
            } else {
                Rational::zero()
            }
        })
        .collect();
    let mass: Rational = raw.iter().sum();
    if mass.is_zero() {
        return None;
    }
    Some(raw.into_iter().map(|v| v / &mass).collect())
}

/// Membership of the conditional law of `a` at `n` in the convex hull of
/// the conditional laws of the scenarios that keep mass at `n`. `None`
/// when `a` has no mass at `n`.
pub fn atom_hull_membership(
    a: &DensityProcess,
    q: &[DensityProcess],
    n: NodeId,
    theta: &StoppingTime,
) -> Result<Option<HullMembership>> {
    let Some(p) = atom_vector(a, n, theta) else {
        return Ok(None);
    };
    let gens: Vec<Vec<Rational>> = q.iter().filter_map(|b| atom_vector(b, n, theta)).collect();
    if gens.is_empty() {
        let d = p.len();
        // Nothing to be inside of; the zero functional separates trivially.
        return Ok(Some(HullMembership::Outside { separator: vec![Rational::zero(); d], level: Rational::one() }));
    }
    hull_membership(&p, &gens).map(Some)
}
