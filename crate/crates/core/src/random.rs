//! Seeded random objects on a given tree: small rationals, processes,
//! densities, stopping times and atom sets.

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::filtration::{cond_exp_at, FiltrationTree, NodeId, StoppingTime, Tree};
use crate::processes::{AdaptedProcess, DensityProcess};
use crate::scalar::{rat, Rational};

/// `p / q` with `p` in `[-8, 8]` and `q` in `{1, 2, 4}`.
pub fn small_rational<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let p = rng.gen_range(-8i64..=8);
    let q = *[1i64, 2, 4].choose(rng).expect("non-empty");
    rat(p, q)
}

pub fn process<R: Rng + ?Sized>(tree: &Tree, rng: &mut R) -> AdaptedProcess<Rational> {
    let values = (0..tree.len()).map(|_| small_rational(rng)).collect();
    AdaptedProcess::new(tree.clone(), values).expect("one value per node")
}

/// A leaf density with `E[f] = 1`; strictly positive when `positive`.
pub fn leaf_density<R: Rng + ?Sized>(tree: &FiltrationTree, rng: &mut R, positive: bool) -> Vec<Rational> {
    let lo = if positive { 1 } else { 0 };
    loop {
        let w: Vec<Rational> = (0..tree.leaf_count()).map(|_| rat(rng.gen_range(lo..=4), 1)).collect();
        let mean = cond_exp_at(tree, &w, tree.root());
        if !mean.is_zero() {
            return w.into_iter().map(|v| v / &mean).collect();
        }
    }
}

/// A density process in `D_{0,T}` with random increments on every node;
/// when `positive` every leaf carries mass, so the result is in `D^e`.
pub fn density_process<R: Rng + ?Sized>(tree: &Tree, rng: &mut R, positive: bool) -> DensityProcess {
    loop {
        let raw: Vec<Rational> = tree
            .node_ids()
            .map(|n| {
                let lo = if positive && tree.is_leaf(n) { 1 } else { 0 };
                rat(rng.gen_range(lo..=3), 1)
            })
            .collect();
        let total: Rational = tree.node_ids().map(|n| tree.prob(n) * &raw[n.0]).sum();
        if !total.is_zero() {
            let inc = raw.into_iter().map(|v| v / &total).collect();
            return DensityProcess::new(tree.clone(), inc).expect("nonnegative");
        }
    }
}

/// Random weights `mu_0..mu_T` summing to one with `mu_T > 0`.
pub fn weights<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> Vec<Rational> {
    let raw: Vec<i64> = (0..=horizon).map(|t| rng.gen_range(if t == horizon { 1 } else { 0 }..=3)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|v| rat(v, total)).collect()
}

/// A stopping time `floor <= theta <= T`, stopping at each eligible node
/// with probability `p_stop`.
pub fn stopping_time<R: Rng + ?Sized>(tree: &FiltrationTree, floor: usize, p_stop: f64, rng: &mut R) -> StoppingTime {
    let mut nodes = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(n) = stack.pop() {
        if tree.is_leaf(n) || (tree.time(n) >= floor && rng.gen_bool(p_stop)) {
            nodes.push(n);
        } else {
            stack.extend(tree.children(n).iter().copied());
        }
    }
    StoppingTime::new(tree, nodes).expect("antichain covering every path")
}

/// A non-empty random subset of the stop nodes of `theta`.
pub fn atoms<R: Rng + ?Sized>(theta: &StoppingTime, rng: &mut R) -> Vec<NodeId> {
    let mut pick: Vec<NodeId> = theta.nodes().iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if pick.is_empty() {
        pick.push(*theta.nodes().choose(rng).expect("stopping times are non-empty"));
    }
    pick
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::check_leaf_density;
    use crate::processes::{classify_density, DensityClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let tree = FiltrationTree::random(&mut rng, 3, 3);
            let f = leaf_density(&tree, &mut rng, true);
            check_leaf_density(&tree, &f).unwrap();
            let a = density_process(&tree, &mut rng, true);
            let zero = StoppingTime::constant(&tree, 0);
            let end = StoppingTime::constant(&tree, tree.horizon());
            assert_ne!(classify_density(&a, &zero, &end), DensityClass::NotInD);
            let theta = stopping_time(&tree, 1.min(tree.horizon()), 0.5, &mut rng);
            assert!(theta.min_time(&tree) >= 1.min(tree.horizon()));
            let mu = weights(tree.horizon(), &mut rng);
            crate::composition::check_weights(&tree, &mu).unwrap();
        }
    }
}
