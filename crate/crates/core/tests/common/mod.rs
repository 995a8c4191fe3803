//! Shared helpers for the property suites: every case is driven by a seed
//! so the random objects stay valid by construction.

#![allow(dead_code)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dynarisk::filtration::{FiltrationTree, Tree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A seed together with a random tree of horizon `<= 3` and branching `<= 3`.
pub fn seeded_tree() -> impl Strategy<Value = (ChaCha8Rng, Tree)> {
    any::<u64>().prop_map(|s| {
        let mut r = rng(s);
        let t = FiltrationTree::random(&mut r, 3, 3);
        (r, t)
    })
}

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}
