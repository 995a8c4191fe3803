mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{config, seeded_tree};
use dynarisk::filtration::{FiltrationTree, StoppingTime};
use dynarisk::processes::{pairing, sup_norm, AdaptedProcess};
use dynarisk::random;
use dynarisk::scalar::{rat, Ext};
use dynarisk::Rational;

fn window(tree: &FiltrationTree, rng: &mut impl Rng) -> (StoppingTime, StoppingTime) {
    let tau = random::stopping_time(tree, 0, 0.3, rng);
    // theta >= tau: stop at or below every stop node of tau.
    let theta_nodes: Vec<_> = tau
        .nodes()
        .iter()
        .flat_map(|&k| {
            let mut out = Vec::new();
            let mut stack = vec![k];
            while let Some(n) = stack.pop() {
                if tree.is_leaf(n) || rng.gen_bool(0.4) {
                    out.push(n);
                } else {
                    stack.extend(tree.children(n).iter().copied());
                }
            }
            out
        })
        .collect();
    let theta = StoppingTime::new(tree, theta_nodes).unwrap();
    (tau, theta)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn pairing_is_bilinear((mut rng, tree) in seeded_tree()) {
        let (tau, theta) = window(&tree, &mut rng);
        let x = random::process(&tree, &mut rng);
        let y = random::process(&tree, &mut rng);
        let (al, be) = (random::small_rational(&mut rng), random::small_rational(&mut rng));
        let a = random::density_process(&tree, &mut rng, false);
        let combo = x.scale(&al).add(&y.scale(&be)).unwrap();
        let lhs = pairing(&combo, &a, &tau, &theta).unwrap();
        let px = pairing(&x, &a, &tau, &theta).unwrap();
        let py = pairing(&y, &a, &tau, &theta).unwrap();
        for i in 0..tau.len() {
            let want = px.values()[i].scale(&al).add(&py.values()[i].scale(&be));
            prop_assert_eq!(&lhs.values()[i], &want);
        }
    }

    #[test]
    fn pairing_is_bounded_by_the_sup_norm((mut rng, tree) in seeded_tree()) {
        let (tau, theta) = window(&tree, &mut rng);
        let x = random::process(&tree, &mut rng);
        let a = random::density_process(&tree, &mut rng, false);
        let p = pairing(&x, &a, &tau, &theta).unwrap();
        let mass = a.mass(&tau, &theta).unwrap();
        let norm = sup_norm(&x, &tau, &theta).unwrap();
        for i in 0..tau.len() {
            // Rescale atoms with mass above one down to mass one.
            let m = mass.values()[i].finite().unwrap().clone();
            let scale = if m > rat(1, 1) { rat(1, 1) / m } else { rat(1, 1) };
            let v = p.values()[i].scale(&scale);
            let abs = if v < Ext::zero() { v.neg() } else { v };
            prop_assert!(abs <= norm.values()[i].clone());
        }
    }

    #[test]
    fn projection_is_idempotent_and_invisible_to_the_pairing((mut rng, tree) in seeded_tree()) {
        let (tau, theta) = window(&tree, &mut rng);
        let x = random::process(&tree, &mut rng);
        let px = x.project(&tau, &theta).unwrap();
        prop_assert_eq!(&px.project(&tau, &theta).unwrap(), &px);
        // A density supported in [tau, theta].
        let raw = random::density_process(&tree, &mut rng, false);
        let a = dynarisk::DensityProcess::from_fn(tree.clone(), |n| {
            if tau.is_before(n) || !theta.is_at_or_before(n) { Rational::from_integer(0.into()) } else { raw.get(n).clone() }
        }).unwrap();
        prop_assert_eq!(pairing(&px, &a, &tau, &theta).unwrap(), pairing(&x, &a, &tau, &theta).unwrap());
    }

    #[test]
    fn shifting_from_tau_adds_the_mass((mut rng, tree) in seeded_tree()) {
        let (tau, theta) = window(&tree, &mut rng);
        let x = random::process(&tree, &mut rng);
        let m = random::small_rational(&mut rng);
        let a = random::density_process(&tree, &mut rng, false);
        let lhs = pairing(&x.shift_from(&tau, &m), &a, &tau, &theta).unwrap();
        let base = pairing(&x, &a, &tau, &theta).unwrap();
        let mass = pairing(&AdaptedProcess::constant(tree.clone(), m.clone()), &a, &tau, &theta).unwrap();
        prop_assert_eq!(lhs, base.add(&mass).unwrap());
    }
}
