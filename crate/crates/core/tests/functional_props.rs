mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{config, rng, seeded_tree};
use dynarisk::composition::{atom_hull_membership, normalize_from, paste_closure, ScenarioSet};
use dynarisk::demo::PolicyModel;
use dynarisk::filtration::{FiltrationTree, StoppingTime, Tree};
use dynarisk::functionals::{
    check_relevance, eval, eval_at_time, penalty_sharp, recover_from_acceptance, snell_worst_stopping,
    worst_stopping_brute_force, EntropicProcess, RobustProcess, TerminalBase, TerminalKind, UtilityProcess,
};
use dynarisk::processes::{pairing, AdaptedProcess, DensityProcess};
use dynarisk::random;
use dynarisk::scalar::{int, rat, Ext};
use dynarisk::Rational;

fn small_tree(r: &mut impl Rng) -> Tree {
    FiltrationTree::random(r, 2, 3)
}

fn coherent(tree: &Tree, r: &mut impl Rng) -> RobustProcess {
    let k = r.gen_range(1..=4);
    let ds = (0..k)
        .map(|_| {
            let positive = r.gen_bool(0.7);
            random::density_process(tree, r, positive)
        })
        .collect();
    RobustProcess::coherent(&ScenarioSet::full(tree.clone(), ds).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn penalty_duality_bound_and_gamma_floor(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = small_tree(&mut r);
        let f = if r.gen_bool(0.5) { coherent(&tree, &mut r) } else { PolicyModel::random(&tree, &mut r).process(1 << 10).unwrap() };
        let t = r.gen_range(0..tree.horizon());
        let tau = StoppingTime::constant(&tree, t);
        let end = StoppingTime::constant(&tree, tree.horizon());
        let positive = r.gen_bool(0.5);
        let a = normalize_from(&random::density_process(&tree, &mut r, positive), &tau);
        let x = random::process(&tree, &mut r);
        let ps = penalty_sharp(&f, &a, &tau).unwrap();
        let phi = eval(&f, &x, &tau).unwrap();
        let pair = pairing(&x, &a, &tau, &end).unwrap();
        for i in 0..tau.len() {
            prop_assert!(ps.values()[i] <= pair.values()[i].sub(&phi.values()[i]));
        }
        // The sharp penalty dominates the representing one on the scenarios.
        for (j, b) in f.scenarios().iter().enumerate() {
            let masses = b.residual_masses();
            let ps = penalty_sharp(&f, &normalize_from(b, &tau), &tau).unwrap();
            for (i, &n) in tau.nodes().iter().enumerate() {
                if masses[n.0] == Rational::from_integer(0.into()) {
                    continue;
                }
                let gamma = f.penalty().map(|p| p.get(j, n).clone()).unwrap_or_else(Ext::zero);
                prop_assert!(ps.values()[i] >= gamma);
            }
        }
    }

    #[test]
    fn coherent_penalty_is_zero_or_minus_infinity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = small_tree(&mut r);
        let f = coherent(&tree, &mut r);
        let tau = StoppingTime::constant(&tree, r.gen_range(0..tree.horizon()));
        let end = StoppingTime::constant(&tree, tree.horizon());
        let a = normalize_from(&random::density_process(&tree, &mut r, false), &tau);
        let ps = penalty_sharp(&f, &a, &tau).unwrap();
        for (&n, v) in tau.nodes().iter().zip(ps.values()) {
            let inside = atom_hull_membership(&a, f.scenarios(), n, &end).unwrap().is_none_or(|h| h.is_inside());
            prop_assert_eq!(v, &if inside { Ext::zero() } else { Ext::NegInf });
        }
    }

    #[test]
    fn entropic_value_is_the_relative_entropy_infimum((mut r, tree) in seeded_tree()) {
        let f = EntropicProcess::new(tree.clone(), vec![vec![int(1); tree.leaf_count()]], 0).unwrap();
        let x = random::process(&tree, &mut r).to_f64();
        let v = eval_at_time::<f64, _>(&f, &x, 0).unwrap().values()[0].to_f64();
        let p: Vec<f64> = tree.leaves().iter().map(|&l| tree.prob_f64(l)).collect();
        let xt: Vec<f64> = tree.leaves().iter().map(|&l| *x.get(l)).collect();
        let bound = |q: &[f64]| -> f64 {
            p.iter().zip(q).zip(&xt).map(|((pi, qi), xi)| pi * qi * (xi + if *qi > 0.0 { qi.ln() } else { 0.0 })).sum()
        };
        for _ in 0..5 {
            let q: Vec<f64> = random::leaf_density(&tree, &mut r, false).iter().map(dynarisk::Scalar::to_f64).collect();
            prop_assert!(v <= bound(&q) + 1e-9);
        }
        let z: f64 = p.iter().zip(&xt).map(|(pi, xi)| pi * (-xi).exp()).sum();
        let gibbs: Vec<f64> = xt.iter().map(|xi| (-xi).exp() / z).collect();
        prop_assert!((v - bound(&gibbs)).abs() <= 1e-9);
    }

    #[test]
    fn snell_envelope_is_the_worst_stopping_value(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = small_tree(&mut r);
        let gens: Vec<Vec<Rational>> = (0..2).map(|_| random::leaf_density(&tree, &mut r, true)).collect();
        let closed = paste_closure(&tree, &gens, 64).unwrap_or_else(|_| vec![vec![int(1); tree.leaf_count()]]);
        let exact = TerminalBase::new(tree.clone(), TerminalKind::Expectation, closed.clone()).unwrap();
        let x = random::process(&tree, &mut r);
        for t in 0..=tree.horizon() {
            let s = snell_worst_stopping(&exact, &x, t).unwrap();
            prop_assert_eq!(&s.values, &worst_stopping_brute_force(&exact, &x, t).unwrap());
        }
        let entropic = TerminalBase::new(tree.clone(), TerminalKind::Entropic, closed).unwrap();
        let xf = x.to_f64();
        for t in 0..=tree.horizon() {
            let s = snell_worst_stopping(&entropic, &xf, t).unwrap();
            prop_assert!(s.values.close_to(&worst_stopping_brute_force(&entropic, &xf, t).unwrap(), 1e-9).unwrap());
        }
    }

    /// Mixing every scenario with weight `1/n` of a full-support scenario
    /// moves values by at most `(1/n) * 2 sup|X|` at the root, and by
    /// `O(1/n)` everywhere.
    #[test]
    fn small_mixtures_with_a_full_support_scenario_change_nothing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = small_tree(&mut r);
        let c = random::density_process(&tree, &mut r, true);
        let mut q: Vec<DensityProcess> = (0..r.gen_range(1..=3)).map(|_| random::density_process(&tree, &mut r, false)).collect();
        q.push(c.clone());
        let f = RobustProcess::coherent(&ScenarioSet::full(tree.clone(), q.clone()).unwrap()).unwrap();
        let zero = StoppingTime::constant(&tree, 0);
        let end = StoppingTime::constant(&tree, tree.horizon());
        prop_assert!(check_relevance(&f, &zero, &end).unwrap().relevant);
        let mixed = |n: i64| {
            let lam = Rational::new((n - 1).into(), n.into());
            let m: Vec<DensityProcess> = q.iter().map(|b| b.mix(&c, &lam).unwrap()).collect();
            RobustProcess::coherent(&ScenarioSet::full(tree.clone(), m).unwrap()).unwrap()
        };
        let (coarse, fine) = (mixed(1_000), mixed(1_000_000));
        // Values in [-1/2, 1/2].
        let x = random::process(&tree, &mut r).scale(&rat(1, 16));
        let gap = |g: &RobustProcess, n| {
            let a = UtilityProcess::<Rational>::value_at(&f, &x, n).unwrap();
            let b = UtilityProcess::<Rational>::value_at(g, &x, n).unwrap();
            (a.to_f64() - b.to_f64()).abs()
        };
        prop_assert!(gap(&fine, tree.root()) <= 1e-6);
        for n in tree.node_ids() {
            prop_assert!(gap(&fine, n) <= gap(&coarse, n) / 100.0 + 1e-12, "no convergence at `{}`", tree.label(n));
        }
    }

    #[test]
    fn recovery_from_the_acceptance_set(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = small_tree(&mut r);
        let f = PolicyModel::random(&tree, &mut r).process(1 << 10).unwrap();
        let x = random::process(&tree, &mut r);
        let tau = random::stopping_time(&tree, 0, 0.5, &mut r);
        let direct = eval(&f, &x, &tau).unwrap();
        let rec = recover_from_acceptance(&f, &x, &tau).unwrap();
        for (a, b) in direct.values().iter().zip(rec.values()) {
            prop_assert!((a.to_f64() - b.to_f64()).abs() <= 1e-9);
        }
        let zero = AdaptedProcess::constant(tree.clone(), rat(0, 1));
        prop_assert!(eval(&f, &zero, &tau).unwrap().values().iter().all(|v| *v == Ext::zero()));
    }
}
