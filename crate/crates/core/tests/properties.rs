use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_bigint::BigUint;
use pacdist::boolcore::{random_tree, total_possible_probes, Clause, DecisionTree, SampleMask};
use pacdist::experiment::oracles::{
    brute_force_best_value, direct_agnostic_error, equal_on_union, naive_vc_dimension, pairwise_pareto_frontier,
};
use pacdist::juntadistill::{junta_to_tree, JuntaSpec};
use pacdist::probe::{filter_top_k, ProbeConfig, ProbeDesign, ProbeMode, ProbeResult};
use pacdist::rng_from_seed;
use pacdist::statlab::{agnostic_instance_error, pareto_frontier, vc_dimension, AgnosticInstance, FiniteClass};
use pacdist::treedistill::{stitch_optimal_tree, tree_value, LeafValues};
use proptest::prelude::*;
use rand::Rng;

fn probe_cfg(tau: f64, n: usize) -> ProbeConfig {
    ProbeConfig {
        tau,
        eps: 0.05,
        delta: 0.1,
        n_train: n,
        n_val: n,
        iters: 200_000,
        mode: ProbeMode::Theoretical,
        intercept: false,
    }
}

fn random_design(seed: u64, n: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let train = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let val = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let y_train = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y_val = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (train, val, y_train, y_val)
}

fn clauses_up_to(d: usize, r: usize) -> BTreeSet<Clause> {
    let mut all = BTreeSet::from([Clause::empty(d)]);
    let mut level = vec![Clause::empty(d)];
    for _ in 0..r {
        let next: BTreeSet<Clause> = level.iter().flat_map(Clause::successors).collect();
        all.extend(next.iter().cloned());
        level = next.into_iter().collect();
    }
    all
}

fn dyadic_table(seed: u64, d: usize, r: usize) -> BTreeMap<Clause, f64> {
    let mut rng = rng_from_seed(seed);
    let mut values = BTreeMap::new();
    for c in clauses_up_to(d, r) {
        if c.is_empty() || rng.random_bool(0.8) {
            values.insert(c, rng.random_range(-32i32..=32) as f64 / 32.0);
        }
    }
    values
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn result_with_loss(val_loss: f64) -> ProbeResult {
    ProbeResult {
        w: Vec::new(),
        train_loss: val_loss,
        val_loss,
        unprojected_val_loss: None,
        decision: false,
        iterations: 0,
        gap: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probe_stays_in_ball(seed in any::<u64>(), m in 1usize..6, tau in 0.01f64..5.0) {
        let (train, val, yt, yv) = random_design(seed, 40, m);
        let design = ProbeDesign::new(&train, &val, false).unwrap();
        let r = design.fit(&yt, &yv, &probe_cfg(tau, 40)).unwrap();
        let norm = r.w.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= tau * (1.0 + 1e-9), "norm {} > tau {}", norm, tau);
    }

    #[test]
    fn larger_ball_fits_no_worse(seed in any::<u64>(), m in 1usize..6, tau in 0.01f64..3.0, grow in 1.0f64..4.0) {
        let (train, val, yt, yv) = random_design(seed, 40, m);
        let design = ProbeDesign::new(&train, &val, false).unwrap();
        let small = design.fit(&yt, &yv, &probe_cfg(tau, 40)).unwrap();
        let large = design.fit(&yt, &yv, &probe_cfg(tau * grow, 40)).unwrap();
        // each fit is within its gap of the optimum of its own ball
        prop_assert!(large.train_loss <= small.train_loss + large.gap + 1e-9);
    }

    #[test]
    fn dp_matches_brute_force(seed in any::<u64>(), d in 1usize..=4, r in 0usize..=2, half in 0usize..4) {
        let r = r.min(d);
        let s = 2 * half + 1;
        let values = dyadic_table(seed, d, r);
        let table = LeafValues { values: values.clone(), s, eps: 0.0, samples: 0 };
        let got = stitch_optimal_tree(&table, s, r).unwrap();
        prop_assert_eq!(got.value, brute_force_best_value(&values, d, s, r));
        prop_assert!(got.tree.size() <= s && got.tree.depth() <= r);
        prop_assert_eq!(tree_value(&got.tree, &table).unwrap(), got.value);
    }

    #[test]
    fn dp_value_grows_with_budget(seed in any::<u64>(), d in 1usize..=4, half in 0usize..3) {
        let r = 2.min(d);
        let values = dyadic_table(seed, d, r);
        let table = LeafValues { values, s: 0, eps: 0.0, samples: 0 };
        let a = stitch_optimal_tree(&table, 2 * half + 1, r).unwrap().value;
        let b = stitch_optimal_tree(&table, 2 * half + 3, r).unwrap().value;
        prop_assert!(b >= a);
    }

    #[test]
    fn pareto_frontier_matches_pairwise(rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 1..20)) {
        let class = FiniteClass::from_rows("random", 5, rows.clone()).unwrap();
        let pf = pareto_frontier(&class);
        let got: BTreeSet<Vec<bool>> = pf.functions().iter().cloned().collect();
        let want: BTreeSet<Vec<bool>> = pairwise_pareto_frontier(&rows).into_iter().collect();
        prop_assert_eq!(&got, &want);
        let again: BTreeSet<Vec<bool>> = pareto_frontier(&pf).functions().iter().cloned().collect();
        prop_assert_eq!(got, again);
    }

    #[test]
    fn vc_matches_naive(rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..24)) {
        let class = FiniteClass::from_rows("random", 6, rows.clone()).unwrap();
        prop_assert_eq!(vc_dimension(&class).unwrap(), naive_vc_dimension(&rows, 6));
    }

    #[test]
    fn junta_tree_agrees_with_junta(seed in any::<u64>(), k in 0usize..=5) {
        let mut rng = rng_from_seed(seed);
        let d = 12;
        let mut vars: Vec<usize> = (0..d).collect();
        for i in 0..k {
            let j = rng.random_range(i..d);
            vars.swap(i, j);
        }
        vars.truncate(k);
        vars.sort_unstable();
        let j = JuntaSpec::random(d, vars.clone(), &mut rng).unwrap();
        let t = junta_to_tree(&j);
        prop_assert!(equal_on_union(&j, &vars, &t, &vars));
        prop_assert!(t.depth() <= k);
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), depth in 0usize..=4) {
        let mut rng = rng_from_seed(seed);
        let tree = random_tree(8, depth, &mut rng).unwrap();
        prop_assert_eq!(DecisionTree::from_json(&tree.to_json()).unwrap(), tree);
        let j = JuntaSpec::random(8, vec![1, 4, 6], &mut rng).unwrap();
        prop_assert_eq!(JuntaSpec::from_json(&j.to_json()).unwrap(), j);
    }

    #[test]
    fn agnostic_error_matches_direct_sum(theta in prop::collection::vec(1u8..=2, 1..8), flips in any::<u8>(), alpha in 0.0f64..1.0) {
        let inst = AgnosticInstance::new(theta.clone(), alpha).unwrap();
        let theta_prime: Vec<u8> = theta
            .iter()
            .enumerate()
            .map(|(j, &t)| if flips >> (j % 8) & 1 == 1 { 3 - t } else { t })
            .collect();
        let got = agnostic_instance_error(&inst, &theta_prime).unwrap();
        prop_assert!((got - direct_agnostic_error(&inst, &theta_prime)).abs() < 1e-12);
    }

    #[test]
    fn top_k_keeps_smallest_losses(losses in prop::collection::vec(0.0f64..1.0, 1..30), k in 1usize..40) {
        let d = 6;
        let cands: Vec<(Clause, ProbeResult)> = clauses_up_to(d, 2)
            .into_iter()
            .zip(&losses)
            .map(|(c, &l)| (c, result_with_loss(l)))
            .collect();
        let kept = filter_top_k(&cands, k).unwrap();
        prop_assert_eq!(kept.len(), k.min(cands.len()));
        let loss_of = |c: &Clause| cands.iter().find(|(x, _)| x == c).unwrap().1.val_loss;
        let worst_kept = kept.iter().map(loss_of).fold(f64::NEG_INFINITY, f64::max);
        for (c, r) in &cands {
            if !kept.contains(c) {
                prop_assert!(r.val_loss >= worst_kept);
            }
        }
    }

    #[test]
    fn probe_totals_match_binomial_sum(d in 0usize..40, r in 0usize..6) {
        let r = r.min(d);
        let want: u64 = (0..=r as u64).map(|i| (1u64 << i) * binomial(d as u64, i)).sum();
        prop_assert_eq!(total_possible_probes(d, r).unwrap(), BigUint::from(want));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mask_fit_matches_dense_fit(seed in any::<u64>(), m in 1usize..5) {
        // large enough that repeated feature rows get grouped
        let n = 40_000;
        let mut rng = rng_from_seed(seed);
        let train = DMatrix::from_fn(n, m, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let val = DMatrix::from_fn(n, m, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let bt: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let bv: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let design = ProbeDesign::new(&train, &val, false).unwrap();
        let cfg = probe_cfg(1.0, n);
        let yt: Vec<f64> = bt.iter().map(|&b| b as u8 as f64).collect();
        let yv: Vec<f64> = bv.iter().map(|&b| b as u8 as f64).collect();
        let dense = design.fit(&yt, &yv, &cfg).unwrap();
        let masked = design.fit_mask(&SampleMask::from_bools(&bt), &SampleMask::from_bools(&bv), &cfg).unwrap();
        prop_assert!((dense.val_loss - masked.val_loss).abs() < 1e-9);
        prop_assert!((dense.train_loss - masked.train_loss).abs() < 1e-9);
    }
}
