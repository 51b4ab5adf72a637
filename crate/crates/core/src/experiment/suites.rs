use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::oracles::{
    all_variables_relevant, brute_force_best_value, direct_agnostic_error, equal_on_union, naive_vc_dimension,
    pairwise_pareto_frontier,
};
use crate::boolcore::{enumerate_inputs, exact_disagreement_uniform, random_tree, BitInput, Clause, DistributionSampler};
use crate::error::{Error, Result};
use crate::juntadistill::{distill_junta, junta_to_tree, query_budget, JuntaSpec};
use crate::nnmodel::{RepresentationOracle, TableFeatures};
use crate::probe::{decide, fit_constrained, ProbeConfig};
use crate::rng_from_seed;
use crate::statlab::{
    agnostic_instance_error, class_errors, erm_sample_count, erm_surplus, pareto_frontier, simulate_threshold_distillation,
    triple_indicator_class, vc_dimension, vcdim_pf, xor_class, AgnosticInstance, FiniteClass, MassFunction,
    ThresholdFamily, ERM_CONSTANT,
};
use crate::treedistill::{
    disjoint_clause_features, exact_leaf_values_uniform, packing_audit, stitch_optimal_tree, tree_value, LeafValues,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    DpOracle,
    ProbeSoundness,
    Junta,
    Packing,
    Statlab,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::DpOracle,
        SuiteName::ProbeSoundness,
        SuiteName::Junta,
        SuiteName::Packing,
        SuiteName::Statlab,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::DpOracle => "dp-oracle",
            SuiteName::ProbeSoundness => "probe-soundness",
            SuiteName::Junta => "junta",
            SuiteName::Packing => "packing",
            SuiteName::Statlab => "statlab",
        }
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_suite(name: SuiteName, seed: u64) -> Result<SuiteReport> {
    let seed = derive_seed(seed, name.id(), 0);
    let checks = match name {
        SuiteName::DpOracle => dp_oracle(seed)?,
        SuiteName::ProbeSoundness => probe_soundness(seed)?,
        SuiteName::Junta => junta(seed)?,
        SuiteName::Packing => packing(seed)?,
        SuiteName::Statlab => statlab(seed)?,
    };
    Ok(SuiteReport {
        suite: name,
        seed,
        checks,
    })
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

/// Random clause table with dyadic values, so sums are exact in any order.
fn random_dp_instance<R: Rng + ?Sized>(rng: &mut R) -> (usize, usize, usize, BTreeMap<Clause, f64>) {
    let d = rng.random_range(1..=4);
    let r = rng.random_range(0..=2usize.min(d));
    let s = 2 * rng.random_range(0..4) + 1;
    let keep = rng.random_range(0.5..1.0);
    let mut values = BTreeMap::new();
    for c in clauses_up_to(d, r) {
        if c.is_empty() || rng.random_bool(keep) {
            values.insert(c, rng.random_range(-64i32..=64) as f64 / 64.0);
        }
    }
    (d, s, r, values)
}

fn dp_oracle(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let mut mismatches = 0;
    let mut shape_errors = 0;
    let mut monotone_errors = 0;
    let mut first = String::new();
    for i in 0..1000 {
        let mut rng = rng_from_seed(derive_seed(seed, 1, i));
        let (d, s, r, values) = random_dp_instance(&mut rng);
        let table = LeafValues {
            values: values.clone(),
            s,
            eps: 0.0,
            samples: 0,
        };
        let got = stitch_optimal_tree(&table, s, r)?;
        let want = brute_force_best_value(&values, d, s, r);
        if got.value != want {
            mismatches += 1;
            if first.is_empty() {
                first = format!("; first at instance {i}: dp {} vs brute force {want}", got.value);
            }
        }
        if got.tree.size() > s || got.tree.depth() > r || tree_value(&got.tree, &table)? != got.value {
            shape_errors += 1;
        }
        if s + 2 <= 7 && stitch_optimal_tree(&table, s + 2, r)?.value < got.value {
            monotone_errors += 1;
        }
        if r < 2 && stitch_optimal_tree(&table, s, r + 1)?.value < got.value {
            monotone_errors += 1;
        }
    }
    checks.push(Check::new(
        "dp_matches_brute_force",
        mismatches == 0,
        format!("{mismatches}/1000 instances differ{first}"),
    ));
    checks.push(Check::new(
        "dp_output_admissible",
        shape_errors == 0,
        format!("{shape_errors} trees over budget or with inconsistent value"),
    ));
    checks.push(Check::new(
        "dp_monotone_in_budget",
        monotone_errors == 0,
        format!("{monotone_errors} decreases when s or r grows"),
    ));

    let mut wrong = 0;
    for i in 0..50 {
        let mut rng = rng_from_seed(derive_seed(seed, 2, i));
        let planted = random_tree(4, 2, &mut rng)?;
        let values = exact_leaf_values_uniform(&clauses_up_to(4, 2), &planted, 7)?;
        let got = stitch_optimal_tree(&values, 7, 2)?;
        if exact_disagreement_uniform(&got.tree, &planted, 4)? != 0.0 {
            wrong += 1;
        }
    }
    checks.push(Check::new(
        "planted_depth2_recovered",
        wrong == 0,
        format!("{wrong}/50 planted trees not recovered exactly"),
    ));

    let mut worst: f64 = 0.0;
    let clauses = clauses_up_to(6, 3);
    for i in 0..50 {
        let mut rng = rng_from_seed(derive_seed(seed, 3, i));
        let f = random_tree(6, 3, &mut rng)?;
        let values = exact_leaf_values_uniform(&clauses, &f, 15)?;
        for depth in 0..=3 {
            let t = random_tree(6, depth, &mut rng)?;
            let agree = 1.0 - exact_disagreement_uniform(&t, &f, 6)?;
            worst = worst.max((tree_value(&t, &values)? - (2.0 * agree - 1.0)).abs());
        }
    }
    checks.push(Check::new(
        "val_identity",
        worst <= 1e-12,
        format!("max |val - (2P[T=f]-1)| = {worst:.3e}"),
    ));
    Ok(checks)
}

/// Gaussian features of scale `sigma` plus one column `c·(2x_j - 1)`, over
/// all of `{0,1}^d`.
fn soundness_table<R: Rng + ?Sized>(d: usize, m: usize, sigma: f64, c: f64, rng: &mut R) -> (DMatrix<f64>, usize) {
    let j = rng.random_range(0..d);
    let mut table = DMatrix::from_fn(1 << d, m, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    });
    for row in 0..1 << d {
        table[(row, m - 1)] = c * if row >> j & 1 == 1 { 1.0 } else { -1.0 };
    }
    (table, j)
}

fn table_target(table: DVector<f64>) -> impl Fn(&BitInput) -> f64 {
    move |x: &BitInput| {
        let idx: usize = x.bits().iter().enumerate().map(|(i, &b)| (b as usize) << i).sum();
        table[idx]
    }
}

const SOUND_D: usize = 10;
const SOUND_M: usize = 64;
const SOUND_TAU: f64 = 5.0;
const SOUND_EPS: f64 = 0.05;
const SOUND_DELTA: f64 = 0.1;
const SOUND_SIGMA: f64 = 0.02;
const SOUND_C: f64 = 0.5;

fn probe_soundness(seed: u64) -> Result<Vec<Check>> {
    let dist = DistributionSampler::uniform(SOUND_D);
    let mut accepted = 0;
    let mut max_norm: f64 = 0.0;
    let mut energies = Vec::new();
    for i in 0..100 {
        let mut rng = rng_from_seed(derive_seed(seed, 1, i));
        let (table, _) = soundness_table(SOUND_D, SOUND_M, SOUND_SIGMA, SOUND_C, &mut rng);
        let mut w = DVector::from_fn(SOUND_M, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        w[SOUND_M - 1] = 0.0;
        w *= 1.5 / w.norm();
        w[SOUND_M - 1] = 0.8 / SOUND_C;
        let mut g = &table * &w;
        let peak = g.amax();
        if peak > 1.0 {
            g /= peak;
            w /= peak;
        }
        max_norm = max_norm.max(w.norm());
        energies.push(g.norm_squared() / g.len() as f64);
        let bound = table.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        let phi = RepresentationOracle::with_bound(Arc::new(TableFeatures::new(SOUND_D, table)?), bound)?;
        let cfg = ProbeConfig::theoretical(SOUND_TAU, SOUND_EPS, SOUND_DELTA, bound);
        let res = fit_constrained(&table_target(g), &phi, &dist, &cfg, &mut rng)?;
        if decide(&res, SOUND_EPS) {
            accepted += 1;
        }
    }
    let min_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut checks = vec![Check::new(
        "realizable_accepted",
        accepted >= 95 && max_norm <= SOUND_TAU / 2.0,
        format!("{accepted}/100 accepted; max ‖w*‖ = {max_norm:.3}; min E[g²] = {min_energy:.3}"),
    )];

    let mut rejected = 0;
    let mut min_floor = f64::INFINITY;
    for i in 0..100 {
        let mut rng = rng_from_seed(derive_seed(seed, 2, i));
        let (table, _) = soundness_table(SOUND_D, SOUND_M, SOUND_SIGMA, SOUND_C, &mut rng);
        let signs = DVector::from_fn(1 << SOUND_D, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        // residual of the sign vector against the column span of φ
        let qr = table.clone().qr();
        let q = qr.q();
        let mut g = &signs - &q * (q.transpose() * &signs);
        g /= g.amax();
        let floor = g.norm_squared() / g.len() as f64;
        min_floor = min_floor.min(floor);
        let bound = table.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        let phi = RepresentationOracle::with_bound(Arc::new(TableFeatures::new(SOUND_D, table)?), bound)?;
        let cfg = ProbeConfig::theoretical(SOUND_TAU, SOUND_EPS, SOUND_DELTA, bound);
        let res = fit_constrained(&table_target(g), &phi, &dist, &cfg, &mut rng)?;
        if !decide(&res, SOUND_EPS) {
            rejected += 1;
        }
    }
    checks.push(Check::new(
        "infeasible_rejected",
        rejected >= 95 && min_floor >= 2.0 * SOUND_EPS,
        format!("{rejected}/100 rejected; smallest best-possible loss {min_floor:.3}"),
    ));
    Ok(checks)
}

fn random_relevant_junta<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<JuntaSpec> {
    let vars: Vec<usize> = rand::seq::index::sample(rng, d, k).into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    loop {
        let j = JuntaSpec::random(d, vars.clone(), rng)?;
        if all_variables_relevant(&j) {
            return Ok(j);
        }
    }
}

const JUNTA_K_MAX: usize = 4;
const JUNTA_DELTA: f64 = 0.01;

fn junta(seed: u64) -> Result<Vec<Check>> {
    let d = 100;
    let budget = query_budget(JUNTA_K_MAX, JUNTA_DELTA, d);
    let mut exact = 0;
    let mut within = 0;
    let mut max_queries = 0;
    let mut samples = 0;
    for i in 0..100 {
        let mut rng = rng_from_seed(derive_seed(seed, 1, i));
        let k = rng.random_range(0..=JUNTA_K_MAX);
        let planted = random_relevant_junta(d, k, &mut rng)?;
        match distill_junta(&planted, JUNTA_K_MAX, JUNTA_DELTA, &mut rng) {
            Ok(rep) => {
                if rep.junta.vars() == planted.vars()
                    && equal_on_union(&rep.junta, rep.junta.vars(), &planted, planted.vars())
                {
                    exact += 1;
                }
                if rep.learning_queries <= budget {
                    within += 1;
                }
                max_queries = max_queries.max(rep.learning_queries);
                samples += rep.samples;
            }
            Err(Error::PromiseViolation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut checks = vec![
        Check::new("recovered_exactly", exact == 100, format!("{exact}/100 juntas at d = {d}")),
        Check::new(
            "queries_within_budget",
            within == 100,
            format!("max {max_queries} queries, budget {budget}"),
        ),
        Check::new("zero_samples", samples == 0, format!("{samples} distribution samples")),
    ];

    let d_small = 12;
    let mut composed = 0;
    for i in 0..100 {
        let mut rng = rng_from_seed(derive_seed(seed, 2, i));
        let k = rng.random_range(0..=JUNTA_K_MAX);
        let planted = random_relevant_junta(d_small, k, &mut rng)?;
        let rep = distill_junta(&planted, JUNTA_K_MAX, JUNTA_DELTA, &mut rng)?;
        let tree = junta_to_tree(&rep.junta);
        if exact_disagreement_uniform(&tree, &rep.junta, d_small)? == 0.0
            && exact_disagreement_uniform(&tree, &planted, d_small)? == 0.0
        {
            composed += 1;
        }
    }
    checks.push(Check::new(
        "junta_to_tree_exhaustive",
        composed == 100,
        format!("{composed}/100 compositions equal on all 2^{d_small} inputs"),
    ));
    Ok(checks)
}

fn packing(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut audits = Vec::new();

    let mut planted_ok = 0;
    let mut planted_total = 0;
    for (d, k, t) in [(6, 1, 6), (8, 2, 4), (9, 3, 3), (12, 3, 4), (12, 2, 6)] {
        let features = disjoint_clause_features(d, k, t, 3)?;
        let audit = packing_audit(d, &features, k, 1.0)?;
        planted_total += 1;
        if audit.representable >= t && audit.bound >= t as f64 {
            planted_ok += 1;
        }
        audits.push(audit);
    }
    checks.push(Check::new(
        "planted_count_reached",
        planted_ok == planted_total,
        format!("{planted_ok}/{planted_total} planted instances reach their count"),
    ));

    let xs = enumerate_inputs(10)?;
    for (i, (m, k, tau)) in [(8, 2, 1.0), (8, 1, 0.5), (16, 2, 2.0), (8, 3, 1.0), (32, 1, 4.0)].into_iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, 1, i as u64));
        let features = DMatrix::from_fn(xs.len(), m, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        audits.push(packing_audit(10, &features, k, tau)?);
    }

    let zero_tau = packing_audit(8, &disjoint_clause_features(8, 2, 4, 0)?, 2, 0.0)?;
    checks.push(Check::new(
        "zero_norm_counts_nothing",
        zero_tau.representable == 0,
        format!("{} clauses representable at tau = 0", zero_tau.representable),
    ));
    audits.push(zero_tau);

    let violations: Vec<String> = audits
        .iter()
        .filter(|a| !a.holds())
        .map(|a| format!("k={} tau={} count={} bound={:.3}", a.k, a.tau, a.representable, a.bound))
        .collect();
    checks.push(Check::new(
        "packing_bound_holds",
        violations.is_empty(),
        if violations.is_empty() {
            format!("{} audits within bound", audits.len())
        } else {
            violations.join("; ")
        },
    ));
    Ok(checks)
}

fn random_class<R: Rng + ?Sized>(rows: usize, n: usize, rng: &mut R) -> Result<FiniteClass> {
    FiniteClass::from_rows(
        "random",
        n,
        (0..rows).map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()).collect(),
    )
}

fn statlab(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let vc_all: Vec<usize> = (1..=4)
        .map(|m| vc_dimension(&FiniteClass::all_functions(m)?))
        .collect::<Result<_>>()?;
    checks.push(Check::new(
        "vc_all_functions",
        vc_all == [1, 2, 3, 4],
        format!("VC of all functions on 1..4 points: {vc_all:?}"),
    ));

    let mut vc_mismatch = 0;
    for i in 0..200 {
        let mut rng = rng_from_seed(derive_seed(seed, 1, i));
        let n = rng.random_range(1..=7);
        let c = random_class(rng.random_range(1..=40), n, &mut rng)?;
        if vc_dimension(&c)? != naive_vc_dimension(c.functions(), n) {
            vc_mismatch += 1;
        }
    }
    let thresholds = vc_dimension(&ThresholdFamily { n: 8 }.to_class()?)?;
    checks.push(Check::new(
        "vc_matches_naive",
        vc_mismatch == 0 && thresholds == 1,
        format!("{vc_mismatch}/200 random classes differ; thresholds on 8 points have VC {thresholds}"),
    ));

    let mut pf_mismatch = 0;
    let mut not_idempotent = 0;
    for i in 0..1000 {
        let mut rng = rng_from_seed(derive_seed(seed, 2, i));
        let n = rng.random_range(1..=6);
        let c = random_class(rng.random_range(1..=12), n, &mut rng)?;
        let pf = pareto_frontier(&c);
        if pf.functions() != pairwise_pareto_frontier(c.functions()).as_slice() {
            pf_mismatch += 1;
        }
        if pareto_frontier(&pf).functions() != pf.functions() {
            not_idempotent += 1;
        }
    }
    checks.push(Check::new(
        "pareto_matches_pairwise",
        pf_mismatch == 0 && not_idempotent == 0,
        format!("{pf_mismatch}/1000 differ from the pairwise oracle, {not_idempotent} not idempotent"),
    ));

    let mut sizes = Vec::new();
    for n in [2, 3, 4] {
        let g = triple_indicator_class(n)?;
        sizes.push((n, pareto_frontier(&g).len(), g.canonical().len()));
    }
    checks.push(Check::new(
        "triple_indicator_frontier_is_whole_class",
        sizes.iter().all(|&(_, pf, all)| pf == all),
        sizes
            .iter()
            .map(|(n, pf, all)| format!("N={n}: frontier {pf} of {all}"))
            .collect::<Vec<_>>()
            .join(", "),
    ));

    let mut nonzero = 0;
    for i in 0..100 {
        let mut rng = rng_from_seed(derive_seed(seed, 3, i));
        let c = random_class(rng.random_range(1..=10), rng.random_range(1..=8), &mut rng)?;
        if vcdim_pf(&c, &c)? != 0 {
            nonzero += 1;
        }
    }
    checks.push(Check::new(
        "vcdim_pf_self_is_zero",
        nonzero == 0,
        format!("{nonzero}/100 random classes with VCdimPF(F;F) > 0"),
    ));

    let mut agn_m = Vec::new();
    for m in 1..=6 {
        let inst = AgnosticInstance::new(vec![1; m], 0.5)?;
        let g = inst.class()?;
        let zero = FiniteClass::new("zero", g.inputs().to_vec(), vec![vec![false; 2 * m]])?;
        agn_m.push(vcdim_pf(&zero, &g)?);
    }
    checks.push(Check::new(
        "vcdim_pf_agnostic_family",
        agn_m == [1, 2, 3, 4, 5, 6],
        format!("VCdimPF for m = 1..6: {agn_m:?}"),
    ));

    let uniform = MassFunction::uniform(100)?;
    let mut rows = Vec::new();
    let mut sims_ok = true;
    for (j, eps) in [0.1, 0.05].into_iter().enumerate() {
        for (l, delta) in [0.1, 0.05].into_iter().enumerate() {
            let sim = simulate_threshold_distillation(eps, delta, &uniform, 10_000, None, derive_seed(seed, 4, (2 * j + l) as u64))?;
            let ok = sim.failure_rate <= delta + 3.0 * sim.sigma();
            sims_ok &= ok;
            rows.push(format!("eps={eps} delta={delta} n={} rate={:.4}", sim.n, sim.failure_rate));
        }
    }
    checks.push(Check::new("threshold_failure_rate", sims_ok, rows.join("; ")));

    let adversarial = simulate_threshold_distillation(
        0.1,
        0.1,
        &MassFunction::two_point(50, 0.1)?,
        10_000,
        Some(((0.1f64.recip()).ln() / 0.1 * 0.25).floor() as usize),
        derive_seed(seed, 5, 0),
    )?;
    checks.push(Check::new(
        "threshold_undersampled_fails",
        adversarial.failure_rate > 0.1,
        format!("n = {} gives failure rate {:.4}", adversarial.n, adversarial.failure_rate),
    ));

    let mut worst: f64 = 0.0;
    let mut endpoints = true;
    for i in 0..200 {
        let mut rng = rng_from_seed(derive_seed(seed, 6, i));
        let m = rng.random_range(1..=12);
        let inst = AgnosticInstance::random(m, rng.random_range(0.0..=1.0), &mut rng)?;
        let other: Vec<u8> = (0..m).map(|_| rng.random_range(1..=2)).collect();
        worst = worst.max((agnostic_instance_error(&inst, &other)? - direct_agnostic_error(&inst, &other)).abs());
        let same = agnostic_instance_error(&inst, &inst.theta)?;
        let flipped: Vec<u8> = inst.theta.iter().map(|&t| 3 - t).collect();
        let opposite = agnostic_instance_error(&inst, &flipped)?;
        endpoints &= (same - (0.5 - inst.alpha / 2.0)).abs() <= 1e-12 && (opposite - (0.5 + inst.alpha / 2.0)).abs() <= 1e-12;
    }
    checks.push(Check::new(
        "agnostic_error_formula",
        worst <= 1e-12 && endpoints,
        format!("max deviation from direct sum {worst:.3e}"),
    ));

    let mut erm_fail = Vec::new();
    for i in 0..5 {
        let mut rng = rng_from_seed(derive_seed(seed, 7, i));
        let n_x = 6;
        let g = random_class(8, n_x, &mut rng)?;
        let f: Vec<bool> = (0..n_x).map(|_| rng.random_bool(0.5)).collect();
        let raw: Vec<f64> = (0..n_x).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let f_class = FiniteClass::new("f", g.inputs().to_vec(), vec![f.clone()])?;
        let v = vcdim_pf(&f_class, &g)?;
        let n = erm_sample_count(ERM_CONSTANT, 0.1, 0.1, v);
        let summary = erm_surplus(&f, &g, &masses, n, 0.1, 1000, derive_seed(seed, 8, i))?;
        if summary.failure_rate > 0.1 {
            erm_fail.push(format!("instance {i}: rate {:.3} at n = {n}", summary.failure_rate));
        }
    }
    checks.push(Check::new(
        "erm_surplus_within_eps",
        erm_fail.is_empty(),
        if erm_fail.is_empty() {
            "5 instances, 1000 trials each".to_string()
        } else {
            erm_fail.join("; ")
        },
    ));

    let mut rng = rng_from_seed(derive_seed(seed, 9, 0));
    let g = random_class(6, 5, &mut rng)?;
    let uniform5 = vec![0.2; 5];
    let identity_ok = g
        .functions()
        .iter()
        .all(|f| class_errors(f, &FiniteClass::new("f", g.inputs().to_vec(), vec![f.clone()]).unwrap(), &uniform5).unwrap()[0] == 0.0);
    checks.push(Check::new(
        "identity_distiller_zero_error",
        identity_ok,
        "F = G: outputting f itself has error 0",
    ));

    let zero = vec![false; 4];
    let ones = FiniteClass::from_rows("ones", 4, vec![vec![true; 4]])?;
    let impossible = [vec![0.25; 4], vec![1.0, 0.0, 0.0, 0.0], vec![0.5, 0.25, 0.125, 0.125]]
        .iter()
        .all(|m| class_errors(&zero, &ones, m).unwrap()[0] == 1.0);
    let xor_ok = xor_class(&zero, &ones)?.functions() == ones.functions();
    checks.push(Check::new(
        "two_singleton_error_one",
        impossible && xor_ok,
        "distilling zero into {ones} has error 1 under every tested distribution",
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        }
        assert!("nope".parse::<SuiteName>().is_err());
    }

    #[test]
    fn dp_instances_contain_root() {
        let mut rng = rng_from_seed(0);
        for _ in 0..20 {
            let (d, _, _, values) = random_dp_instance(&mut rng);
            assert!(values.contains_key(&Clause::empty(d)));
        }
    }
}
