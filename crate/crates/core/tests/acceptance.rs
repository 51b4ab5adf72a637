//! Release acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails outside the known-conflict list below.

use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use pacdist::boolcore::{
    disagreement, exact_disagreement_uniform, random_tree, total_possible_probes, Clause, DistributionSampler,
};
use pacdist::experiment::{
    fraction_possible, read_config, run_figure4, run_suite, write_config, Figure4Config, SuiteName, SuiteReport,
};
use pacdist::nnmodel::{PlantedIndicators, RepresentationOracle, TrainConfig};
use pacdist::probe::ProbeMode;
use pacdist::rng_from_seed;
use pacdist::treedistill::{distill_tree, DistillConfig, SearchConfig};

struct Verdict {
    passed: bool,
    detail: String,
    /// Subchecks that fail for a documented reason; the run still succeeds
    /// if exactly these fail.
    known_conflicts: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
            known_conflicts: Vec::new(),
        }
    }
}

fn planted_run(d: usize, trees: u64, exact: bool) -> (usize, f64) {
    let mut recovered = 0;
    let mut worst: f64 = 0.0;
    for i in 0..trees {
        let mut rng = rng_from_seed(1000 * d as u64 + i);
        let tree = random_tree(d, 3, &mut rng).unwrap();
        let planted: Vec<Clause> = tree.intermediate_computations().into_iter().collect();
        // at most depth + 1 = 4 indicators are active at once
        let phi = RepresentationOracle::with_bound(Arc::new(PlantedIndicators::new(d, planted, 1.0, 0).unwrap()), 2.0)
            .unwrap();
        let cfg = DistillConfig {
            r: 3,
            s: 15,
            depth_budget: Some(3),
            eps: 0.1,
            delta: 0.1,
            leaf_samples: None,
            search: SearchConfig {
                mode: ProbeMode::Theoretical,
                tau: 1.0,
                delta: 0.1,
                ..SearchConfig::default()
            },
        };
        let dist = DistributionSampler::uniform(d);
        let (out, _) = distill_tree(&tree, &phi, &dist, &cfg, &mut rng).unwrap();
        let err = if exact {
            exact_disagreement_uniform(&out, &tree, d).unwrap()
        } else {
            disagreement(&out, &tree, &dist, 100_000, &mut rng_from_seed(7 + i)).unwrap()
        };
        worst = worst.max(err);
        if (exact && err == 0.0) || (!exact && err <= 1e-3) {
            recovered += 1;
        }
    }
    (recovered, worst)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let (small, small_worst) = planted_run(12, 20, true);
    let (large, large_worst) = planted_run(20, 20, false);
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        small == 20 && large == 20 && secs <= 120.0,
        format!(
            "d=12 exact {small}/20 (worst {small_worst}), d=20 sampled {large}/20 (worst {large_worst:.1e}), {secs:.0}s"
        ),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let cfg = Figure4Config::desk();
    let report = run_figure4(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let dir = tempfile::tempdir().unwrap();
    report.write_csv(&dir.path().join("figure4.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("figure4.csv")).unwrap();
    let schema_ok = text.starts_with("depth,k,seed,accuracy,num_probes,fraction_possible\n")
        && text.lines().skip(1).all(|l| l.split(',').count() == 6);
    let complete = report.failures.is_empty() && report.rows.iter().all(|r| r.accuracy.is_some());
    let acc2 = report.mean_accuracy(2).unwrap_or(0.0);
    let acc3 = report.mean_accuracy(3).unwrap_or(0.0);
    let frac3 = report
        .rows
        .iter()
        .filter(|r| r.depth == 3)
        .filter_map(|r| r.fraction_possible)
        .fold(0.0, f64::max);
    let consistent = report.rows.iter().all(|r| match (r.num_probes, r.fraction_possible) {
        (Some(n), Some(f)) => f == fraction_possible(n, cfg.d, r.depth).unwrap(),
        _ => false,
    });
    let totals_exact = total_possible_probes(100, 2).unwrap() == BigUint::from(20001u32)
        && total_possible_probes(100, 3).unwrap() == BigUint::from(1_313_601u32)
        && fraction_possible(20001, 100, 2).unwrap() == 1.0;
    let literal = format!("{:.6}", fraction_possible(48894, 100, 3).unwrap());
    // the reported count is a mean over seeds shown as an integer
    let total3 = 1_313_601.0;
    let rounded_mean_reproduces = [48893.6, 48893.8, 48894.0, 48894.2, 48894.4]
        .iter()
        .any(|n| format!("{:.6}", n / total3) == "0.037222");
    let train_acc: Vec<String> = report.train_accuracy.iter().map(|(h, s, a)| format!("{h}/{s}:{a:.3}")).collect();
    let checks = [
        ("complete", complete, format!("{} rows, {} failures", report.rows.len(), report.failures.len())),
        ("schema", schema_ok, "figure4.csv header and field counts".to_string()),
        ("accuracy_depth2", acc2 >= 0.95, format!("mean {acc2:.4}")),
        ("accuracy_depth3", acc3 >= 0.90, format!("mean {acc3:.4}")),
        ("fraction_depth3", frac3 <= 0.25, format!("max {frac3:.4}")),
        ("fraction_consistent", consistent, "fraction_possible column matches num_probes".to_string()),
        ("totals_exact", totals_exact, "20001 and 1313601".to_string()),
        ("fraction_literal", literal == "0.037222", format!("48894/1313601 = {literal}")),
        (
            "fraction_rounded_mean",
            rounded_mean_reproduces,
            "a five-seed mean rounding to 48894 gives 0.037222".to_string(),
        ),
        ("runtime", secs <= 1800.0, format!("{secs:.0}s")),
    ];
    let passed = checks.iter().all(|c| c.1);
    let known: Vec<String> = checks
        .iter()
        .filter(|c| !c.1 && c.0 == "fraction_literal")
        .map(|c| c.0.to_string())
        .collect();
    let mut parts: Vec<String> = checks
        .iter()
        .map(|(name, ok, detail)| format!("{}{name}: {detail}", if *ok { "" } else { "FAILED " }))
        .collect();
    parts.push(format!("train accuracy [{}]", train_acc.join(" ")));
    Verdict {
        passed,
        detail: parts.join(" | "),
        known_conflicts: known,
    }
}

fn suite_verdict(report: &SuiteReport, names: &[&str], conflicts: &[&str]) -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    let mut known = Vec::new();
    for &name in names {
        let Some(c) = report.check(name) else {
            passed = false;
            parts.push(format!("{name} missing"));
            continue;
        };
        passed &= c.passed;
        if !c.passed && conflicts.contains(&name) {
            known.push(name.to_string());
        }
        parts.push(format!("{}{}: {}", if c.passed { "" } else { "FAILED " }, c.name, c.detail));
    }
    Verdict {
        passed,
        detail: parts.join(" | "),
        known_conflicts: known,
    }
}

fn criterion_3() -> Verdict {
    let report = run_suite(SuiteName::DpOracle, 0).unwrap();
    suite_verdict(&report, &["dp_matches_brute_force", "dp_output_admissible"], &[])
}

fn criterion_4() -> Verdict {
    let report = run_suite(SuiteName::ProbeSoundness, 0).unwrap();
    suite_verdict(&report, &["realizable_accepted", "infeasible_rejected"], &[])
}

fn criterion_5() -> Verdict {
    let report = run_suite(SuiteName::Junta, 0).unwrap();
    suite_verdict(
        &report,
        &["recovered_exactly", "queries_within_budget", "zero_samples", "junta_to_tree_exhaustive"],
        &[],
    )
}

fn criterion_6() -> Verdict {
    let report = run_suite(SuiteName::Packing, 0).unwrap();
    suite_verdict(&report, &["packing_bound_holds", "planted_count_reached"], &[])
}

fn criterion_7() -> Verdict {
    let report = run_suite(SuiteName::Statlab, 0).unwrap();
    suite_verdict(
        &report,
        &[
            "vc_all_functions",
            "triple_indicator_frontier_is_whole_class",
            "vcdim_pf_self_is_zero",
            "threshold_failure_rate",
            "agnostic_error_formula",
        ],
        // comparable pairs g_{S,{j},∅}, g_{S',{j},∅} with S ⊊ S' exist under
        // the stated Pareto order, so the frontier is strictly smaller
        &["triple_indicator_frontier_is_whole_class"],
    )
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let small = Figure4Config {
        d: 8,
        depths: vec![2],
        seeds: vec![0, 1],
        ks: vec![10, 20],
        n_samples: 3000,
        test_samples: 1000,
        train: TrainConfig {
            layers: 2,
            width: 16,
            epochs: 3,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        leaf_samples: Some(3000),
        ..Figure4Config::desk()
    };
    let cfg_path = dir.path().join("config.json");
    write_config(&cfg_path, &small).unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let cfg: Figure4Config = read_config(&cfg_path).unwrap();
        let out = dir.path().join(format!("run{run}.csv"));
        run_figure4(&cfg).unwrap().write_csv(&out).unwrap();
        outputs.push(std::fs::read(&out).unwrap());
    }
    let figure_same = outputs[0] == outputs[1];
    let mut suites_same = true;
    for name in [SuiteName::DpOracle, SuiteName::Junta, SuiteName::Packing, SuiteName::Statlab] {
        let a = serde_json::to_vec(&run_suite(name, 3).unwrap()).unwrap();
        let b = serde_json::to_vec(&run_suite(name, 3).unwrap()).unwrap();
        suites_same &= a == b;
    }
    let reloaded: Figure4Config = read_config(&cfg_path).unwrap();
    Verdict::new(
        figure_same && suites_same && reloaded == small,
        format!("figure4 rerun identical: {figure_same}; suite reports identical: {suites_same}"),
    )
}

fn main() {
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let criteria: [(usize, &str, fn() -> Verdict); 8] = [
        (1, "planted-LRH exact recovery", criterion_1),
        (2, "figure-4 desk reproduction", criterion_2),
        (3, "DP oracle equivalence", criterion_3),
        (4, "probe soundness", criterion_4),
        (5, "junta recovery", criterion_5),
        (6, "packing audit", criterion_6),
        (7, "statlab", criterion_7),
        (8, "determinism", criterion_8),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let v = run();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({title}): {}", v.detail);
        if !v.passed {
            let failing_subchecks = v.detail.matches("FAILED ").count();
            let explained = !v.known_conflicts.is_empty() && v.known_conflicts.len() == failing_subchecks;
            if explained {
                println!("     known conflict, see decisions ledger: {}", v.known_conflicts.join(", "));
            } else {
                unexpected.push(id);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
