//! One serializable job per subcommand. A job is fully resolved before it
//! runs and is written to `config.json` in the output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pacdist::boolcore::{exact_disagreement_uniform, disagreement, random_tree, BooleanFunction, DecisionTree, DistributionSampler};
use pacdist::error::{parse_json, Error, Result};
use pacdist::experiment::{run_figure4, run_suite, write_config, Figure4Config, SuiteName, SuiteReport};
use pacdist::juntadistill::{distill_junta, JuntaSpec};
use pacdist::nnmodel::{gen_dataset, train, LabeledDataset, PlantedIndicators, RepresentationOracle, ResidualMLP, Target, TrainConfig};
use pacdist::rng_from_seed;
use pacdist::statlab::{
    agnostic_instance_error, pareto_frontier, simulate_threshold_distillation, vc_dimension, vcdim_pf, AgnosticInstance,
    FiniteClass, MassFunction, ThresholdSimulation,
};
use pacdist::treedistill::{distill_tree, DistillConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenTreeJob {
    pub d: usize,
    pub depth: usize,
    /// Plant a random junta on this many variables instead of a tree.
    pub junta_k: Option<usize>,
    pub seed: u64,
    /// Labeled samples to draw; 0 writes only the target.
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainJob {
    pub data: PathBuf,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillTreeJob {
    /// Model, tree or junta file. Trees are probed through their exact
    /// intermediate-clause indicators.
    pub source: PathBuf,
    pub seed: u64,
    pub distill: DistillConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillJuntaJob {
    pub source: PathBuf,
    pub k_max: usize,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalJob {
    pub f: PathBuf,
    pub g: PathBuf,
    /// Inputs at or below this dimension are enumerated exhaustively.
    pub exact_max_d: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum StatsJob {
    Vc {
        class: PathBuf,
    },
    Pf {
        class: PathBuf,
    },
    VcdimPf {
        source: PathBuf,
        target: PathBuf,
    },
    Threshold {
        eps: f64,
        delta: f64,
        support: usize,
        trials: usize,
        n: Option<usize>,
        seed: u64,
    },
    Agnostic {
        m: usize,
        alpha: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteJob {
    pub suite: SuiteName,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    GenTree(GenTreeJob),
    Train(TrainJob),
    DistillTree(DistillTreeJob),
    DistillJunta(DistillJuntaJob),
    Eval(EvalJob),
    Stats(StatsJob),
    Figure4(Figure4Config),
    Suite(SuiteJob),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::GenTree(_) => "gen-tree",
            Job::Train(_) => "train",
            Job::DistillTree(_) => "distill-tree",
            Job::DistillJunta(_) => "distill-junta",
            Job::Eval(_) => "eval",
            Job::Stats(_) => "stats",
            Job::Figure4(_) => "figure4",
            Job::Suite(_) => "suite",
        }
    }
}

/// What a job reports back to the shell.
pub enum Outcome {
    Done,
    SuiteFailed,
}

/// A function file: a decision tree, a junta, or a trained model.
pub enum Loaded {
    Tree(DecisionTree),
    Junta(JuntaSpec),
    Model(Arc<ResidualMLP>),
}

impl Loaded {
    pub fn function(&self) -> &dyn BooleanFunction {
        match self {
            Loaded::Tree(t) => t,
            Loaded::Junta(j) => j,
            Loaded::Model(m) => m.as_ref(),
        }
    }
}

pub fn load_function(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    let name = path.display().to_string();
    let value: serde_json::Value = parse_json(&name, &text)?;
    let with_name = |e: Error| match e {
        Error::Parse { offset, message, .. } => Error::Parse {
            source_name: name.clone(),
            offset,
            message,
        },
        other => other,
    };
    if value.get("root").is_some() {
        DecisionTree::from_json(&text).map(Loaded::Tree).map_err(with_name)
    } else if value.get("table").is_some() {
        JuntaSpec::from_json(&text).map(Loaded::Junta).map_err(with_name)
    } else {
        ResidualMLP::from_json(&text).map(|m| Loaded::Model(Arc::new(m))).map_err(with_name)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `config.json` and runs the job, placing outputs in `out`.
pub fn run(job: &Job, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    write_config(&out.join("config.json"), job)?;
    match job {
        Job::GenTree(j) => gen_tree(j, out),
        Job::Train(j) => train_job(j, out),
        Job::DistillTree(j) => distill_tree_job(j, out),
        Job::DistillJunta(j) => distill_junta_job(j, out),
        Job::Eval(j) => eval(j, out),
        Job::Stats(j) => stats(j, out),
        Job::Figure4(cfg) => figure4(cfg, out),
        Job::Suite(j) => suite(j, out),
    }
}

fn gen_tree(job: &GenTreeJob, out: &Path) -> Result<Outcome> {
    let mut rng = rng_from_seed(job.seed);
    let target = match job.junta_k {
        Some(k) => {
            if k > job.d {
                return Err(Error::InvalidArgument(format!("junta size {k} exceeds d = {}", job.d)));
            }
            let mut vars: Vec<usize> = rand::seq::index::sample(&mut rng, job.d, k).into_vec();
            vars.sort_unstable();
            let j = JuntaSpec::random(job.d, vars, &mut rng)?;
            write_text(&out.join("target.json"), &j.to_json())?;
            Target::Junta(j)
        }
        None => {
            let t = random_tree(job.d, job.depth, &mut rng)?;
            write_text(&out.join("target.json"), &t.to_json())?;
            Target::Tree(t)
        }
    };
    if job.n_samples > 0 {
        let data = gen_dataset(&target, job.n_samples, &DistributionSampler::uniform(job.d), job.seed.wrapping_add(1))?;
        data.write_csv(&out.join("dataset.csv"))?;
    }
    Ok(Outcome::Done)
}

fn train_job(job: &TrainJob, out: &Path) -> Result<Outcome> {
    let data = LabeledDataset::read_csv(&job.data)?;
    let (model, report) = train(&data, &job.train)?;
    write_text(&out.join("model.json"), &model.to_json())?;
    write_json(&out.join("train_report.json"), &report)?;
    eprintln!("train accuracy {:.4}, final loss {:.4}", report.train_accuracy, report.final_loss);
    Ok(Outcome::Done)
}

fn distill_tree_job(job: &DistillTreeJob, out: &Path) -> Result<Outcome> {
    let source = load_function(&job.source)?;
    let phi = match &source {
        Loaded::Model(m) => RepresentationOracle::estimated(m.clone(), job.seed),
        Loaded::Tree(t) => {
            let planted = PlantedIndicators::new(t.dim(), t.intermediate_computations().into_iter().collect(), 1.0, 0)?;
            let bound = planted.norm_upper_bound();
            RepresentationOracle::with_bound(Arc::new(planted), bound)?
        }
        Loaded::Junta(_) => {
            return Err(Error::InvalidArgument(
                "distill-tree needs a model or tree source; use distill-junta for juntas".into(),
            ))
        }
    };
    let f = source.function();
    let dist = DistributionSampler::uniform(f.dim());
    let mut rng = rng_from_seed(job.seed);
    let (tree, report) = distill_tree(f, &phi, &dist, &job.distill, &mut rng)?;
    write_text(&out.join("tree.json"), &tree.to_json())?;
    write_json(&out.join("report.json"), &report)?;
    eprintln!(
        "{} probes, {} clauses, tree size {} depth {}, value {:.4} ({:.1}s)",
        report.probes, report.clauses, report.tree_size, report.tree_depth, report.value, report.wall_time_secs
    );
    Ok(Outcome::Done)
}

fn distill_junta_job(job: &DistillJuntaJob, out: &Path) -> Result<Outcome> {
    let source = load_function(&job.source)?;
    let mut rng = rng_from_seed(job.seed);
    let report = distill_junta(source.function(), job.k_max, job.delta, &mut rng)?;
    write_text(&out.join("junta.json"), &report.junta.to_json())?;
    write_json(&out.join("report.json"), &report)?;
    eprintln!(
        "relevant variables {:?}; {} learning queries (budget {})",
        report.junta.vars(),
        report.learning_queries,
        report.budget
    );
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct EvalReport {
    d: usize,
    method: &'static str,
    samples: usize,
    disagreement: f64,
    agreement: f64,
}

fn eval(job: &EvalJob, out: &Path) -> Result<Outcome> {
    let f = load_function(&job.f)?;
    let g = load_function(&job.g)?;
    let d = f.function().dim();
    let (method, samples, err) = if d <= job.exact_max_d {
        ("exact", 1usize << d, exact_disagreement_uniform(f.function(), g.function(), d)?)
    } else {
        let mut rng = rng_from_seed(job.seed);
        let e = disagreement(f.function(), g.function(), &DistributionSampler::uniform(d), job.samples, &mut rng)?;
        ("sampled", job.samples, e)
    };
    let report = EvalReport {
        d,
        method,
        samples,
        disagreement: err,
        agreement: 1.0 - err,
    };
    write_json(&out.join("eval.json"), &report)?;
    println!("agreement {:.6} ({method}, {samples} inputs)", report.agreement);
    Ok(Outcome::Done)
}

fn stats(job: &StatsJob, out: &Path) -> Result<Outcome> {
    let result = match job {
        StatsJob::Vc { class } => {
            let c = FiniteClass::read_csv(class)?;
            serde_json::json!({ "vc_dimension": vc_dimension(&c)?, "functions": c.len() })
        }
        StatsJob::Pf { class } => {
            let c = FiniteClass::read_csv(class)?;
            let pf = pareto_frontier(&c);
            pf.write_csv(&out.join("pf.csv"))?;
            serde_json::json!({ "functions": c.len(), "frontier": pf.len() })
        }
        StatsJob::VcdimPf { source, target } => {
            let f = FiniteClass::read_csv(source)?;
            let g = FiniteClass::read_csv(target)?;
            serde_json::json!({ "vcdim_pf": vcdim_pf(&f, &g)? })
        }
        StatsJob::Threshold {
            eps,
            delta,
            support,
            trials,
            n,
            seed,
        } => {
            let sim = simulate_threshold_distillation(*eps, *delta, &MassFunction::uniform(*support)?, *trials, *n, *seed)?;
            let mut w = csv::Writer::from_path(out.join("threshold.csv")).map_err(Error::from)?;
            w.write_record(ThresholdSimulation::CSV_HEADER).map_err(Error::from)?;
            w.write_record(sim.csv_record()).map_err(Error::from)?;
            w.flush()?;
            serde_json::to_value(&sim).expect("serializable")
        }
        StatsJob::Agnostic { m, alpha, seed } => {
            let mut rng = rng_from_seed(*seed);
            let inst = AgnosticInstance::random(*m, *alpha, &mut rng)?;
            let errors: Vec<f64> = (0..=*m)
                .map(|agree| {
                    let theta: Vec<u8> =
                        inst.theta.iter().enumerate().map(|(i, &t)| if i < agree { t } else { 3 - t }).collect();
                    agnostic_instance_error(&inst, &theta)
                })
                .collect::<Result<_>>()?;
            serde_json::json!({ "theta": inst.theta, "alpha": inst.alpha, "error_by_agreement": errors })
        }
    };
    write_json(&out.join("stats.json"), &result)?;
    println!("{result}");
    Ok(Outcome::Done)
}

fn figure4(cfg: &Figure4Config, out: &Path) -> Result<Outcome> {
    let report = run_figure4(cfg)?;
    report.write_csv(&out.join("figure4.csv"))?;
    write_json(&out.join("failures.json"), &report.failures)?;
    for r in &report.rows {
        let fmt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        println!(
            "depth {} k {} seed {}: accuracy {} probes {} fraction {}",
            r.depth,
            r.k,
            r.seed,
            fmt(r.accuracy.map(|a| format!("{a:.4}"))),
            fmt(r.num_probes.map(|n| n.to_string())),
            fmt(r.fraction_possible.map(|f| format!("{f:.6}")))
        );
    }
    for f in &report.failures {
        eprintln!("failed depth {} seed {}: {}", f.depth, f.seed, f.message);
    }
    Ok(Outcome::Done)
}

fn suite(job: &SuiteJob, out: &Path) -> Result<Outcome> {
    let report: SuiteReport = run_suite(job.suite, job.seed)?;
    write_json(&out.join("suite.json"), &report)?;
    for c in &report.checks {
        println!("{c}");
    }
    Ok(if report.passed() { Outcome::Done } else { Outcome::SuiteFailed })
}
