mod jobs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pacdist::error::Error;
use pacdist::experiment::{read_config, Figure4Config, SuiteName};
use pacdist::nnmodel::{Activation, TrainConfig};
use pacdist::probe::ProbeMode;
use pacdist::treedistill::{DistillConfig, SearchConfig};

use jobs::{DistillJuntaJob, DistillTreeJob, EvalJob, GenTreeJob, Job, Outcome, StatsJob, SuiteJob, TrainJob};

const EXIT_SUITE_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Distill trained networks into decision trees and juntas.
///
/// Every command writes its resolved settings to `<out>/config.json`;
/// passing that file back with `--config` replays the run exactly.
#[derive(Parser)]
#[command(name = "pacdist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    /// Replay a saved config.json; other job flags are ignored.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Plant a random tree (or junta) and optionally sample a labeled dataset.
    GenTree {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Plant a junta on this many variables instead of a tree.
        #[arg(long)]
        junta_k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50_000)]
        samples: usize,
    },
    /// Train a residual MLP on a dataset CSV.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long, value_parser = parse_activation)]
        activation: Option<Activation>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Distill a model (or a tree, through its exact clause indicators) into a tree.
    DistillTree {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: Option<PathBuf>,
        /// Maximum output depth r.
        #[arg(long)]
        depth: Option<usize>,
        /// Maximum output size s (odd).
        #[arg(long)]
        size: Option<usize>,
        /// Search depth R.
        #[arg(long)]
        search_depth: Option<usize>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<ProbeMode>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        leaf_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recover a junta from query access to a model, tree or junta.
    DistillJunta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Agreement between two function files under the uniform distribution.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        exact_max_d: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-class statistics and sample-complexity simulations.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        action: Option<StatsAction>,
    },
    /// Networks-to-trees sweep; writes figure4.csv.
    Figure4 {
        #[command(flatten)]
        common: Common,
        /// Use the d = 100 profile instead of the d = 30 desk profile.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run an invariant suite: dp-oracle, probe-soundness, junta, packing, statlab.
    Suite {
        #[command(flatten)]
        common: Common,
        name: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum StatsAction {
    /// VC dimension of a class CSV.
    Vc { class: PathBuf },
    /// Pareto frontier of a class CSV; writes pf.csv.
    Pf { class: PathBuf },
    /// max over f in SOURCE of VCdim(PF(f xor TARGET)).
    VcdimPf { source: PathBuf, target: PathBuf },
    /// Max-sample threshold distiller under the uniform distribution on 1..=support.
    Threshold {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 100)]
        support: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Error of g_θ' against zero for every agreement count on a random instance.
    Agnostic {
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_activation(s: &str) -> Result<Activation, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown activation {s:?}"))
}

fn parse_mode(s: &str) -> Result<ProbeMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown mode {s:?}"))
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Error> {
    value.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

/// Loads a saved job and checks it belongs to `command`.
fn replay(path: &Path, command: &str) -> Result<Job, Error> {
    let job: Job = read_config(path)?;
    if job.name() != command {
        return Err(Error::InvalidArgument(format!(
            "{} holds a {} config, not {command}",
            path.display(),
            job.name()
        )));
    }
    Ok(job)
}

fn resolve(command: Command) -> Result<(Job, PathBuf), Error> {
    let (common, name) = match &command {
        Command::GenTree { common, .. } => (common, "gen-tree"),
        Command::Train { common, .. } => (common, "train"),
        Command::DistillTree { common, .. } => (common, "distill-tree"),
        Command::DistillJunta { common, .. } => (common, "distill-junta"),
        Command::Eval { common, .. } => (common, "eval"),
        Command::Stats { common, .. } => (common, "stats"),
        Command::Figure4 { common, .. } => (common, "figure4"),
        Command::Suite { common, .. } => (common, "suite"),
    };
    let out = common.out.clone();
    if let Some(path) = &common.config {
        return Ok((replay(path, name)?, out));
    }
    let job = match command {
        Command::GenTree {
            d,
            depth,
            junta_k,
            seed,
            samples,
            ..
        } => Job::GenTree(GenTreeJob {
            d,
            depth,
            junta_k,
            seed,
            n_samples: samples,
        }),
        Command::Train {
            data,
            layers,
            width,
            activation,
            epochs,
            batch_size,
            lr,
            seed,
            ..
        } => {
            let base = TrainConfig::default();
            Job::Train(TrainJob {
                data: required(data, "data")?,
                train: TrainConfig {
                    layers: layers.unwrap_or(base.layers),
                    width: width.unwrap_or(base.width),
                    activation: activation.unwrap_or(base.activation),
                    epochs: epochs.unwrap_or(base.epochs),
                    batch_size: batch_size.unwrap_or(base.batch_size),
                    learning_rate: lr.unwrap_or(base.learning_rate),
                    seed,
                },
            })
        }
        Command::DistillTree {
            source,
            depth,
            size,
            search_depth,
            mode,
            k,
            tau,
            eps,
            delta,
            leaf_samples,
            seed,
            ..
        } => {
            let base = DistillConfig::default();
            let search = SearchConfig::default();
            let r = depth.unwrap_or(base.r);
            let delta = delta.unwrap_or(base.delta);
            let mut distill = DistillConfig {
                    r,
                    s: size.unwrap_or((1 << (r + 1)) - 1),
                    depth_budget: search_depth,
                    eps: eps.unwrap_or(base.eps),
                    delta,
                    leaf_samples,
                    search: SearchConfig {
                        mode: mode.unwrap_or(search.mode),
                        tau: tau.unwrap_or(search.tau),
                        delta,
                        k: k.unwrap_or(search.k),
                        ..search
                    },
            };
            distill.depth_budget = Some(distill.resolved_depth_budget());
            Job::DistillTree(DistillTreeJob {
                source: required(source, "source")?,
                seed,
                distill,
            })
        }
        Command::DistillJunta {
            source,
            k_max,
            delta,
            seed,
            ..
        } => Job::DistillJunta(DistillJuntaJob {
            source: required(source, "source")?,
            k_max,
            delta,
            seed,
        }),
        Command::Eval {
            f,
            g,
            exact_max_d,
            samples,
            seed,
            ..
        } => Job::Eval(EvalJob {
            f: required(f, "f")?,
            g: required(g, "g")?,
            exact_max_d,
            samples,
            seed,
        }),
        Command::Stats { action, .. } => Job::Stats(match action.ok_or_else(|| {
            Error::InvalidArgument("stats needs an action: vc, pf, vcdim-pf, threshold or agnostic".into())
        })? {
            StatsAction::Vc { class } => StatsJob::Vc { class },
            StatsAction::Pf { class } => StatsJob::Pf { class },
            StatsAction::VcdimPf { source, target } => StatsJob::VcdimPf { source, target },
            StatsAction::Threshold {
                eps,
                delta,
                support,
                trials,
                n,
                seed,
            } => StatsJob::Threshold {
                eps,
                delta,
                support,
                trials,
                n,
                seed,
            },
            StatsAction::Agnostic { m, alpha, seed } => StatsJob::Agnostic { m, alpha, seed },
        }),
        Command::Figure4 {
            full_scale,
            d,
            depths,
            seeds,
            ks,
            samples,
            epochs,
            tau,
            ..
        } => {
            let mut cfg = if full_scale {
                Figure4Config::full_scale()
            } else {
                Figure4Config::desk()
            };
            cfg.d = d.unwrap_or(cfg.d);
            cfg.depths = depths.unwrap_or(cfg.depths);
            cfg.seeds = seeds.unwrap_or(cfg.seeds);
            cfg.ks = ks.unwrap_or(cfg.ks);
            cfg.n_samples = samples.unwrap_or(cfg.n_samples);
            cfg.train.epochs = epochs.unwrap_or(cfg.train.epochs);
            cfg.tau = tau.unwrap_or(cfg.tau);
            Job::Figure4(cfg)
        }
        Command::Suite { name, seed, .. } => Job::Suite(SuiteJob {
            suite: name
                .ok_or_else(|| Error::InvalidArgument("a suite name is required".into()))?
                .parse::<SuiteName>()?,
            seed,
        }),
    };
    Ok((job, out))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_SUITE_FAILURE,
    }
}

fn configure_workers() -> Result<(), Error> {
    let Ok(raw) = std::env::var("PACDIST_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidArgument(format!("PACDIST_WORKERS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_workers()
        .and_then(|()| resolve(cli.command))
        .and_then(|(job, out)| jobs::run(&job, &out));
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::SuiteFailed) => ExitCode::from(EXIT_SUITE_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
