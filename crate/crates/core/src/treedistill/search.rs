use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolcore::{Clause, DistributionSampler, SampleBits};
use crate::error::{Error, Result};
use crate::nnmodel::RepresentationOracle;
use crate::probe::{filter_top_k, ProbeConfig, ProbeDesign, ProbeMode, ProbeResult};

/// Probe settings for the clause search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub mode: ProbeMode,
    pub tau: f64,
    /// Overall failure probability, split across levels and probes.
    pub delta: f64,
    /// Candidates kept per level in empirical mode.
    pub k: usize,
    /// Empirical-mode sample sizes and iteration count.
    pub n_train: usize,
    pub n_val: usize,
    pub iters: usize,
    /// Constant-1 feature; defaults to on in empirical mode, off otherwise.
    pub intercept: Option<bool>,
    /// Largest clause set allowed at any level.
    pub frontier_cap: usize,
    /// Largest per-split probe sample count allowed in theoretical mode.
    pub sample_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let e = ProbeConfig::empirical(1.0);
        Self {
            mode: ProbeMode::Empirical,
            tau: 1.0,
            delta: 0.1,
            k: 200,
            n_train: e.n_train,
            n_val: e.n_val,
            iters: e.iters,
            intercept: None,
            frontier_cap: 1_000_000,
            sample_cap: 2_000_000,
        }
    }
}

/// One level of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    /// All candidate clauses at this level, in clause order.
    pub clauses: Vec<Clause>,
    /// Clauses that passed the probe (theoretical) or survived the top-`k`
    /// filter (empirical). Empty for an unprobed final level.
    pub accepted: Vec<Clause>,
    pub probes: usize,
    /// Probe tolerance and per-probe confidence (theoretical mode only).
    pub tolerance: Option<f64>,
    pub confidence: Option<f64>,
    pub n_train: usize,
    pub n_val: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierState {
    pub depth_budget: usize,
    pub levels: Vec<LevelRecord>,
}

impl FrontierState {
    pub fn total_probes(&self) -> usize {
        self.levels.iter().map(|l| l.probes).sum()
    }

    /// The union of every level.
    pub fn all_clauses(&self) -> BTreeSet<Clause> {
        self.levels.iter().flat_map(|l| l.clauses.iter().cloned()).collect()
    }
}

fn successors_of(accepted: &[Clause]) -> Vec<Clause> {
    let set: BTreeSet<Clause> = accepted.iter().flat_map(Clause::successors).collect();
    set.into_iter().collect()
}

fn probe_level(
    clauses: &[Clause],
    phi: &RepresentationOracle,
    dist: &DistributionSampler,
    cfg: &ProbeConfig,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Vec<ProbeResult>> {
    let train_x = dist.draw(cfg.n_train, rng);
    let val_x = dist.draw(cfg.n_val, rng);
    let design = ProbeDesign::new(
        &phi.evaluate_batch(&train_x)?,
        &phi.evaluate_batch(&val_x)?,
        cfg.intercept,
    )?;
    let train_bits = SampleBits::from_inputs(&train_x);
    let val_bits = SampleBits::from_inputs(&val_x);
    clauses
        .par_iter()
        .map(|c| design.fit_mask(&train_bits.clause_mask(c), &val_bits.clause_mask(c), cfg))
        .collect()
}

/// Grows clause sets level by level, keeping only clauses the representation
/// can linearly express.
///
/// Theoretical mode probes levels `0..R` at tolerance `2^(-i-3)` and
/// per-probe confidence `δ / (2 |S_i| R)`, keeping the accepted clauses.
/// Empirical mode probes levels `0..=R` and keeps the `k` clauses with the
/// smallest validation loss. Either way level `i + 1` is every successor of
/// the kept clauses at level `i`, and the final clause set is the union of
/// all levels.
pub fn phase1_search<R: Rng + ?Sized>(
    phi: &RepresentationOracle,
    dist: &DistributionSampler,
    depth_budget: usize,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<FrontierState> {
    let d = dist.dim();
    if phi.input_dim() != d {
        return Err(Error::invalid("representation and distribution dimensions differ"));
    }
    if depth_budget > d {
        return Err(Error::invalid(format!("depth budget {depth_budget} exceeds d = {d}")));
    }
    if cfg.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut levels = Vec::new();
    let mut current = vec![Clause::empty(d)];
    for i in 0..=depth_budget {
        let probed = match cfg.mode {
            ProbeMode::Theoretical => i < depth_budget,
            ProbeMode::Empirical => true,
        };
        if !probed || current.is_empty() {
            levels.push(unprobed(current));
            break;
        }
        let pcfg = level_config(cfg, i, current.len(), depth_budget, phi.norm_bound())?;
        let results = probe_level(&current, phi, dist, &pcfg, rng)?;
        let accepted = match cfg.mode {
            ProbeMode::Theoretical => current
                .iter()
                .zip(&results)
                .filter(|(_, r)| r.decision)
                .map(|(c, _)| c.clone())
                .collect(),
            ProbeMode::Empirical => {
                let ranked: Vec<(Clause, ProbeResult)> = current.iter().cloned().zip(results).collect();
                let mut top = filter_top_k(&ranked, cfg.k)?;
                top.sort();
                top
            }
        };
        let next = if i < depth_budget { successors_of(&accepted) } else { Vec::new() };
        let theoretical = cfg.mode == ProbeMode::Theoretical;
        levels.push(LevelRecord {
            probes: current.len(),
            clauses: current,
            accepted,
            tolerance: theoretical.then_some(pcfg.eps),
            confidence: theoretical.then_some(pcfg.delta),
            n_train: pcfg.n_train,
            n_val: pcfg.n_val,
        });
        if i == depth_budget {
            break;
        }
        if next.len() > cfg.frontier_cap {
            return Err(Error::BudgetExceeded(format!(
                "level {} has {} clauses, cap is {}",
                i + 1,
                next.len(),
                cfg.frontier_cap
            )));
        }
        current = next;
    }
    Ok(FrontierState { depth_budget, levels })
}

fn unprobed(clauses: Vec<Clause>) -> LevelRecord {
    LevelRecord {
        clauses,
        accepted: Vec::new(),
        probes: 0,
        tolerance: None,
        confidence: None,
        n_train: 0,
        n_val: 0,
    }
}

fn level_config(cfg: &SearchConfig, level: usize, width: usize, depth_budget: usize, bound: f64) -> Result<ProbeConfig> {
    match cfg.mode {
        ProbeMode::Theoretical => {
            let eps = 2f64.powi(-(level as i32) - 3);
            let delta = cfg.delta / (2.0 * width as f64 * depth_budget as f64);
            let mut pcfg = ProbeConfig::theoretical(cfg.tau, eps, delta, bound);
            if let Some(intercept) = cfg.intercept {
                pcfg.intercept = intercept;
            }
            if pcfg.n_train > cfg.sample_cap {
                return Err(Error::BudgetExceeded(format!(
                    "level {level} probes need {} samples per split, cap is {}",
                    pcfg.n_train, cfg.sample_cap
                )));
            }
            pcfg.validate()?;
            Ok(pcfg)
        }
        ProbeMode::Empirical => {
            let mut pcfg = ProbeConfig::empirical(cfg.tau);
            pcfg.n_train = cfg.n_train;
            pcfg.n_val = cfg.n_val;
            pcfg.iters = cfg.iters;
            pcfg.intercept = cfg.intercept.unwrap_or(true);
            pcfg.validate()?;
            Ok(pcfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolcore::{random_tree, Literal};
    use crate::nnmodel::{PlantedIndicators, ZeroFeatures};
    use crate::rng_from_seed;
    use std::sync::Arc;

    #[test]
    fn zero_depth_budget_probes_nothing() {
        let phi = RepresentationOracle::with_bound(Arc::new(ZeroFeatures { d: 5, m: 3 }), 0.0).unwrap();
        let cfg = SearchConfig {
            mode: ProbeMode::Theoretical,
            ..SearchConfig::default()
        };
        let state = phase1_search(&phi, &DistributionSampler::uniform(5), 0, &cfg, &mut rng_from_seed(0)).unwrap();
        assert_eq!(state.total_probes(), 0);
        assert_eq!(state.all_clauses().into_iter().collect::<Vec<_>>(), vec![Clause::empty(5)]);
    }

    #[test]
    fn zero_representation_collapses() {
        let phi = RepresentationOracle::with_bound(Arc::new(ZeroFeatures { d: 6, m: 3 }), 0.0).unwrap();
        let cfg = SearchConfig {
            mode: ProbeMode::Theoretical,
            ..SearchConfig::default()
        };
        let state = phase1_search(&phi, &DistributionSampler::uniform(6), 3, &cfg, &mut rng_from_seed(1)).unwrap();
        assert_eq!(state.levels.len(), 2);
        assert!(state.levels[0].accepted.is_empty());
        assert!(state.levels[1].clauses.is_empty());
        assert_eq!(state.total_probes(), 1);
    }

    #[test]
    fn planted_indicators_keep_tree_clauses() {
        let d = 12;
        let mut rng = rng_from_seed(2);
        let tree = random_tree(d, 2, &mut rng).unwrap();
        let planted: Vec<Clause> = tree.intermediate_computations().into_iter().collect();
        let phi = RepresentationOracle::with_bound(
            Arc::new(PlantedIndicators::new(d, planted.clone(), 1.0, 0).unwrap()),
            3f64.sqrt(),
        )
        .unwrap();
        let cfg = SearchConfig {
            mode: ProbeMode::Theoretical,
            ..SearchConfig::default()
        };
        let state = phase1_search(&phi, &DistributionSampler::uniform(d), 2, &cfg, &mut rng).unwrap();
        let all = state.all_clauses();
        assert!(planted.iter().all(|c| all.contains(c)));
        for w in state.levels.windows(2) {
            assert!(w[1].clauses.len() <= 2 * d * w[0].accepted.len());
        }
        assert_eq!(state.levels[1].accepted.len(), 2);
    }

    #[test]
    fn empirical_mode_counts() {
        let d = 10;
        let phi = RepresentationOracle::with_bound(Arc::new(ZeroFeatures { d, m: 2 }), 0.0).unwrap();
        let cfg = SearchConfig {
            k: 2 * d,
            n_train: 50,
            n_val: 50,
            ..SearchConfig::default()
        };
        let state = phase1_search(&phi, &DistributionSampler::uniform(d), 2, &cfg, &mut rng_from_seed(3)).unwrap();
        // 1 + 2d + all 2-clauses
        assert_eq!(state.total_probes(), 1 + 20 + 45 * 4);
        assert!(state.levels.iter().all(|l| l.accepted.len() <= cfg.k));
    }

    #[test]
    fn frontier_cap_is_reported() {
        let d = 10;
        let phi = RepresentationOracle::with_bound(Arc::new(ZeroFeatures { d, m: 2 }), 0.0).unwrap();
        let cfg = SearchConfig {
            n_train: 20,
            n_val: 20,
            frontier_cap: 5,
            ..SearchConfig::default()
        };
        let res = phase1_search(&phi, &DistributionSampler::uniform(d), 2, &cfg, &mut rng_from_seed(4));
        assert!(matches!(res, Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn successor_sets_are_deduplicated() {
        let d = 3;
        let a = Clause::new(d, vec![Literal::pos(0)]).unwrap();
        let b = Clause::new(d, vec![Literal::pos(1)]).unwrap();
        let next = successors_of(&[a, b]);
        // {x0,x1} is reachable from both
        assert_eq!(next.len(), 7);
    }
}
