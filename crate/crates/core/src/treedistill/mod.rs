//! Decision-tree distillation.
//!
//! 1. [`phase1_search`] grows clause sets one literal at a time, keeping
//!    clauses a linear probe on the representation can fit.
//! 2. [`estimate_leaf_values`] estimates `E[AND_S(x)(2f(x) - 1)]` for every
//!    kept clause from one shared batch of samples.
//! 3. [`stitch_optimal_tree`] picks the best tree whose nodes are kept
//!    clauses by dynamic programming.
//!
//! [`packing_audit`] checks how many `k`-clauses a representation can fit at
//! a given norm.

mod packing;
mod search;
mod stitch;

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolcore::{BooleanFunction, DecisionTree, DistributionSampler};
use crate::error::{Error, Result};
use crate::nnmodel::RepresentationOracle;

pub use packing::{disjoint_clause_features, packing_audit, ExactBallLeastSquares, PackingAudit};
pub use search::{phase1_search, FrontierState, LevelRecord, SearchConfig};
pub use stitch::{
    estimate_leaf_values, exact_leaf_values_uniform, leaf_sample_count, stitch_optimal_tree, tree_value,
    LeafValues, StitchResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    /// Maximum depth of the output tree.
    pub r: usize,
    /// Maximum size (node count, odd) of the output tree.
    pub s: usize,
    /// Search depth; defaults to `min(r, ⌈log₂(4s/ε)⌉)`.
    pub depth_budget: Option<usize>,
    pub eps: f64,
    pub delta: f64,
    /// Overrides the Hoeffding sample count for leaf values.
    pub leaf_samples: Option<usize>,
    pub search: SearchConfig,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            r: 2,
            s: 7,
            depth_budget: None,
            eps: 0.1,
            delta: 0.1,
            leaf_samples: None,
            search: SearchConfig::default(),
        }
    }
}

impl DistillConfig {
    pub fn resolved_depth_budget(&self) -> usize {
        self.depth_budget.unwrap_or_else(|| {
            let log = (4.0 * self.s as f64 / self.eps).log2().ceil().max(0.0) as usize;
            self.r.min(log)
        })
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.s == 0 || self.s % 2 == 0 {
            return Err(Error::invalid(format!("s must be odd and >= 1, got {}", self.s)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("eps and delta must lie in (0, 1)"));
        }
        if self.r > d || self.resolved_depth_budget() > d {
            return Err(Error::invalid(format!("depth parameters exceed d = {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub depth_budget: usize,
    pub probes: usize,
    /// `|S_i|` per level.
    pub level_sizes: Vec<usize>,
    /// Kept clauses per probed level.
    pub accepted_sizes: Vec<usize>,
    /// Per-split probe samples per level.
    pub probe_samples: Vec<usize>,
    pub clauses: usize,
    pub leaf_samples: usize,
    /// `val(T̂, v̂)` of the output tree.
    pub value: f64,
    pub tree_size: usize,
    pub tree_depth: usize,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Runs the search, estimates leaf values on `f`, and stitches the best tree.
pub fn distill_tree<R: Rng + ?Sized>(
    f: &dyn BooleanFunction,
    phi: &RepresentationOracle,
    dist: &DistributionSampler,
    cfg: &DistillConfig,
    rng: &mut R,
) -> Result<(DecisionTree, DistillReport)> {
    let start = Instant::now();
    let d = dist.dim();
    if f.dim() != d {
        return Err(Error::invalid("function and distribution dimensions differ"));
    }
    cfg.validate(d)?;
    let depth_budget = cfg.resolved_depth_budget();
    let frontier = phase1_search(phi, dist, depth_budget, &cfg.search, rng)?;
    let clauses = frontier.all_clauses();
    let values = estimate_leaf_values(&clauses, f, dist, cfg.eps, cfg.s, cfg.delta, cfg.leaf_samples, rng)?;
    let stitched = stitch_optimal_tree(&values, cfg.s, cfg.r)?;
    let report = DistillReport {
        depth_budget,
        probes: frontier.total_probes(),
        level_sizes: frontier.levels.iter().map(|l| l.clauses.len()).collect(),
        accepted_sizes: frontier.levels.iter().filter(|l| l.probes > 0).map(|l| l.accepted.len()).collect(),
        probe_samples: frontier.levels.iter().map(|l| l.n_train).collect(),
        clauses: clauses.len(),
        leaf_samples: values.samples,
        value: stitched.value,
        tree_size: stitched.tree.size(),
        tree_depth: stitched.tree.depth(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((stitched.tree, report))
}
