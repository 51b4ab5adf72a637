use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::boolcore::{BitInput, Clause, DistributionSampler};
use crate::error::{Error, Result};
use crate::rng_from_seed;

use super::mlp::ResidualMLP;

/// A map `φ : {0,1}^d -> R^m`, evaluated in batches (one row per input).
pub trait FeatureMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn features(&self, xs: &[BitInput]) -> DMatrix<f64>;
}

impl FeatureMap for ResidualMLP {
    fn input_dim(&self) -> usize {
        self.architecture().d
    }

    fn output_dim(&self) -> usize {
        self.architecture().representation_dim()
    }

    fn features(&self, xs: &[BitInput]) -> DMatrix<f64> {
        self.representation(xs).expect("dimension checked by oracle")
    }
}

/// Exact indicators `AND_S(x)` of a list of clauses, each scaled by `scale`,
/// followed by `padding` zero coordinates.
#[derive(Debug, Clone)]
pub struct PlantedIndicators {
    clauses: Vec<Clause>,
    scale: f64,
    padding: usize,
    d: usize,
}

impl PlantedIndicators {
    pub fn new(d: usize, clauses: Vec<Clause>, scale: f64, padding: usize) -> Result<Self> {
        if clauses.iter().any(|c| c.dim() != d) {
            return Err(Error::invalid("planted clause dimension mismatch"));
        }
        Ok(Self {
            clauses,
            scale,
            padding,
            d,
        })
    }

    /// `|scale| · sqrt(#clauses)`, which holds for any clause list.
    pub fn norm_upper_bound(&self) -> f64 {
        self.scale.abs() * (self.clauses.len() as f64).sqrt()
    }
}

impl FeatureMap for PlantedIndicators {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.clauses.len() + self.padding
    }

    fn features(&self, xs: &[BitInput]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(xs.len(), self.output_dim());
        for (i, x) in xs.iter().enumerate() {
            for (j, c) in self.clauses.iter().enumerate() {
                if c.literals().iter().all(|l| l.satisfied_by(x)) {
                    out[(i, j)] = self.scale;
                }
            }
        }
        out
    }
}

/// `φ ≡ 0` in `m` dimensions.
#[derive(Debug, Clone)]
pub struct ZeroFeatures {
    pub d: usize,
    pub m: usize,
}

impl FeatureMap for ZeroFeatures {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.m
    }

    fn features(&self, xs: &[BitInput]) -> DMatrix<f64> {
        DMatrix::zeros(xs.len(), self.m)
    }
}

/// An explicit feature table over all of `{0,1}^d` (row `i` is the input
/// with enumeration index `i`). Only sensible for small `d`.
#[derive(Debug, Clone)]
pub struct TableFeatures {
    d: usize,
    table: DMatrix<f64>,
}

impl TableFeatures {
    pub fn new(d: usize, table: DMatrix<f64>) -> Result<Self> {
        if d >= 64 || table.nrows() != 1usize << d {
            return Err(Error::invalid(format!(
                "feature table needs 2^{d} rows, has {}",
                table.nrows()
            )));
        }
        Ok(Self { d, table })
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }
}

fn input_index(x: &BitInput) -> usize {
    x.bits()
        .iter()
        .enumerate()
        .map(|(i, &b)| (b as usize) << i)
        .sum()
}

impl FeatureMap for TableFeatures {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.table.ncols()
    }

    fn features(&self, xs: &[BitInput]) -> DMatrix<f64> {
        let rows: Vec<usize> = xs.iter().map(input_index).collect();
        self.table.select_rows(&rows)
    }
}

/// A running upper bound that only ever moves up.
#[derive(Debug)]
struct NormBound(AtomicU64);

impl NormBound {
    fn new(value: f64) -> Self {
        Self(AtomicU64::new(value.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    fn raise_to(&self, value: f64) {
        // non-negative floats order the same as their bit patterns
        self.0.fetch_max(value.to_bits(), Ordering::Relaxed);
    }
}

/// Number of uniform draws used to estimate `B` when none is supplied.
pub const NORM_ESTIMATE_SAMPLES: usize = 10_000;
/// Safety factor applied to the largest sampled norm.
pub const NORM_ESTIMATE_SLACK: f64 = 1.05;

/// Representation access `x -> φ(x)` together with a norm bound
/// `B >= max_x ‖φ(x)‖`.
///
/// `B` is raised whenever a batch contains a larger norm, so it always covers
/// every sample evaluated so far.
#[derive(Clone)]
pub struct RepresentationOracle {
    map: Arc<dyn FeatureMap>,
    bound: Arc<NormBound>,
}

impl std::fmt::Debug for RepresentationOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepresentationOracle")
            .field("d", &self.map.input_dim())
            .field("m", &self.map.output_dim())
            .field("bound", &self.bound.get())
            .finish()
    }
}

impl RepresentationOracle {
    /// Uses a caller-supplied bound `B`.
    pub fn with_bound(map: Arc<dyn FeatureMap>, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::invalid(format!("norm bound {bound} must be finite and >= 0")));
        }
        Ok(Self {
            map,
            bound: Arc::new(NormBound::new(bound)),
        })
    }

    /// Estimates `B` as `1.05 ×` the largest norm over 10⁴ uniform draws.
    pub fn estimated(map: Arc<dyn FeatureMap>, seed: u64) -> Self {
        let d = map.input_dim();
        let xs = DistributionSampler::uniform(d).draw(NORM_ESTIMATE_SAMPLES, &mut rng_from_seed(seed));
        let max = max_row_norm(&map.features(&xs));
        Self {
            map,
            bound: Arc::new(NormBound::new(NORM_ESTIMATE_SLACK * max)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.map.input_dim()
    }

    pub fn dim(&self) -> usize {
        self.map.output_dim()
    }

    pub fn norm_bound(&self) -> f64 {
        self.bound.get()
    }

    pub fn evaluate(&self, x: &BitInput) -> Result<Vec<f64>> {
        let m = self.evaluate_batch(std::slice::from_ref(x))?;
        Ok(m.row(0).iter().copied().collect())
    }

    /// `φ` on a batch, one row per input.
    pub fn evaluate_batch(&self, xs: &[BitInput]) -> Result<DMatrix<f64>> {
        let d = self.input_dim();
        if let Some(bad) = xs.iter().find(|x| x.dim() != d) {
            return Err(Error::invalid(format!(
                "input has dimension {}, representation expects {d}",
                bad.dim()
            )));
        }
        let features = self.map.features(xs);
        self.bound.raise_to(max_row_norm(&features));
        Ok(features)
    }
}

fn max_row_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}
