//! Linear probes: does a target function agree, in mean squared error, with
//! some linear function `w·φ(x)` of the representation with `‖w‖ <= τ`?
//!
//! Fitting is projected gradient descent on the empirical squared loss with
//! projection onto the Euclidean `τ`-ball. Because the ball is rotation
//! invariant, iterations are run in the eigenbasis of the training Gram
//! matrix, which makes each step `O(m)` once the decomposition is known.
//! Many probes over the same samples (one per candidate clause) share a
//! single [`ProbeDesign`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolcore::{BitInput, Clause, DistributionSampler, SampleMask};
use crate::error::{Error, Result};
use crate::nnmodel::RepresentationOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    /// Accept/reject with the sample schedule and gap-certified optimization.
    Theoretical,
    /// Fixed sample sizes and iteration budget; candidates are ranked by
    /// validation loss.
    Empirical,
}

/// Constant in the theoretical sample schedule.
pub const SCHEDULE_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub iters: usize,
    pub mode: ProbeMode,
    /// Append a constant-1 coordinate to `φ` (counted in `‖w‖`).
    pub intercept: bool,
}

impl ProbeConfig {
    /// Theoretical-mode config with both sample sizes from [`sample_schedule`].
    pub fn theoretical(tau: f64, eps: f64, delta: f64, norm_bound: f64) -> Self {
        let n = sample_schedule(tau, norm_bound, eps, delta);
        Self {
            tau,
            eps,
            delta,
            n_train: n,
            n_val: n,
            iters: 200_000,
            mode: ProbeMode::Theoretical,
            intercept: false,
        }
    }

    /// Empirical-mode defaults: 1000 training samples, 10000 validation
    /// samples, 100 iterations.
    pub fn empirical(tau: f64) -> Self {
        Self {
            tau,
            eps: 0.05,
            delta: 0.05,
            n_train: 1000,
            n_val: 10_000,
            iters: 100,
            mode: ProbeMode::Empirical,
            intercept: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("eps and delta must lie in (0, 1)"));
        }
        if self.n_train == 0 || self.n_val == 0 || self.iters == 0 {
            return Err(Error::invalid("sample counts and iterations must be >= 1"));
        }
        Ok(())
    }
}

/// Samples per split for a theoretical-mode probe:
/// `⌈C (1 + τB)² ε⁻² ln(1/δ)⌉` with `C = 8`.
///
/// The squared error of a feasible `w` on a target in `[-1, 1]` lies in
/// `[0, (1 + τB)²]`, which is what the `(1 + τB)²` factor scales with.
pub fn sample_schedule(tau: f64, norm_bound: f64, eps: f64, delta: f64) -> usize {
    let range = 1.0 + tau * norm_bound;
    (SCHEDULE_CONSTANT * range * range / (eps * eps) * (1.0 / delta).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub w: Vec<f64>,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Empirical mode only: validation loss of the same iteration budget run
    /// without projection.
    pub unprojected_val_loss: Option<f64>,
    pub decision: bool,
    pub iterations: usize,
    /// Frank-Wolfe duality gap at the returned `w`; an upper bound on the
    /// distance to the optimal training loss.
    pub gap: f64,
}

/// The accept rule: validation loss at most `1.5 ε`, halfway between the
/// `ε` (must accept) and `2ε` (must reject) regimes.
pub fn decide(result: &ProbeResult, eps: f64) -> bool {
    result.val_loss <= 1.5 * eps
}

/// Keeps the `k` candidates with the smallest validation loss, ties broken by
/// clause order. The output is sorted by `(val_loss, clause)`.
pub fn filter_top_k(candidates: &[(Clause, ProbeResult)], k: usize) -> Result<Vec<Clause>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut ranked: Vec<(f64, &Clause)> = candidates.iter().map(|(c, r)| (r.val_loss, c)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, c)| c.clone()).collect())
}

/// Precomputed sample statistics for fitting many targets against the same
/// representation samples.
pub struct ProbeDesign {
    /// Training features, one column per sample (`m x n_train`).
    train_t: DMatrix<f64>,
    /// Validation features, one column per sample.
    val_t: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    val_gram: DMatrix<f64>,
    train_patterns: Option<Patterns>,
    val_patterns: Option<Patterns>,
}

/// Distinct feature columns of one split, kept when there are few of them so
/// that mask moments reduce to a histogram.
struct Patterns {
    /// Pattern index of every sample.
    ids: Vec<u32>,
    /// One column per distinct pattern.
    columns: DMatrix<f64>,
}

impl Patterns {
    const MAX_DISTINCT: usize = 4096;

    fn find(features_t: &DMatrix<f64>) -> Option<Self> {
        let m = features_t.nrows();
        let n = features_t.ncols();
        if n < 8 * Self::MAX_DISTINCT {
            return None;
        }
        let mut index: std::collections::HashMap<Vec<u64>, u32> = std::collections::HashMap::new();
        let mut firsts = Vec::new();
        let mut ids = Vec::with_capacity(n);
        let mut key = vec![0u64; m];
        for (i, col) in features_t.column_iter().enumerate() {
            for (k, v) in key.iter_mut().zip(col.iter()) {
                *k = v.to_bits();
            }
            let id = match index.get(key.as_slice()) {
                Some(&id) => id,
                None => {
                    if index.len() == Self::MAX_DISTINCT {
                        return None;
                    }
                    let id = index.len() as u32;
                    index.insert(key.clone(), id);
                    firsts.push(i);
                    id
                }
            };
            ids.push(id);
        }
        let columns = DMatrix::from_fn(m, firsts.len(), |r, c| features_t[(r, firsts[c])]);
        Some(Self { ids, columns })
    }

    /// `Σ_i φ_i φ_iᵀ` over all samples.
    fn gram(&self) -> DMatrix<f64> {
        let mut counts = vec![0.0; self.columns.ncols()];
        for &id in &self.ids {
            counts[id as usize] += 1.0;
        }
        let mut weighted = self.columns.clone();
        for (mut col, c) in weighted.column_iter_mut().zip(&counts) {
            col *= *c;
        }
        weighted * self.columns.transpose()
    }

    fn cross(&self, mask: &SampleMask) -> DVector<f64> {
        let mut counts = vec![0u64; self.columns.ncols()];
        for i in mask.ones() {
            counts[self.ids[i] as usize] += 1;
        }
        let counts = DVector::from_iterator(counts.len(), counts.into_iter().map(|c| c as f64));
        &self.columns * counts
    }
}

/// First and second moments of one target on one sample split.
struct TargetMoments {
    /// `Φᵀy / n`
    cross: DVector<f64>,
    /// `‖y‖² / n`
    energy: f64,
}

impl ProbeDesign {
    /// `train` and `val` hold one row per sample.
    pub fn new(train: &DMatrix<f64>, val: &DMatrix<f64>, intercept: bool) -> Result<Self> {
        if train.nrows() == 0 || val.nrows() == 0 {
            return Err(Error::invalid("probe design needs samples in both splits"));
        }
        if train.ncols() != val.ncols() {
            return Err(Error::invalid("train and validation feature widths differ"));
        }
        let augment = |m: &DMatrix<f64>| -> DMatrix<f64> {
            let t = m.transpose();
            if intercept {
                let rows = t.nrows();
                t.insert_row(rows, 1.0)
            } else {
                t
            }
        };
        let train_t = augment(train);
        let val_t = augment(val);
        if train_t.iter().chain(val_t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("non-finite representation value".into()));
        }
        let n_train = train_t.ncols() as f64;
        let n_val = val_t.ncols() as f64;
        let train_patterns = Patterns::find(&train_t);
        let val_patterns = Patterns::find(&val_t);
        let gram_of = |t: &DMatrix<f64>, p: Option<&Patterns>| match p {
            Some(p) => p.gram(),
            None => t * t.transpose(),
        };
        let gram = gram_of(&train_t, train_patterns.as_ref()) / n_train;
        let val_gram = gram_of(&val_t, val_patterns.as_ref()) / n_val;
        let eig = SymmetricEigen::new(gram);
        let eigvals = eig.eigenvalues.map(|l| l.max(0.0));
        Ok(Self {
            train_t,
            val_t,
            eigvecs: eig.eigenvectors,
            eigvals,
            val_gram,
            train_patterns,
            val_patterns,
        })
    }

    /// Number of coefficients (including the intercept, if any).
    pub fn dim(&self) -> usize {
        self.train_t.nrows()
    }

    pub fn n_train(&self) -> usize {
        self.train_t.ncols()
    }

    pub fn n_val(&self) -> usize {
        self.val_t.ncols()
    }

    fn moments_dense(features_t: &DMatrix<f64>, y: &[f64]) -> TargetMoments {
        let n = y.len() as f64;
        let yv = DVector::from_column_slice(y);
        TargetMoments {
            cross: features_t * &yv / n,
            energy: yv.norm_squared() / n,
        }
    }

    fn moments_mask(features_t: &DMatrix<f64>, patterns: Option<&Patterns>, mask: &SampleMask) -> TargetMoments {
        let n = mask.len() as f64;
        let cross = match patterns {
            Some(p) => p.cross(mask),
            None => {
                let m = features_t.nrows();
                let data = features_t.as_slice();
                let mut cross = vec![0.0; m];
                for i in mask.ones() {
                    for (acc, v) in cross.iter_mut().zip(&data[i * m..(i + 1) * m]) {
                        *acc += v;
                    }
                }
                DVector::from_vec(cross)
            }
        };
        TargetMoments {
            cross: cross / n,
            energy: mask.count_ones() as f64 / n,
        }
    }

    /// Fits real-valued targets given per split.
    pub fn fit(&self, y_train: &[f64], y_val: &[f64], cfg: &ProbeConfig) -> Result<ProbeResult> {
        if y_train.len() != self.n_train() || y_val.len() != self.n_val() {
            return Err(Error::invalid("target length does not match the design"));
        }
        if y_train.iter().chain(y_val).any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("non-finite target value".into()));
        }
        let train = Self::moments_dense(&self.train_t, y_train);
        let val = Self::moments_dense(&self.val_t, y_val);
        self.solve(&train, &val, cfg)
    }

    /// Fits a 0/1 target given as sample masks, e.g. `AND_S` on each split.
    pub fn fit_mask(&self, train: &SampleMask, val: &SampleMask, cfg: &ProbeConfig) -> Result<ProbeResult> {
        if train.len() != self.n_train() || val.len() != self.n_val() {
            return Err(Error::invalid("mask length does not match the design"));
        }
        let train = Self::moments_mask(&self.train_t, self.train_patterns.as_ref(), train);
        let val = Self::moments_mask(&self.val_t, self.val_patterns.as_ref(), val);
        self.solve(&train, &val, cfg)
    }

    /// Empirical squared loss on the training split at `w`.
    pub fn train_loss_at(&self, w: &[f64], y_train: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        let pred = self.train_t.transpose() * w;
        pred.iter()
            .zip(y_train)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / y_train.len() as f64
    }

    fn solve(&self, train: &TargetMoments, val: &TargetMoments, cfg: &ProbeConfig) -> Result<ProbeResult> {
        cfg.validate()?;
        let b = self.eigvecs.transpose() * &train.cross;
        let theoretical = cfg.mode == ProbeMode::Theoretical;
        let (u, iterations, gap) = pgd_eigenbasis(&self.eigvals, &b, cfg.tau, cfg.iters, cfg.eps / 4.0, theoretical);
        let mut w = &self.eigvecs * u;
        // orthogonal rotation preserves the norm up to rounding
        let norm = w.norm();
        if norm > cfg.tau {
            w *= cfg.tau / norm;
        }
        let train_loss = self.loss(&w, train, None);
        let val_loss = self.loss(&w, val, Some(&self.val_gram));
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::NumericFailure(format!(
                "probe loss is not finite (train {train_loss}, val {val_loss})"
            )));
        }
        let unprojected_val_loss = match cfg.mode {
            ProbeMode::Empirical => {
                let (u, _, _) = pgd_eigenbasis(&self.eigvals, &b, f64::INFINITY, cfg.iters, 0.0, false);
                let w_free = &self.eigvecs * u;
                Some(self.loss(&w_free, val, Some(&self.val_gram)))
            }
            ProbeMode::Theoretical => None,
        };
        let mut result = ProbeResult {
            w: w.iter().copied().collect(),
            train_loss,
            val_loss,
            unprojected_val_loss,
            decision: false,
            iterations,
            gap,
        };
        result.decision = decide(&result, cfg.eps);
        Ok(result)
    }

    /// `wᵀGw − 2 w·c + energy`, clamped at zero against rounding.
    fn loss(&self, w: &DVector<f64>, moments: &TargetMoments, gram: Option<&DMatrix<f64>>) -> f64 {
        let quad = match gram {
            Some(g) => w.dot(&(g * w)),
            None => {
                let u = self.eigvecs.transpose() * w;
                u.iter().zip(self.eigvals.iter()).map(|(u, l)| l * u * u).sum()
            }
        };
        (quad - 2.0 * w.dot(&moments.cross) + moments.energy).max(0.0)
    }
}

/// Projected gradient descent on `uᵀΛu − 2bᵀu` over `‖u‖ <= τ`, step
/// `1 / (2 λ_max)`. Stops once the Frank-Wolfe gap drops to `gap_tol`
/// (if `check_gap`) or after `max_iters` steps. Returns `(u, iterations,
/// gap)`.
fn pgd_eigenbasis(
    eigvals: &DVector<f64>,
    b: &DVector<f64>,
    tau: f64,
    max_iters: usize,
    gap_tol: f64,
    check_gap: bool,
) -> (DVector<f64>, usize, f64) {
    let m = b.len();
    let mut u = DVector::zeros(m);
    let lmax = eigvals.max();
    let gap_at = |u: &DVector<f64>| -> f64 {
        let grad = 2.0 * (eigvals.component_mul(u) - b);
        let radius_term = if tau.is_finite() { tau * grad.norm() } else { 0.0 };
        grad.dot(u) + radius_term
    };
    if lmax <= 0.0 {
        // zero representation: every feasible u has the same loss
        return (u, 0, 0.0);
    }
    let mut gap = gap_at(&u);
    let mut iterations = 0;
    while iterations < max_iters {
        if check_gap && gap <= gap_tol {
            break;
        }
        for i in 0..m {
            u[i] -= (eigvals[i] * u[i] - b[i]) / lmax;
        }
        let norm = u.norm();
        if norm > tau {
            u *= tau / norm;
        }
        iterations += 1;
        if check_gap {
            gap = gap_at(&u);
        }
    }
    if !check_gap {
        gap = gap_at(&u);
    }
    (u, iterations, gap.max(0.0))
}

/// One probe of `g` against `φ` on fresh samples from `dist`: `cfg.n_train`
/// samples to fit, `cfg.n_val` held out to score.
pub fn fit_constrained<R: Rng + ?Sized>(
    g: &dyn Fn(&BitInput) -> f64,
    phi: &RepresentationOracle,
    dist: &DistributionSampler,
    cfg: &ProbeConfig,
    rng: &mut R,
) -> Result<ProbeResult> {
    cfg.validate()?;
    if dist.dim() != phi.input_dim() {
        return Err(Error::invalid("distribution and representation dimensions differ"));
    }
    let train_x = dist.draw(cfg.n_train, rng);
    let val_x = dist.draw(cfg.n_val, rng);
    let target = |xs: &[BitInput]| -> Result<Vec<f64>> {
        xs.iter()
            .map(|x| {
                let v = g(x);
                if !v.is_finite() {
                    Err(Error::NumericFailure(format!("target value {v}")))
                } else if v.abs() > 1.0 {
                    Err(Error::invalid(format!("target value {v} outside [-1, 1]")))
                } else {
                    Ok(v)
                }
            })
            .collect()
    };
    let y_train = target(&train_x)?;
    let y_val = target(&val_x)?;
    let design = ProbeDesign::new(
        &phi.evaluate_batch(&train_x)?,
        &phi.evaluate_batch(&val_x)?,
        cfg.intercept,
    )?;
    design.fit(&y_train, &y_val, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolcore::{enumerate_inputs, Literal};
    use crate::nnmodel::{FeatureMap, TableFeatures};
    use crate::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn gaussian_table(d: usize, m: usize, scale: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(1 << d, m, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
    }

    fn result_with_loss(val_loss: f64) -> ProbeResult {
        ProbeResult {
            w: vec![],
            train_loss: 0.0,
            val_loss,
            unprojected_val_loss: None,
            decision: false,
            iterations: 0,
            gap: 0.0,
        }
    }

    #[test]
    fn decision_threshold() {
        let eps = 0.1;
        assert!(decide(&result_with_loss(0.0), eps));
        assert!(!decide(&result_with_loss(3.0 * eps), eps));
        assert!(decide(&result_with_loss(1.5 * eps), eps));
    }

    #[test]
    fn top_k_selection() {
        let c = |v| Clause::new(4, vec![Literal::pos(v)]).unwrap();
        let cands = vec![
            (c(0), result_with_loss(0.3)),
            (c(1), result_with_loss(0.1)),
            (c(2), result_with_loss(0.2)),
        ];
        assert_eq!(filter_top_k(&cands, 1).unwrap(), vec![c(1)]);
        assert_eq!(filter_top_k(&cands, 5).unwrap(), vec![c(1), c(2), c(0)]);
        let tied = vec![
            (c(3), result_with_loss(0.5)),
            (c(1), result_with_loss(0.5)),
            (c(2), result_with_loss(0.5)),
        ];
        assert_eq!(filter_top_k(&tied, 2).unwrap(), vec![c(1), c(2)]);
        assert!(filter_top_k(&cands, 0).is_err());
    }

    #[test]
    fn planted_linear_target_is_accepted() {
        let d = 8;
        let table = gaussian_table(d, 12, 0.1, 1);
        let map = Arc::new(TableFeatures::new(d, table.clone()).unwrap());
        let oracle = RepresentationOracle::with_bound(map.clone(), 1.0).unwrap();
        let mut rng = rng_from_seed(2);
        let w_star: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let tau = 2.0 * DVector::from_vec(w_star.clone()).norm();
        let g = |x: &BitInput| {
            let f = map.features(std::slice::from_ref(x));
            f.row(0).iter().zip(&w_star).map(|(a, b)| a * b).sum::<f64>()
        };
        let cfg = ProbeConfig {
            n_train: 2000,
            n_val: 2000,
            ..ProbeConfig::theoretical(tau, 0.05, 0.05, 1.0)
        };
        let res = fit_constrained(&g, &oracle, &DistributionSampler::uniform(d), &cfg, &mut rng).unwrap();
        assert!(res.val_loss <= cfg.eps / 2.0, "val loss {}", res.val_loss);
        assert!(res.decision);
        assert!(DVector::from_vec(res.w).norm() <= tau * (1.0 + 1e-9));
    }

    #[test]
    fn tiny_tau_leaves_the_variance() {
        let d = 8;
        let map = Arc::new(TableFeatures::new(d, gaussian_table(d, 6, 1.0, 3)).unwrap());
        let oracle = RepresentationOracle::with_bound(map, 10.0).unwrap();
        let g = |x: &BitInput| if x.get(0) { 1.0 } else { -1.0 };
        let cfg = ProbeConfig {
            n_train: 2000,
            n_val: 4000,
            ..ProbeConfig::theoretical(1e-9, 0.1, 0.1, 10.0)
        };
        let mut rng = rng_from_seed(4);
        let res = fit_constrained(&g, &oracle, &DistributionSampler::uniform(d), &cfg, &mut rng).unwrap();
        // recompute the validation variance from the same stream
        let mut rng = rng_from_seed(4);
        let dist = DistributionSampler::uniform(d);
        let _ = dist.draw(cfg.n_train, &mut rng);
        let val: Vec<f64> = dist.draw(cfg.n_val, &mut rng).iter().map(g).collect();
        let mean = val.iter().sum::<f64>() / val.len() as f64;
        let var = val.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / val.len() as f64;
        assert!((res.val_loss - var).abs() <= 0.1 * var, "{} vs {var}", res.val_loss);
    }

    #[test]
    fn solution_beats_random_feasible_points() {
        let d = 7;
        let table = gaussian_table(d, 10, 0.5, 5);
        let xs = enumerate_inputs(d).unwrap();
        let map = TableFeatures::new(d, table).unwrap();
        let phi = map.features(&xs);
        let y: Vec<f64> = xs.iter().map(|x| if x.get(1) && x.get(3) { 1.0 } else { 0.0 }).collect();
        let design = ProbeDesign::new(&phi, &phi, false).unwrap();
        let tau = 1.5;
        let cfg = ProbeConfig {
            n_train: xs.len(),
            n_val: xs.len(),
            ..ProbeConfig::theoretical(tau, 0.01, 0.1, 1.0)
        };
        let res = design.fit(&y, &y, &cfg).unwrap();
        let opt = design.train_loss_at(&res.w, &y);
        assert!((opt - res.train_loss).abs() < 1e-9);
        let mut rng = rng_from_seed(6);
        for _ in 0..50 {
            let v: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = DVector::from_vec(v.clone()).norm();
            let r = tau * rng.random::<f64>();
            let w: Vec<f64> = v.iter().map(|x| x * r / norm).collect();
            assert!(opt <= design.train_loss_at(&w, &y) + 1e-12);
        }
    }

    #[test]
    fn larger_tau_never_hurts() {
        let d = 7;
        let xs = enumerate_inputs(d).unwrap();
        let phi = TableFeatures::new(d, gaussian_table(d, 9, 0.3, 8)).unwrap().features(&xs);
        let y: Vec<f64> = xs.iter().map(|x| if x.get(0) ^ x.get(2) { 1.0 } else { -1.0 }).collect();
        let design = ProbeDesign::new(&phi, &phi, false).unwrap();
        let mut last = f64::INFINITY;
        for tau in [1.0, 2.0, 4.0, 8.0] {
            let cfg = ProbeConfig {
                eps: 1e-8,
                iters: 2_000_000,
                ..ProbeConfig::theoretical(tau, 0.5, 0.1, 1.0)
            };
            let res = design.fit(&y, &y, &cfg).unwrap();
            assert!(res.train_loss <= last + 1e-8, "tau {tau}: {} > {last}", res.train_loss);
            last = res.train_loss;
        }
    }

    #[test]
    fn zero_representation_returns_zero_weights() {
        let phi = DMatrix::zeros(50, 4);
        let design = ProbeDesign::new(&phi, &phi, false).unwrap();
        let y = vec![1.0; 50];
        let res = design.fit(&y, &y, &ProbeConfig::theoretical(1.0, 0.1, 0.1, 0.0)).unwrap();
        assert!(res.w.iter().all(|&w| w == 0.0));
        assert_eq!(res.val_loss, 1.0);
        assert!(!res.decision);
    }

    #[test]
    fn empirical_mode_reports_unprojected_loss() {
        let d = 6;
        let xs = enumerate_inputs(d).unwrap();
        let phi = TableFeatures::new(d, gaussian_table(d, 5, 1.0, 9)).unwrap().features(&xs);
        let design = ProbeDesign::new(&phi, &phi, true).unwrap();
        assert_eq!(design.dim(), 6);
        let y: Vec<f64> = xs.iter().map(|x| x.get(0) as u8 as f64).collect();
        let res = design.fit(&y, &y, &ProbeConfig::empirical(0.01)).unwrap();
        let free = res.unprojected_val_loss.unwrap();
        assert!(free <= res.val_loss + 1e-12);
        assert_eq!(res.iterations, 100);
    }

    #[test]
    fn out_of_range_target_rejected() {
        let map = Arc::new(TableFeatures::new(3, DMatrix::zeros(8, 2)).unwrap());
        let oracle = RepresentationOracle::with_bound(map, 0.0).unwrap();
        let cfg = ProbeConfig::theoretical(1.0, 0.1, 0.1, 0.0);
        let mut rng = rng_from_seed(0);
        let res = fit_constrained(&|_| 2.0, &oracle, &DistributionSampler::uniform(3), &cfg, &mut rng);
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
        let res = fit_constrained(&|_| f64::NAN, &oracle, &DistributionSampler::uniform(3), &cfg, &mut rng);
        assert!(matches!(res, Err(Error::NumericFailure(_))));
    }
}
