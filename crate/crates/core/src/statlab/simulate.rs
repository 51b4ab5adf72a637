use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::class::{pareto_frontier, xor_class, FiniteClass};
use crate::error::{Error, Result};
use crate::Rng as StdRng;

/// Independent stream for trial `t` of a run seeded with `seed`.
fn trial_rng(seed: u64, t: u64) -> StdRng {
    let mut rng = StdRng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

/// Samples for the max-sample threshold distiller: `⌈ln(1/δ)/ε⌉`.
pub fn threshold_sample_count(eps: f64, delta: f64) -> usize {
    ((1.0 / delta).ln() / eps).ceil() as usize
}

/// Thresholds `g_i(x) = 1(x > i)` on `{1..N}` for `i = 0..=N`, distilling
/// the zero function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFamily {
    pub n: usize,
}

impl ThresholdFamily {
    pub fn eval(&self, i: usize, x: usize) -> bool {
        x > i
    }

    /// The family as a finite class on `{1..N}`.
    pub fn to_class(&self) -> Result<FiniteClass> {
        let rows = (0..=self.n).map(|i| (1..=self.n).map(|x| self.eval(i, x)).collect()).collect();
        FiniteClass::new(
            format!("thresholds-{}", self.n),
            (1..=self.n).map(|x| x.to_string()).collect(),
            rows,
        )
    }
}

/// Point masses on `{1..N}`: `masses[x - 1]` is the probability of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    masses: Vec<f64>,
    /// `tail[m] = P(x > m)` for `m = 0..=N`.
    tail: Vec<f64>,
}

impl MassFunction {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("masses must be finite, non-negative and non-empty"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        let mut tail = vec![0.0; masses.len() + 1];
        for m in (0..masses.len()).rev() {
            tail[m] = tail[m + 1] + masses[m];
        }
        Ok(Self { masses, tail })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, x: usize) -> Result<Self> {
        let mut masses = vec![0.0; n];
        *masses.get_mut(x.wrapping_sub(1)).ok_or_else(|| Error::invalid("point outside 1..N"))? = 1.0;
        Self::new(masses)
    }

    /// Mass `1 - ε` on 1 and `ε` on `m`.
    pub fn two_point(m: usize, eps: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("second point must be at least 2"));
        }
        let mut masses = vec![0.0; m];
        masses[0] = 1.0 - eps;
        masses[m - 1] = eps;
        Self::new(masses)
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    /// Error of `g_m` against the zero function: `P(x > m)`.
    pub fn threshold_error(&self, m: usize) -> f64 {
        self.tail[m.min(self.masses.len())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSimulation {
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
}

impl ThresholdSimulation {
    /// Binomial standard deviation of the failure rate at true rate `δ`.
    pub fn sigma(&self) -> f64 {
        (self.delta * (1.0 - self.delta) / self.trials as f64).sqrt()
    }

    pub const CSV_HEADER: [&'static str; 5] = ["eps", "delta", "n", "trials", "failure_rate"];

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.eps.to_string(),
            self.delta.to_string(),
            self.n.to_string(),
            self.trials.to_string(),
            self.failure_rate.to_string(),
        ]
    }
}

/// Runs the max-sample distiller: draw `n` samples (default
/// `⌈ln(1/δ)/ε⌉`), output `g_{m*}` with `m*` the largest sample, and count
/// trials whose exact error is at least `ε`.
pub fn simulate_threshold_distillation(
    eps: f64,
    delta: f64,
    dist: &MassFunction,
    trials: usize,
    n: Option<usize>,
    seed: u64,
) -> Result<ThresholdSimulation> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("eps and delta must lie in (0, 1)"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = n.unwrap_or_else(|| threshold_sample_count(eps, delta));
    let sampler = WeightedIndex::new(&dist.masses).map_err(|e| Error::invalid(e.to_string()))?;
    let failures = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let m_star = (0..n).map(|_| sampler.sample(&mut rng) + 1).max().unwrap_or(0);
            // tail sums carry rounding; count near-ties as failures
            dist.threshold_error(m_star) >= eps - 1e-12
        })
        .count();
    Ok(ThresholdSimulation {
        eps,
        delta,
        n,
        trials,
        failures,
        failure_rate: failures as f64 / trials as f64,
    })
}

/// The distribution family behind the agnostic lower bound: `2m` points
/// `x_{i,j}` (`i ∈ {1,2}`, `j ∈ 1..=m`) and hypotheses `g_θ` that are 1 at
/// `x_{θ_j, j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgnosticInstance {
    pub theta: Vec<u8>,
    pub alpha: f64,
}

impl AgnosticInstance {
    pub fn new(theta: Vec<u8>, alpha: f64) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|&t| t != 1 && t != 2) {
            return Err(Error::invalid("theta must be a non-empty vector over {1, 2}"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha = {alpha} outside [0, 1]")));
        }
        Ok(Self { theta, alpha })
    }

    pub fn random<R: Rng + ?Sized>(m: usize, alpha: f64, rng: &mut R) -> Result<Self> {
        Self::new((0..m).map(|_| rng.random_range(1..=2)).collect(), alpha)
    }

    pub fn m(&self) -> usize {
        self.theta.len()
    }

    /// Index of `x_{i,j}` in the flattened input list (`i` block-major).
    pub fn point(&self, i: u8, j: usize) -> usize {
        (i as usize - 1) * self.m() + j
    }

    /// `g_θ` as a row over the `2m` points.
    pub fn hypothesis(&self, theta: &[u8]) -> Vec<bool> {
        let mut row = vec![false; 2 * self.m()];
        for (j, &t) in theta.iter().enumerate() {
            row[self.point(t, j)] = true;
        }
        row
    }

    /// Masses `(1 - α)/2m` where `g_θ` is 1 and `(1 + α)/2m` where it is 0.
    pub fn masses(&self) -> Vec<f64> {
        let m2 = 2.0 * self.m() as f64;
        self.hypothesis(&self.theta)
            .into_iter()
            .map(|b| if b { (1.0 - self.alpha) / m2 } else { (1.0 + self.alpha) / m2 })
            .collect()
    }

    /// All `2^m` hypotheses as a class.
    pub fn class(&self) -> Result<FiniteClass> {
        let m = self.m();
        if m > 16 {
            return Err(Error::invalid(format!("2^{m} hypotheses is too many")));
        }
        let rows = (0..1u32 << m)
            .map(|bits| {
                let theta: Vec<u8> = (0..m).map(|j| 1 + ((bits >> j) & 1) as u8).collect();
                self.hypothesis(&theta)
            })
            .collect();
        let inputs = (1..=2).flat_map(|i| (1..=m).map(move |j| format!("x{i},{j}"))).collect();
        FiniteClass::new(format!("agnostic-{m}"), inputs, rows)
    }
}

/// Error of `g_θ'` against the zero function under `D_θ`:
/// `1/2 + α/2 - (α/m)·|{i : θ_i = θ'_i}|`.
pub fn agnostic_instance_error(inst: &AgnosticInstance, theta_prime: &[u8]) -> Result<f64> {
    if theta_prime.len() != inst.m() {
        return Err(Error::invalid("theta' has the wrong length"));
    }
    let agree = inst.theta.iter().zip(theta_prime).filter(|(a, b)| a == b).count() as f64;
    let m = inst.m() as f64;
    Ok(0.5 + inst.alpha / 2.0 - inst.alpha / m * agree)
}

/// Error of each row of a class against `f` under point masses.
pub fn class_errors(f: &[bool], class: &FiniteClass, masses: &[f64]) -> Result<Vec<f64>> {
    Ok(xor_class(f, class)?
        .functions()
        .iter()
        .map(|r| r.iter().zip(masses).filter(|(&b, _)| b).map(|(_, p)| p).sum())
        .collect())
}

/// Sample count for agnostic ERM over the Pareto frontier:
/// `⌈(C/ε²)(VCdimPF + ln(1/δ))⌉`.
pub fn erm_sample_count(c: f64, eps: f64, delta: f64, vcdim_pf: usize) -> usize {
    (c / (eps * eps) * (vcdim_pf as f64 + (1.0 / delta).ln())).ceil() as usize
}

/// Constant used with [`erm_sample_count`], chosen once from small instances.
pub const ERM_CONSTANT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmTrialSummary {
    pub n: usize,
    pub trials: usize,
    pub mean_surplus: f64,
    pub max_surplus: f64,
    /// Fraction of trials with surplus error above `ε`.
    pub failure_rate: f64,
}

/// Agnostic distillation of `{f}` into `G` by ERM over `PF(f ⊕ G)`: draw
/// `n` inputs from `masses`, pick the frontier row with the fewest sampled
/// ones, and record its surplus error over the best row of `G`.
pub fn erm_surplus(
    f: &[bool],
    g: &FiniteClass,
    masses: &[f64],
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<ErmTrialSummary> {
    if masses.len() != g.n_inputs() {
        return Err(Error::invalid("mass vector does not match the class inputs"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let pf = pareto_frontier(&xor_class(f, g)?);
    let best = class_errors(f, g, masses)?.into_iter().fold(f64::INFINITY, f64::min);
    let pf_errors: Vec<f64> = pf
        .functions()
        .iter()
        .map(|r| r.iter().zip(masses).filter(|(&b, _)| b).map(|(_, p)| p).sum())
        .collect();
    let sampler = WeightedIndex::new(masses).map_err(|e| Error::invalid(e.to_string()))?;
    let surpluses: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut counts = vec![0usize; masses.len()];
            for _ in 0..n {
                counts[sampler.sample(&mut rng)] += 1;
            }
            let chosen = pf
                .functions()
                .iter()
                .enumerate()
                .map(|(i, r)| (r.iter().zip(&counts).filter(|(&b, _)| b).map(|(_, c)| c).sum::<usize>(), i))
                .min()
                .map(|(_, i)| i)
                .expect("frontier of a non-empty class is non-empty");
            pf_errors[chosen] - best
        })
        .collect();
    let failures = surpluses.iter().filter(|&&s| s > eps).count();
    Ok(ErmTrialSummary {
        n,
        trials,
        mean_surplus: surpluses.iter().sum::<f64>() / trials as f64,
        max_surplus: surpluses.iter().copied().fold(0.0, f64::max),
        failure_rate: failures as f64 / trials as f64,
    })
}
