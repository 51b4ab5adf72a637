use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::boolcore::{enumerate_inputs, BitInput, Clause, Literal};
use crate::error::{Error, Result};

/// Exact `min_{‖w‖ <= τ} mean((Φw - y)²)` for a fixed design, solved in the
/// eigenbasis of `ΦᵀΦ/n` with a bisection on the trust-region multiplier.
pub struct ExactBallLeastSquares {
    features_t: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
}

impl ExactBallLeastSquares {
    /// `features` has one row per point; every point has equal weight.
    pub fn new(features: &DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::invalid("least squares needs at least one point"));
        }
        let features_t = features.transpose();
        let gram = (&features_t * features) / features.nrows() as f64;
        let eig = SymmetricEigen::new(gram);
        Ok(Self {
            features_t,
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
        })
    }

    /// Returns `(w, loss)`.
    pub fn solve(&self, y: &[f64], tau: f64) -> (DVector<f64>, f64) {
        let n = y.len() as f64;
        let yv = DVector::from_column_slice(y);
        let cross = &self.features_t * &yv / n;
        let energy = yv.norm_squared() / n;
        let b = self.eigvecs.transpose() * cross;
        let scale = self.eigvals.amax().max(1.0);
        let tol = 1e-12 * scale;
        let coords = |mu: f64| -> DVector<f64> {
            DVector::from_iterator(
                b.len(),
                b.iter().zip(self.eigvals.iter()).map(|(&bi, &li)| {
                    if li + mu > tol {
                        bi / (li + mu)
                    } else {
                        0.0
                    }
                }),
            )
        };
        let u = if tau <= 0.0 {
            DVector::zeros(b.len())
        } else {
            let free = coords(0.0);
            if free.norm() <= tau {
                free
            } else {
                // ‖u(μ)‖ decreases in μ and ‖u(‖b‖/τ)‖ <= τ
                let (mut lo, mut hi) = (0.0, b.norm() / tau);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if coords(mid).norm() > tau {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                coords(hi)
            }
        };
        let quad: f64 = u.iter().zip(self.eigvals.iter()).map(|(u, l)| l * u * u).sum();
        let loss = (quad - 2.0 * u.dot(&b) + energy).max(0.0);
        (&self.eigvecs * u, loss)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingAudit {
    pub k: usize,
    pub tau: f64,
    pub clauses_checked: usize,
    /// Clauses whose best fit with `‖w‖ <= τ` has loss `<= 2^(-k-2)`.
    pub representable: usize,
    pub mean_sq_norm: f64,
    /// `2^(3k+4) τ² E‖φ‖²`.
    pub bound: f64,
}

impl PackingAudit {
    pub fn holds(&self) -> bool {
        self.representable as f64 <= self.bound
    }
}

fn k_clauses(d: usize, k: usize) -> Vec<Clause> {
    let mut level = vec![Clause::empty(d)];
    for _ in 0..k {
        let next: std::collections::BTreeSet<Clause> = level.iter().flat_map(Clause::successors).collect();
        level = next.into_iter().collect();
    }
    level
}

/// Counts the nondegenerate `k`-clauses that `φ` represents with norm `τ`
/// under the uniform distribution on `{0,1}^d`, and the matching packing
/// bound. `features` lists `φ(x)` for every input in enumeration order.
pub fn packing_audit(d: usize, features: &DMatrix<f64>, k: usize, tau: f64) -> Result<PackingAudit> {
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds d = {d}")));
    }
    if d > 12 {
        return Err(Error::invalid(format!("packing audit enumerates inputs; d = {d} is above 12")));
    }
    let xs: Vec<BitInput> = enumerate_inputs(d)?;
    if features.nrows() != xs.len() {
        return Err(Error::invalid(format!(
            "expected {} feature rows, got {}",
            xs.len(),
            features.nrows()
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::invalid("tau must be >= 0"));
    }
    let solver = ExactBallLeastSquares::new(features)?;
    let threshold = 2f64.powi(-(k as i32) - 2);
    let clauses = k_clauses(d, k);
    let representable = clauses
        .iter()
        .filter(|c| {
            let y: Vec<f64> = xs.iter().map(|x| c.eval_unchecked(x) as u8 as f64).collect();
            solver.solve(&y, tau).1 <= threshold
        })
        .count();
    let mean_sq_norm = features.row_iter().map(|r| r.norm_squared()).sum::<f64>() / xs.len() as f64;
    Ok(PackingAudit {
        k,
        tau,
        clauses_checked: clauses.len(),
        representable,
        mean_sq_norm,
        bound: 2f64.powi(3 * k as i32 + 4) * tau * tau * mean_sq_norm,
    })
}

/// Indicators of `t` disjoint positive `k`-clauses on consecutive variables,
/// padded with zero columns, for every input in enumeration order.
pub fn disjoint_clause_features(d: usize, k: usize, t: usize, padding: usize) -> Result<DMatrix<f64>> {
    if k * t > d {
        return Err(Error::invalid("not enough variables for disjoint clauses"));
    }
    let clauses: Vec<Clause> = (0..t)
        .map(|j| Clause::new(d, (0..k).map(|i| Literal::pos(j * k + i)).collect()))
        .collect::<Result<_>>()?;
    let xs = enumerate_inputs(d)?;
    Ok(DMatrix::from_fn(xs.len(), t + padding, |row, col| {
        (col < t && clauses[col].eval_unchecked(&xs[row])) as u8 as f64
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_tau_represents_nothing() {
        let d = 6;
        let f = disjoint_clause_features(d, 2, 3, 2).unwrap();
        let audit = packing_audit(d, &f, 2, 0.0).unwrap();
        assert_eq!(audit.representable, 0);
        assert_eq!(audit.clauses_checked, 15 * 4);
    }

    #[test]
    fn planted_clauses_are_counted() {
        let d = 8;
        let f = disjoint_clause_features(d, 2, 4, 3).unwrap();
        let audit = packing_audit(d, &f, 2, 1.0).unwrap();
        assert!(audit.representable >= 4);
        assert!(audit.bound >= 4.0);
        assert!(audit.holds());
    }

    #[test]
    fn gaussian_features_respect_bound() {
        let (d, m) = (10, 8);
        let mut rng = rng_from_seed(11);
        let f = DMatrix::from_fn(1 << d, m, |_, _| StandardNormal.sample(&mut rng));
        let audit = packing_audit(d, &f, 2, 1.0).unwrap();
        assert!(audit.holds());
    }

    #[test]
    fn solver_matches_unconstrained_when_loose() {
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let y = [1.0, 2.0, 3.0, 0.0];
        let solver = ExactBallLeastSquares::new(&f).unwrap();
        let (w, loss) = solver.solve(&y, 100.0);
        assert!((w[0] - 1.0).abs() < 1e-9 && (w[1] - 2.0).abs() < 1e-9);
        assert!(loss < 1e-12);
        let (w, _) = solver.solve(&y, 1.0);
        assert!((w.norm() - 1.0).abs() < 1e-9);
    }
}
