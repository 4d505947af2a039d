//! Ordinary lasso regression, the comparison method in the simulations.
//!
//! Objective: `(1/(2n))‖y - b₀ - Xβ‖² + λ‖β‖₁`. The intercept is profiled
//! out by centering, and β is found by cyclic coordinate descent with a
//! residual vector. Iteration stops on the subgradient optimality
//! condition itself rather than on coordinate movement.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::linalg::{dot, norm_inf};
use crate::rank::Dataset;
use crate::solver::check_descending_grid;

/// Relative KKT tolerance used as the stopping rule.
pub const LASSO_KKT_TOL: f64 = 1e-10;
pub const LASSO_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub converged: bool,
    pub sweeps: usize,
}

impl LassoFit {
    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Centered copy of a dataset in column layout.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    columns: Vec<Vec<f64>>,
    /// `‖xⱼ‖² / n` of each centered column.
    scales: Vec<f64>,
    x_means: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
    n: f64,
}

impl LassoProblem {
    pub fn new(data: &Dataset) -> Self {
        let n = data.n() as f64;
        let y_mean = data.y().sum() / n;
        let y: Vec<f64> = data.y().iter().map(|v| v - y_mean).collect();
        let mut columns = Vec::with_capacity(data.p());
        let mut x_means = Vec::with_capacity(data.p());
        for col in data.x().columns() {
            let mean = col.sum() / n;
            x_means.push(mean);
            columns.push(col.iter().map(|v| v - mean).collect::<Vec<f64>>());
        }
        let scales = columns.iter().map(|c| dot(c, c) / n).collect();
        Self {
            columns,
            scales,
            x_means,
            y,
            y_mean,
            n,
        }
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    /// `(1/n) Xᶜᵀ r` for a residual `r`.
    fn correlations(&self, r: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(c, r) / self.n).collect()
    }

    /// Smallest λ with an all-zero solution: `‖Xᶜᵀyᶜ‖∞ / n`.
    pub fn lambda_max(&self) -> f64 {
        norm_inf(&self.correlations(&self.y))
    }

    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (c, &b) in self.columns.iter().zip(beta) {
            if b != 0.0 {
                for (ri, ci) in r.iter_mut().zip(c) {
                    *ri -= b * ci;
                }
            }
        }
        r
    }

    /// Largest violation of `|(1/n)xⱼᵀr| ≤ λ` (with equality on the support).
    pub fn kkt_residual(&self, beta: &[f64], lambda: f64) -> f64 {
        let grad = self.correlations(&self.residual(beta));
        grad.iter()
            .zip(beta)
            .map(|(&g, &b)| {
                if b != 0.0 {
                    (g - lambda * b.signum()).abs()
                } else {
                    (g.abs() - lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Coordinate descent from `beta`, which is updated in place.
    pub fn solve(&self, lambda: f64, beta: &mut [f64]) -> Result<LassoFit> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid_input(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if beta.len() != self.p() {
            return Err(invalid_input("lasso warm start has the wrong dimension"));
        }
        let tol = LASSO_KKT_TOL * self.lambda_max().max(1.0);
        let mut r = self.residual(beta);
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < LASSO_MAX_SWEEPS {
            sweeps += 1;
            for (j, col) in self.columns.iter().enumerate() {
                let scale = self.scales[j];
                if scale == 0.0 {
                    beta[j] = 0.0;
                    continue;
                }
                let z = dot(col, &r) / self.n + scale * beta[j];
                let updated = soft_threshold(z, lambda) / scale;
                let delta = updated - beta[j];
                if delta != 0.0 {
                    beta[j] = updated;
                    for (ri, ci) in r.iter_mut().zip(col) {
                        *ri -= delta * ci;
                    }
                }
            }
            if self.kkt_residual(beta, lambda) < tol {
                converged = true;
                break;
            }
        }
        let intercept = self.y_mean - dot(&self.x_means, beta);
        Ok(LassoFit {
            beta: beta.to_vec(),
            intercept,
            lambda,
            converged,
            sweeps,
        })
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Lasso fit from a zero start.
pub fn lasso_fit(data: &Dataset, lambda: f64) -> Result<LassoFit> {
    let problem = LassoProblem::new(data);
    problem.solve(lambda, &mut vec![0.0; data.p()])
}

/// `‖Xᶜᵀyᶜ‖∞ / n`.
pub fn lasso_lambda_max(data: &Dataset) -> f64 {
    LassoProblem::new(data).lambda_max()
}

/// Warm-started fits along a strictly descending λ grid.
pub fn lasso_path(data: &Dataset, lambda_grid: &[f64]) -> Result<Vec<LassoFit>> {
    check_descending_grid(lambda_grid, "lambda")?;
    let problem = LassoProblem::new(data);
    let mut beta = vec![0.0; data.p()];
    lambda_grid.iter().map(|&l| problem.solve(l, &mut beta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |i| x[[i, 0]] * 2.0 - x[[i, 1]] + rng.random_range(-0.5..0.5));
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn null_threshold_gives_zero() {
        let d = random_data(1, 30, 5);
        let lmax = lasso_lambda_max(&d);
        let fit = lasso_fit(&d, lmax).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.nnz(), 0);
        let fit = lasso_fit(&d, 0.99 * lmax).unwrap();
        assert!(fit.nnz() > 0);
    }

    #[test]
    fn orthonormal_design_recovers_ols() {
        // centered orthogonal columns with ‖xⱼ‖² = n, so OLS is Xᵀy / n
        let x = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let y = array![3.0, 1.0, 0.5, -2.0];
        let d = Dataset::new(x, y).unwrap();
        let fit = lasso_fit(&d, 0.0).unwrap();
        // normal equations: β = (XᵀX)⁻¹Xᵀ(y - ȳ) = Xᵀy / 4
        assert!((fit.beta[0] - 1.375).abs() < 1e-12);
        assert!((fit.beta[1] - 1.125).abs() < 1e-12);
        assert!((fit.intercept - 0.625).abs() < 1e-12);
    }

    #[test]
    fn constant_response() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.0, 0.5]];
        let d = Dataset::new(x, array![4.0, 4.0, 4.0]).unwrap();
        let fit = lasso_fit(&d, 0.1).unwrap();
        assert_eq!(fit.beta, vec![0.0, 0.0]);
        assert_eq!(fit.intercept, 4.0);
    }

    #[test]
    fn kkt_holds_on_random_instances() {
        for seed in 0..20 {
            let d = random_data(seed, 40, 8);
            let problem = LassoProblem::new(&d);
            let lambda = 0.1 * problem.lambda_max();
            let fit = lasso_fit(&d, lambda).unwrap();
            assert!(fit.converged);
            assert!(problem.kkt_residual(&fit.beta, lambda) < 1e-6);
        }
    }

    #[test]
    fn path_matches_cold_start() {
        let d = random_data(3, 50, 10);
        let lmax = lasso_lambda_max(&d);
        let grid: Vec<f64> = (0..15).map(|k| lmax * 0.7f64.powi(k)).collect();
        let path = lasso_path(&d, &grid).unwrap();
        for (fit, &l) in path.iter().zip(&grid) {
            let cold = lasso_fit(&d, l).unwrap();
            let diff = crate::linalg::max_abs_diff(&fit.beta, &cold.beta);
            assert!(diff < 1e-6, "lambda {l}: {diff}");
        }
        assert_eq!(path[0].nnz(), 0);
        assert_eq!(
            lasso_path(&d, &[0.5 * lmax]).unwrap()[0],
            lasso_fit(&d, 0.5 * lmax).unwrap()
        );
    }

    #[test]
    fn rejects_negative_lambda() {
        assert!(lasso_fit(&random_data(0, 10, 2), -1.0).is_err());
    }
}
