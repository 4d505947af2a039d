//! The constrained elastic net estimator.
//!
//! Solves
//!
//! ```text
//! minimize  -βᵀΣxy + α₁‖β‖₁ + α₂‖β‖²   subject to  βᵀΣxxβ ≤ 1
//! ```
//!
//! by ADMM on the splitting `Σxx^{1/2} β = θ`, `‖θ‖ ≤ 1`. Each iteration
//! solves a lasso in β, projects onto the unit ball in θ, and takes a dual
//! ascent step in γ. The lasso step is written in terms of
//! `A = Σxx + (2α₂/η) I` and `c = Σxx^{1/2}(θ - γ/η) + Σxy/η`:
//!
//! ```text
//! β ← argmin βᵀAβ - 2cᵀβ + (2α₁/η)‖β‖₁
//! ```
//!
//! which is the same problem as `‖z - A^{1/2}β‖² + (2α₁/η)‖β‖₁` with
//! `z = A^{-1/2} c`, without ever forming `A^{±1/2}`. Only `Σxx^{1/2}` is
//! computed, once per problem.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input, Result};
use crate::linalg::{self, dot, norm1, norm2, norm_inf, SymMatrix};
use crate::rank::RankMoments;

/// Constraint values below `1 - ACTIVE_SLACK` count as an inactive constraint
/// in [`kkt_residual`].
pub const ACTIVE_SLACK: f64 = 1e-6;
/// Upper end of the multiplier search in [`kkt_residual`].
pub const MAX_MULTIPLIER: f64 = 1e6;

/// Tuning and stopping parameters for [`cenet_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenetConfig {
    /// ℓ₁ weight.
    pub alpha1: f64,
    /// ℓ₂ weight; must be positive for the problem to have a unique solution.
    pub alpha2: f64,
    /// ADMM penalty parameter.
    pub eta: f64,
    /// Outer stopping tolerance on `max(‖Δβ‖, ‖Δθ‖)`.
    pub tol: f64,
    pub max_outer_iter: usize,
    /// Stopping tolerance on the largest coordinate change of the inner lasso.
    pub inner_tol: f64,
    pub max_inner_iter: usize,
}

impl Default for CenetConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.0,
            alpha2: 1e-8,
            eta: 2.0,
            tol: 1e-6,
            max_outer_iter: 5000,
            inner_tol: 1e-8,
            max_inner_iter: 10_000,
        }
    }
}

impl CenetConfig {
    pub fn with_alphas(self, alpha1: f64, alpha2: f64) -> Self {
        Self { alpha1, alpha2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 >= 0.0) || !self.alpha1.is_finite() {
            return Err(invalid_config(format!(
                "alpha1 must be finite and >= 0, got {}",
                self.alpha1
            )));
        }
        if !(self.alpha2 > 0.0) || !self.alpha2.is_finite() {
            return Err(invalid_config(format!(
                "alpha2 must be finite and > 0, got {}",
                self.alpha2
            )));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(invalid_config(format!("eta must be finite and > 0, got {}", self.eta)));
        }
        if !(self.tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(invalid_config("tolerances must be > 0"));
        }
        if self.max_outer_iter == 0 || self.max_inner_iter == 0 {
            return Err(invalid_config("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Result of one constrained elastic net fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenetFit {
    pub beta: Vec<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `β̂ᵀΣxxβ̂`.
    pub constraint_value: f64,
    pub kkt_residual: f64,
    pub objective: f64,
}

impl CenetFit {
    /// Number of coordinates that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// ADMM iterates; all zero at a cold start.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl AdmmState {
    pub fn zeros(p: usize) -> Self {
        Self {
            beta: vec![0.0; p],
            theta: vec![0.0; p],
            gamma: vec![0.0; p],
        }
    }
}

/// `‖Σxy‖∞`: the smallest α₁ at which the solution is exactly zero.
pub fn alpha_max(sigma_xy: &[f64]) -> Result<f64> {
    if sigma_xy.is_empty() {
        return Err(invalid_input("alpha_max of an empty vector"));
    }
    Ok(norm_inf(sigma_xy))
}

/// Euclidean projection onto the closed unit ball.
pub fn project_ball(v: &[f64]) -> Vec<f64> {
    let scale = norm2(v).max(1.0);
    v.iter().map(|x| x / scale).collect()
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

/// Output of [`inner_lasso`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerLasso {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Minimizes `βᵀAβ - 2cᵀβ + λ‖β‖₁` by cyclic coordinate descent from
/// `beta0`, stopping once a full sweep moves no coordinate by `tol` or more.
pub fn inner_lasso(
    a: &SymMatrix,
    c: &[f64],
    lambda: f64,
    beta0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<InnerLasso> {
    let p = a.dim();
    if c.len() != p || beta0.len() != p {
        return Err(invalid_input(format!(
            "inner lasso dimension mismatch: A is {p}x{p}, c has {}, beta0 has {}",
            c.len(),
            beta0.len()
        )));
    }
    if let Some(j) = (0..p).find(|&j| !(a.get(j, j) > 0.0)) {
        return Err(invalid_input(format!(
            "inner lasso needs a positive diagonal, A[{j}][{j}] = {}",
            a.get(j, j)
        )));
    }
    if !(lambda >= 0.0) {
        return Err(invalid_input("inner lasso penalty must be >= 0"));
    }
    let mut beta = beta0.to_vec();
    let (sweeps, converged) = coordinate_descent(a, c, lambda, &mut beta, tol, max_iter);
    Ok(InnerLasso {
        beta,
        sweeps,
        converged,
    })
}

fn coordinate_descent(
    a: &SymMatrix,
    c: &[f64],
    lambda: f64,
    beta: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> (usize, bool) {
    let p = a.dim();
    let half = 0.5 * lambda;
    let mut a_beta = a.matvec(beta);
    for sweep in 1..=max_iter {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let ajj = a.get(j, j);
            let partial = c[j] - (a_beta[j] - ajj * beta[j]);
            let updated = soft_threshold(partial, half) / ajj;
            let delta = updated - beta[j];
            if delta != 0.0 {
                beta[j] = updated;
                for (ab, &ajk) in a_beta.iter_mut().zip(a.row(j)) {
                    *ab += delta * ajk;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            return (sweep, true);
        }
    }
    (max_iter, false)
}

/// `-βᵀΣxy + α₁‖β‖₁ + α₂‖β‖²`.
pub fn cenet_objective(beta: &[f64], moments: &RankMoments, alpha1: f64, alpha2: f64) -> f64 {
    -dot(beta, &moments.sigma_xy) + alpha1 * norm1(beta) + alpha2 * dot(beta, beta)
}

/// Quantities shared by every fit with the same `Σxx`, α₂ and η.
#[derive(Debug, Clone)]
pub struct CenetProblem<'a> {
    moments: &'a RankMoments,
    sqrt_xx: SymMatrix,
    a: SymMatrix,
    alpha2: f64,
    eta: f64,
}

impl<'a> CenetProblem<'a> {
    pub fn new(moments: &'a RankMoments, alpha2: f64, eta: f64) -> Result<Self> {
        if moments.sigma_xx.dim() != moments.sigma_xy.len() {
            return Err(invalid_input("sigma_xx and sigma_xy dimensions differ"));
        }
        if !(alpha2 > 0.0) {
            return Err(invalid_config(format!("alpha2 must be > 0, got {alpha2}")));
        }
        if !(eta > 0.0) {
            return Err(invalid_config(format!("eta must be > 0, got {eta}")));
        }
        let sqrt_xx = linalg::psd_sqrt(&moments.sigma_xx)?;
        let a = moments.sigma_xx.add_diagonal(2.0 * alpha2 / eta);
        Ok(Self {
            moments,
            sqrt_xx,
            a,
            alpha2,
            eta,
        })
    }

    pub fn dim(&self) -> usize {
        self.moments.dim()
    }

    /// Runs ADMM from `state`, leaving the final iterates in it.
    pub fn solve(&self, alpha1: f64, config: &CenetConfig, state: &mut AdmmState) -> Result<CenetFit> {
        let config = CenetConfig {
            alpha1,
            alpha2: self.alpha2,
            eta: self.eta,
            ..*config
        };
        config.validate()?;
        let p = self.dim();
        if state.beta.len() != p || state.theta.len() != p || state.gamma.len() != p {
            return Err(invalid_input("ADMM state has the wrong dimension"));
        }

        let eta = self.eta;
        let lambda = 2.0 * alpha1 / eta;
        let sigma_xy = &self.moments.sigma_xy;
        let mut shifted = vec![0.0; p];
        let mut previous_beta = state.beta.clone();
        let mut iterations = 0;
        let mut converged = false;

        while iterations < config.max_outer_iter {
            iterations += 1;

            // β-update
            for ((s, t), g) in shifted.iter_mut().zip(&state.theta).zip(&state.gamma) {
                *s = t - g / eta;
            }
            let mut c = self.sqrt_xx.matvec(&shifted);
            for (ci, sxy) in c.iter_mut().zip(sigma_xy) {
                *ci += sxy / eta;
            }
            previous_beta.copy_from_slice(&state.beta);
            coordinate_descent(
                &self.a,
                &c,
                lambda,
                &mut state.beta,
                config.inner_tol,
                config.max_inner_iter,
            );

            // θ-update
            let s_beta = self.sqrt_xx.matvec(&state.beta);
            let target: Vec<f64> = s_beta.iter().zip(&state.gamma).map(|(sb, g)| sb + g / eta).collect();
            let theta = project_ball(&target);

            // γ-update
            for ((g, sb), t) in state.gamma.iter_mut().zip(&s_beta).zip(&theta) {
                *g += eta * (sb - t);
            }

            let beta_step = linalg::distance(&state.beta, &previous_beta);
            let theta_step = linalg::distance(&theta, &state.theta);
            state.theta = theta;
            if beta_step.max(theta_step) < config.tol {
                converged = true;
                break;
            }
        }

        let beta = state.beta.clone();
        Ok(CenetFit {
            constraint_value: self.moments.sigma_xx.quad_form(&beta),
            kkt_residual: kkt_residual(&beta, self.moments, alpha1, self.alpha2),
            objective: cenet_objective(&beta, self.moments, alpha1, self.alpha2),
            beta,
            alpha1,
            alpha2: self.alpha2,
            iterations,
            converged,
        })
    }
}

/// Fits the constrained elastic net from a cold start.
pub fn cenet_fit(moments: &RankMoments, config: &CenetConfig) -> Result<CenetFit> {
    config.validate()?;
    let problem = CenetProblem::new(moments, config.alpha2, config.eta)?;
    problem.solve(config.alpha1, config, &mut AdmmState::zeros(moments.dim()))
}

/// Fits along a strictly descending α₁ grid, warm-starting every point from
/// the iterates of the previous one.
pub fn cenet_path(
    moments: &RankMoments,
    alpha1_grid: &[f64],
    alpha2: f64,
    config: &CenetConfig,
) -> Result<Vec<CenetFit>> {
    check_descending_grid(alpha1_grid, "alpha1")?;
    let problem = CenetProblem::new(moments, alpha2, config.eta)?;
    let mut state = AdmmState::zeros(moments.dim());
    alpha1_grid
        .iter()
        .map(|&alpha1| problem.solve(alpha1, config, &mut state))
        .collect()
}

pub(crate) fn check_descending_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid_input(format!("{name} grid is empty")));
    }
    if grid.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(invalid_input(format!("{name} grid values must be finite and >= 0")));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid_input(format!("{name} grid must be strictly descending")));
    }
    Ok(())
}

/// Stationarity residual of the Lagrangian
/// `-βᵀΣxy + α₁‖β‖₁ + α₂‖β‖² + ν(βᵀΣxxβ - 1)`.
///
/// Returns the smallest sup-norm of `-Σxy + α₁s + 2α₂β + 2νΣxxβ` over
/// subgradients `s ∈ ∂‖β‖₁` and multipliers `ν ≥ 0`. The multiplier is
/// pinned to zero when the constraint is inactive; otherwise it is found by
/// golden-section search on `[0, MAX_MULTIPLIER]` (the residual is convex in
/// ν).
pub fn kkt_residual(beta: &[f64], moments: &RankMoments, alpha1: f64, alpha2: f64) -> f64 {
    let xx_beta = moments.sigma_xx.matvec(beta);
    let residual_at = |nu: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..beta.len() {
            let g = -moments.sigma_xy[j] + 2.0 * alpha2 * beta[j] + 2.0 * nu * xx_beta[j];
            let r = if beta[j] > 0.0 {
                (g + alpha1).abs()
            } else if beta[j] < 0.0 {
                (g - alpha1).abs()
            } else {
                (g.abs() - alpha1).max(0.0)
            };
            worst = worst.max(r);
        }
        worst
    };

    let constraint = dot(beta, &xx_beta);
    if constraint < 1.0 - ACTIVE_SLACK {
        return residual_at(0.0);
    }
    golden_section_min(residual_at, 0.0, MAX_MULTIPLIER, 300)
}

/// Minimum of a unimodal function on `[lo, hi]`; also checks both endpoints.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let at_ends = f(lo).min(f(hi));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    at_ends.min(f1).min(f2)
}
