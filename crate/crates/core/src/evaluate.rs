//! Accuracy measures for sparse slope estimates along a tuning path.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baseline::LassoFit;
use crate::error::{invalid_input, Result};
use crate::linalg::{norm2, norm_inf};
use crate::solver::CenetFit;

/// A fitted slope tagged with the tuning value that produced it.
pub trait Coefficients {
    fn tuning(&self) -> f64;
    fn coefficients(&self) -> &[f64];

    fn support_size(&self) -> usize {
        self.coefficients().iter().filter(|&&b| b != 0.0).count()
    }
}

impl Coefficients for CenetFit {
    fn tuning(&self) -> f64 {
        self.alpha1
    }

    fn coefficients(&self) -> &[f64] {
        &self.beta
    }
}

impl Coefficients for LassoFit {
    fn tuning(&self) -> f64 {
        self.lambda
    }

    fn coefficients(&self) -> &[f64] {
        &self.beta
    }
}

/// A bare `(tuning, β)` pair, e.g. when paths are indexed by a relative grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFit {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl Coefficients for PathFit {
    fn tuning(&self) -> f64 {
        self.alpha
    }

    fn coefficients(&self) -> &[f64] {
        &self.beta
    }
}

/// Squared distance between the unit directions of `β̂` and `β*`, minimized
/// over the sign of `β̂`. Defined as 1 when `β̂ = 0`.
pub fn est_error(beta_hat: &[f64], beta_star: &[f64]) -> Result<f64> {
    if beta_hat.len() != beta_star.len() {
        return Err(invalid_input("beta_hat and beta_star lengths differ"));
    }
    let star_norm = norm2(beta_star);
    if !(star_norm > 0.0) {
        return Err(invalid_input("beta_star must be non-zero"));
    }
    if norm_inf(beta_hat) == 0.0 {
        return Ok(1.0);
    }
    let hat_norm = norm2(beta_hat);
    let (mut minus, mut plus) = (0.0, 0.0);
    for (h, s) in beta_hat.iter().zip(beta_star) {
        let (u, v) = (h / hat_norm, s / star_norm);
        minus += (u - v) * (u - v);
        plus += (u + v) * (u + v);
    }
    Ok(f64::min(minus, plus))
}

/// `(TPR, FPR)` of the support of `β̂` against the support of `β*`.
pub fn tpr_fpr(beta_hat: &[f64], beta_star: &[f64]) -> Result<(f64, f64)> {
    if beta_hat.len() != beta_star.len() {
        return Err(invalid_input("beta_hat and beta_star lengths differ"));
    }
    let positives = beta_star.iter().filter(|&&b| b != 0.0).count();
    let negatives = beta_star.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(invalid_input(
            "beta_star needs at least one zero and one non-zero entry",
        ));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&h, &s) in beta_hat.iter().zip(beta_star) {
        if h != 0.0 {
            if s != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    Ok((tp as f64 / positives as f64, fp as f64 / negatives as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub alpha: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub nnz: usize,
}

/// One ROC point per path entry, dropping repeats of an `(fpr, tpr)` pair
/// already seen earlier on the path.
pub fn roc_from_path<F: Coefficients>(path: &[F], beta_star: &[f64]) -> Result<Vec<RocPoint>> {
    if path.is_empty() {
        return Err(invalid_input("empty path"));
    }
    let mut out: Vec<RocPoint> = Vec::with_capacity(path.len());
    for fit in path {
        let (tpr, fpr) = tpr_fpr(fit.coefficients(), beta_star)?;
        if out.iter().any(|q| q.fpr == fpr && q.tpr == tpr) {
            continue;
        }
        out.push(RocPoint {
            alpha: fit.tuning(),
            fpr,
            tpr,
            nnz: fit.support_size(),
        });
    }
    Ok(out)
}

/// `{0, 0.01, …, 1}`.
pub fn default_fpr_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

/// Vertically averaged ROC curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRoc {
    pub fpr: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub auc: f64,
}

impl AveragedRoc {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fpr,mean_tpr\n");
        for (f, t) in self.fpr.iter().zip(&self.mean_tpr) {
            writeln!(s, "{f},{t}").unwrap();
        }
        s
    }
}

/// Piecewise-linear TPR of one curve at `f`. At an FPR shared by several
/// points the highest TPR is used.
fn interpolate_tpr(sorted: &[(f64, f64)], f: f64) -> f64 {
    let upto = sorted.partition_point(|&(x, _)| x <= f);
    let (x0, y0) = sorted[upto - 1];
    if x0 == f || upto == sorted.len() {
        return y0;
    }
    let (x1, y1) = sorted[upto];
    y0 + (y1 - y0) * (f - x0) / (x1 - x0)
}

/// Averages ROC curves vertically over `fpr_grid`, after anchoring each
/// curve at `(0, 0)` and `(1, 1)`, and integrates the result by the
/// trapezoid rule.
pub fn average_roc(curves: &[Vec<RocPoint>], fpr_grid: &[f64]) -> Result<AveragedRoc> {
    if curves.is_empty() {
        return Err(invalid_input("no ROC curves to average"));
    }
    if fpr_grid.is_empty() || fpr_grid.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(invalid_input("fpr grid must be non-empty and inside [0, 1]"));
    }
    if fpr_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid_input("fpr grid must be strictly increasing"));
    }
    let mut mean_tpr = vec![0.0; fpr_grid.len()];
    for curve in curves {
        if curve.is_empty() {
            return Err(invalid_input("empty ROC curve"));
        }
        let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.fpr, p.tpr)).collect();
        pts.push((0.0, 0.0));
        pts.push((1.0, 1.0));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for (acc, &f) in mean_tpr.iter_mut().zip(fpr_grid) {
            *acc += interpolate_tpr(&pts, f);
        }
    }
    let count = curves.len() as f64;
    mean_tpr.iter_mut().for_each(|t| *t /= count);
    let auc = fpr_grid
        .windows(2)
        .zip(mean_tpr.windows(2))
        .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
        .sum();
    Ok(AveragedRoc {
        fpr: fpr_grid.to_vec(),
        mean_tpr,
        auc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub alpha: f64,
    pub mean_nnz: f64,
    pub mean_error: f64,
    pub median_error: f64,
}

/// Estimation error against sparsity, averaged over replications at each
/// grid index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub points: Vec<ErrorPoint>,
}

impl ErrorCurve {
    pub fn min_median_error(&self) -> f64 {
        self.points.iter().map(|p| p.median_error).fold(f64::INFINITY, f64::min)
    }

    pub fn min_mean_error(&self) -> f64 {
        self.points.iter().map(|p| p.mean_error).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,mean_nnz,mean_error\n");
        for p in &self.points {
            writeln!(s, "{},{},{}", p.alpha, p.mean_nnz, p.mean_error).unwrap();
        }
        s
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Mean support size and mean/median [`est_error`] at each grid index. All
/// paths must carry the same tuning values in the same order.
pub fn error_vs_nnz<F: Coefficients>(paths: &[Vec<F>], beta_star: &[f64]) -> Result<ErrorCurve> {
    let first = paths.first().ok_or_else(|| invalid_input("no replication paths"))?;
    if first.is_empty() {
        return Err(invalid_input("empty path"));
    }
    for (r, path) in paths.iter().enumerate() {
        if path.len() != first.len() || path.iter().zip(first).any(|(a, b)| a.tuning() != b.tuning()) {
            return Err(invalid_input(format!("replication {r} uses a different tuning grid")));
        }
    }
    let reps = paths.len() as f64;
    let points = (0..first.len())
        .map(|g| {
            let mut errors = paths
                .iter()
                .map(|path| est_error(path[g].coefficients(), beta_star))
                .collect::<Result<Vec<_>>>()?;
            let mean_error = errors.iter().sum::<f64>() / reps;
            let mean_nnz = paths.iter().map(|path| path[g].support_size() as f64).sum::<f64>() / reps;
            Ok(ErrorPoint {
                alpha: first[g].tuning(),
                mean_nnz,
                mean_error,
                median_error: median(&mut errors),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve { points })
}
