//! Rank statistics and the moment pair fed to the solver.
//!
//! The cross-covariance between each predictor and the (unknown) transformed
//! response is estimated from Kendall's tau through the sine link
//! `ρ = sin(πτ/2)`, scaled by the predictor's standard deviation. Only
//! pairwise signs of the response enter, so any strictly increasing
//! transformation of `y` leaves the result unchanged bit-for-bit.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{invalid_input, Result};
use crate::linalg::SymMatrix;

/// An `n × p` design with its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n != y.len() {
            return Err(invalid_input(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if n < 2 {
            return Err(invalid_input("need at least 2 observations"));
        }
        if p < 1 {
            return Err(invalid_input("need at least 1 predictor"));
        }
        if let Some(((i, j), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid_input(format!(
                "non-finite predictor value at row {i}, column {j}"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input(format!("non-finite response at row {i}")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Same design with `f` applied to every response value.
    pub fn map_response(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.mapv(f))
    }

    /// Keeps only the listed predictor columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(1), cols),
            y: self.y.clone(),
        }
    }

    /// Rows picked by index (repeats allowed), as used by bootstrap resampling.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
        }
    }

    /// Centers every predictor and scales it to unit (1/n) variance.
    /// Constant columns are centered to zero and left unscaled.
    pub fn standardized(&self) -> Self {
        let mut x = self.x.clone();
        let n = x.nrows() as f64;
        for mut col in x.columns_mut() {
            let mean = col.sum() / n;
            col.mapv_inplace(|v| v - mean);
            let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|v| v / sd);
            }
        }
        Self { x, y: self.y.clone() }
    }

    /// True when every response value is identical.
    pub fn response_is_constant(&self) -> bool {
        let first = self.y[0];
        self.y.iter().all(|&v| v == first)
    }
}

/// Sample covariance and the rank-based cross-covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMoments {
    /// `(1/n) Σ (xᵢ - x̄)(xᵢ - x̄)ᵀ`.
    pub sigma_xx: SymMatrix,
    /// `σ̂ⱼ sin(π τ̂ⱼ / 2)`.
    pub sigma_xy: Vec<f64>,
    /// Marginal standard deviations `√(Σ̂xx)ⱼⱼ`.
    pub sigma_hat: Vec<f64>,
    pub tau_hat: Vec<f64>,
}

impl RankMoments {
    /// Assembles moments from precomputed pieces, e.g. for synthetic
    /// problems that do not come from data.
    pub fn from_parts(sigma_xx: SymMatrix, sigma_xy: Vec<f64>) -> Result<Self> {
        if sigma_xx.dim() != sigma_xy.len() {
            return Err(invalid_input(format!(
                "sigma_xx is {0}x{0} but sigma_xy has length {1}",
                sigma_xx.dim(),
                sigma_xy.len()
            )));
        }
        let sigma_hat = sigma_xx.diag().iter().map(|d| d.max(0.0).sqrt()).collect();
        Ok(Self {
            sigma_xx,
            sigma_xy,
            sigma_hat,
            tau_hat: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_xy.len()
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(invalid_input(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(invalid_input("kendall's tau needs at least 2 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid_input("kendall's tau requires finite values"));
    }
    Ok(())
}

#[inline]
fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's tau-a by direct enumeration of all pairs. Tied pairs score 0
/// and the denominator stays `n(n-1)/2`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for l in (i + 1)..n {
            s += sign(x[i] - x[l]) * sign(y[i] - y[l]);
        }
    }
    Ok(s as f64 / pairs(n) as f64)
}

fn pairs(n: usize) -> i64 {
    (n as i64) * (n as i64 - 1) / 2
}

/// Number of tied pairs among consecutive runs of an already sorted key.
fn tied_pairs<T>(items: &[T], eq: impl Fn(&T, &T) -> bool) -> i64 {
    let mut total = 0;
    let mut run = 1i64;
    for w in items.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau-a in `O(n log n)` (Knight's algorithm).
///
/// Sort by `(x, y)`, then count the inversions of `y` with a merge sort.
/// With `n0` all pairs, `tx`/`ty` pairs tied in x/y and `txy` tied in both,
/// `concordant - discordant = n0 - tx - ty + txy - 2·inversions`.
pub fn kendall_tau_fast(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    // inputs are finite, so partial_cmp is total (and treats -0.0 == 0.0)
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).unwrap_or(Ordering::Equal);

    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_unstable_by(|a, b| cmp(&a.0, &b.0).then_with(|| cmp(&a.1, &b.1)));

    let tx = tied_pairs(&pts, |a, b| a.0 == b.0);
    let txy = tied_pairs(&pts, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let inversions = merge_count(&mut ys, &mut buf);
    // ys is now sorted
    let ty = tied_pairs(&ys, |a, b| a == b);

    let s = pairs(n) - tx - ty + txy - 2 * inversions;
    Ok(s as f64 / pairs(n) as f64)
}

/// Bottom-up merge sort returning the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    let mut inversions = 0i64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    inversions += (mid - i) as i64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (end - j)].copy_from_slice(&v[j..end]);
            start = end;
        }
        v.copy_from_slice(buf);
        width *= 2;
    }
    inversions
}

/// The sine link `sin(π τ / 2)` from Kendall's tau to Pearson correlation.
pub fn tau_to_rho(tau: f64) -> Result<f64> {
    if !(tau.abs() <= 1.0) {
        return Err(invalid_input(format!("tau must lie in [-1, 1], got {tau}")));
    }
    Ok((FRAC_PI_2 * tau).sin())
}

/// Column-centered sample covariance with `1/n` normalization, plus the
/// marginal standard deviations.
pub fn sample_cov(x: &Array2<f64>) -> Result<(SymMatrix, Vec<f64>)> {
    let (n, p) = x.dim();
    if n < 2 {
        return Err(invalid_input("sample covariance needs at least 2 rows"));
    }
    if p < 1 {
        return Err(invalid_input("sample covariance needs at least 1 column"));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = x - &mean;
    let gram = centered.t().dot(&centered) / n as f64;
    let cov = SymMatrix::from_fn(p, |i, j| gram[[i, j]]);
    let sigma_hat = cov.diag().iter().map(|d| d.max(0.0).sqrt()).collect();
    Ok((cov, sigma_hat))
}

fn column_taus(data: &Dataset) -> Vec<f64> {
    let y = data.y().to_vec();
    data.x()
        .columns()
        .into_iter()
        .map(|col| tau_of_column(col, &y))
        .collect()
}

fn tau_of_column(col: ArrayView1<f64>, y: &[f64]) -> f64 {
    let col = col.to_vec();
    kendall_tau_fast(&col, y).expect("dataset invariants guarantee valid input")
}

/// Sample covariance of the predictors and the rank cross-covariance
/// `σ̂ⱼ sin(π τ̂ⱼ / 2)`, with the response scale fixed to 1.
pub fn rank_cross_cov(data: &Dataset) -> Result<RankMoments> {
    let (sigma_xx, sigma_hat) = sample_cov(data.x())?;
    let tau_hat = column_taus(data);
    let sigma_xy = sigma_hat
        .iter()
        .zip(&tau_hat)
        .map(|(s, &t)| Ok(s * tau_to_rho(t)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankMoments {
        sigma_xx,
        sigma_xy,
        sigma_hat,
        tau_hat,
    })
}

/// Indices of the `k` predictors with largest `|τ̂ⱼ|`, ties going to the
/// smaller index, returned in ascending order.
pub fn screen_top_k(data: &Dataset, k: usize) -> Result<Vec<usize>> {
    let p = data.p();
    if k == 0 || k > p {
        return Err(invalid_input(format!("screen size {k} must lie in [1, {p}]")));
    }
    Ok(top_k_by_magnitude(&column_taus(data), k))
}

pub(crate) fn top_k_by_magnitude(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    keep
}
