//! Dense symmetric linear algebra.
//!
//! Everything here works on small-to-moderate dense matrices (a few hundred
//! rows at most) and is fully deterministic: the eigensolver is cyclic
//! Jacobi, which needs no pivoting heuristics and produces bit-identical
//! output for identical input.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};

/// Sweep cap for the cyclic Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative off-diagonal Frobenius threshold at which Jacobi stops.
pub const JACOBI_REL_TOL: f64 = 1e-12;
/// Pivots at or below this value are rejected by [`cholesky`].
pub const CHOLESKY_MIN_PIVOT: f64 = 1e-12;

/// A dense symmetric matrix stored in full row-major order.
///
/// The only constructors either mirror one triangle or check exact
/// symmetry, so `get(i, j) == get(j, i)` always holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle
    /// (`i <= j`) and mirrored below the diagonal.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from explicit rows, rejecting anything that is not
    /// square and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(invalid_input("symmetric matrix must have at least one row"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(invalid_input(format!(
                    "row {i} has length {} but matrix has {dim} rows",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(invalid_input(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row `i`, which by symmetry is also column `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self + shift * I`.
    pub fn add_diagonal(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += shift;
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "matvec dimension mismatch");
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    /// `vᵀ S v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    /// Plain product of two symmetric matrices. The result is generally not
    /// symmetric, so it is returned as row-major rows.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| dot(self.row(i), other.row(j))).collect())
            .collect()
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sub-matrix on the given row/column indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenPair {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn compose(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let dim = self.values.len();
        SymMatrix::from_fn(dim, |i, j| {
            self.vectors.iter().zip(&weights).map(|(v, w)| w * v[i] * v[j]).sum()
        })
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("eigenpair is never empty")
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `JACOBI_REL_TOL * ‖S‖_F`, at most [`JACOBI_MAX_SWEEPS`] times.
/// Equal eigenvalues keep the order of their diagonal positions.
pub fn sym_eigen(s: &SymMatrix) -> Result<EigenPair> {
    if !s.is_finite() {
        return Err(invalid_input("matrix has non-finite entries"));
    }
    let n = s.dim();
    let mut a = s.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = JACOBI_REL_TOL * s.frobenius_norm();
    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                if a[p * n + q] != 0.0 {
                    jacobi_rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "jacobi eigensolver",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable, so ties keep their original index order
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i * n + k]).collect()).collect();
    Ok(EigenPair { values, vectors })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Applies the rotation that annihilates `a[p][q]`, accumulating it into `v`.
fn jacobi_rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // A <- A J
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    // A <- Jᵀ A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    // restore exact symmetry of the touched rows/columns
    for k in 0..n {
        if k != p && k != q {
            a[p * n + k] = a[k * n + p];
            a[q * n + k] = a[k * n + q];
        }
    }

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

/// Tolerance below zero that is still treated as a zero eigenvalue.
pub fn psd_tolerance(s: &SymMatrix) -> f64 {
    1e-8 * (1.0 + s.sup_norm())
}

/// Principal positive semidefinite square root.
///
/// Eigenvalues in `[-psd_tolerance(S), 0)` are clamped to zero; anything
/// more negative is rejected.
pub fn psd_sqrt(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(s)?;
    psd_sqrt_from_eigen(s, &eig)
}

pub(crate) fn psd_sqrt_from_eigen(s: &SymMatrix, eig: &EigenPair) -> Result<SymMatrix> {
    let tol = psd_tolerance(s);
    let min = eig.min_value();
    if min < -tol {
        return Err(Error::NotPsd {
            eigenvalue: min,
            tolerance: tol,
        });
    }
    Ok(eig.compose(|l| l.max(0.0).sqrt()))
}

/// Lower-triangular Cholesky factor, row-major with zeros above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(invalid_input("lower-triangular matrix must be square"));
            }
            if row[i + 1..].iter().any(|&v| v != 0.0) {
                return Err(invalid_input(format!("row {i} has entries above the diagonal")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `L v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(&self.data[i * self.dim..i * self.dim + i + 1], &v[..=i]))
            .collect()
    }

    /// `L Lᵀ`.
    pub fn gram(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            let k = i.min(j) + 1;
            dot(&self.data[i * n..i * n + k], &self.data[j * n..j * n + k])
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

/// Cholesky factorization `S = L Lᵀ` of a strictly positive definite matrix.
pub fn cholesky(s: &SymMatrix) -> Result<LowerTriangular> {
    if !s.is_finite() {
        return Err(invalid_input("matrix has non-finite entries"));
    }
    let n = s.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let pivot = s.get(j, j) - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
        if !(pivot > CHOLESKY_MIN_PIVOT) {
            return Err(Error::NotPositiveDefinite { pivot, index: j });
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let acc = s.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = acc / ljj;
        }
    }
    Ok(LowerTriangular { dim: n, data: l })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// `max_i |a_i - b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sup_diff_rows(a: &[Vec<f64>], b: &SymMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m = m.max((v - b.get(i, j)).abs());
            }
        }
        m
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let e = sym_eigen(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);

        let e = sym_eigen(&SymMatrix::diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(e.values, vec![9.0, 4.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two() {
        // λ² - 4λ + 3 = 0
        let s = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eigen(&s).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let r = e.compose(|l| l);
        assert!(max_abs_diff(&r.data, &s.data) < 1e-14);
    }

    #[test]
    fn eigen_ties_keep_index_order() {
        let e = sym_eigen(&SymMatrix::diagonal(&[1.0, 3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0, 1.0]);
        assert_eq!(e.vectors[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vectors[2], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn eigen_rejects_nan() {
        let s = SymMatrix::diagonal(&[1.0, f64::NAN]);
        assert!(matches!(sym_eigen(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigen_of_zero_matrix() {
        let e = sym_eigen(&SymMatrix::from_fn(3, |_, _| 0.0)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }

    #[test]
    fn sqrt_examples() {
        let id = SymMatrix::identity(3);
        assert_eq!(psd_sqrt(&id).unwrap(), id);

        let d = psd_sqrt(&SymMatrix::diagonal(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&d.data, &[2.0, 0.0, 0.0, 3.0]) < 1e-15);

        let s = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = psd_sqrt(&s).unwrap();
        let a = (3f64.sqrt() + 1.0) / 2.0;
        let b = (3f64.sqrt() - 1.0) / 2.0;
        assert!(max_abs_diff(&r.data, &[a, b, b, a]) < 1e-14);
        assert!(sup_diff_rows(&r.matmul(&r), &s) < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let s = SymMatrix::diagonal(&[1.0, -0.1]);
        assert!(matches!(psd_sqrt(&s), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn sqrt_clamps_roundoff_negatives() {
        let s = SymMatrix::diagonal(&[1.0, -1e-12]);
        let r = psd_sqrt(&s).unwrap();
        assert_eq!(r.get(1, 1), 0.0);
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymMatrix::identity(2)).unwrap();
        assert_eq!(l.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let l = cholesky(&SymMatrix::diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(l.to_rows(), vec![vec![2.0, 0.0], vec![0.0, 3.0]]);

        let s = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let l = cholesky(&s).unwrap();
        assert_eq!(l.get(0, 0), 1.0);
        assert!((l.get(1, 0) - 0.3).abs() < 1e-15);
        assert!((l.get(1, 1) - 0.91f64.sqrt()).abs() < 1e-15);
        assert!((l.get(1, 1) - 0.9539).abs() < 1e-4);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&s), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn from_rows_checks_symmetry() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[2.0,0.5],[0.5,1.0]]");
        assert_eq!(serde_json::from_str::<SymMatrix>(&json).unwrap(), s);
        assert!(serde_json::from_str::<SymMatrix>("[[1.0,0.0],[1.0,1.0]]").is_err());
    }

    fn square(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0f64..2.0, dim * dim)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eigen_reconstructs_and_preserves_trace(
            (dim, raw) in (1usize..12).prop_flat_map(|d| (Just(d), square(d)))
        ) {
            let s = SymMatrix::from_fn(dim, |i, j| raw[i * dim + j] + raw[j * dim + i]);
            let e = sym_eigen(&s).unwrap();
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((e.values.iter().sum::<f64>() - s.trace()).abs() < 1e-8 * dim as f64);
            let r = e.compose(|l| l);
            prop_assert!(max_abs_diff(&r.data, &s.data) < 1e-8 * (1.0 + s.sup_norm()));
            for a in 0..dim {
                for b in 0..dim {
                    let ip = dot(&e.vectors[a], &e.vectors[b]);
                    let target = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((ip - target).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn cholesky_recovers_factor(
            (dim, raw) in (1usize..10).prop_flat_map(|d| (Just(d), square(d)))
        ) {
            let rows: Vec<Vec<f64>> = (0..dim)
                .map(|i| (0..dim).map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => 0.5 + raw[i * dim + j].abs(),
                    std::cmp::Ordering::Greater => raw[i * dim + j],
                }).collect())
                .collect();
            let l = LowerTriangular::from_rows(&rows).unwrap();
            let back = cholesky(&l.gram()).unwrap();
            prop_assert!(max_abs_diff(&back.data, &l.data) < 1e-8);
        }
    }
}
