//! Dense symmetric-matrix primitives shared by the solvers.
//!
//! Storage is row-major and always holds the full square, so `get(i, j)` and
//! `get(j, i)` read distinct but bit-identical cells.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative asymmetry accepted (and averaged away) on construction.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// A dense `p x p` real symmetric matrix, `p >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major data, symmetrizing as `(A + A^T) / 2`.
    ///
    /// Inputs whose asymmetry exceeds `SYMMETRY_TOL * max|a_ij|` are rejected.
    pub fn new(dim: usize, mut data: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: dim });
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                asym = asym.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from its upper triangle: `f(i, j)` is called for `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: dim });
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFiniteInput);
                }
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_upper_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_upper_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Wraps a buffer the caller guarantees to be exactly symmetric and finite.
    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        debug_assert!((0..dim).all(|i| (0..dim).all(|j| data[i * dim + j] == data[j * dim + i])));
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major view of all `p * p` entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub(crate) fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Sets `a_ij` and `a_ji` together.
    #[inline]
    pub(crate) fn set_pair(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &SymMatrix, beta: f64) -> Result<SymMatrix> {
        check_same_dim(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(SymMatrix::from_raw(self.dim, data))
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix::from_raw(self.dim, self.data.iter().map(|v| alpha * v).collect())
    }

    /// `tr(self * other)`, which for symmetric arguments is the entrywise inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> Result<f64> {
        check_same_dim(self, other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> Result<f64> {
        check_same_dim(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Number of unordered pairs `i < j` with `|a_ij| > eps`.
    pub fn offdiag_nonzeros(&self, eps: f64) -> usize {
        let p = self.dim;
        (0..p)
            .map(|i| ((i + 1)..p).filter(|&j| self.get(i, j).abs() > eps).count())
            .sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.offdiag_nonzeros(0.0) == 0
    }

    /// Simultaneous row/column permutation: result `(i, j)` is `self(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SymMatrix> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: perm.len(),
            });
        }
        SymMatrix::from_upper_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }
}

pub(crate) fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        Self::from_slice(a.dim, &a.data)
    }

    pub(crate) fn from_slice(dim: usize, a: &[f64]) -> Result<Self> {
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut d = a[j * dim + j];
            for k in 0..j {
                d -= l[j * dim + k] * l[j * dim + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let d = libm::sqrt(d);
            l[j * dim + j] = d;
            for i in (j + 1)..dim {
                let mut s = a[i * dim + j];
                let (ri, rj) = (&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
                for k in 0..j {
                    s -= ri[k] * rj[k];
                }
                l[i * dim + j] = s / d;
            }
        }
        Ok(Self { dim, lower: l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim)
            .map(|i| libm::log(self.lower[i * self.dim + i]))
            .sum::<f64>()
    }

    /// Smallest diagonal entry of `L`.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower[i * self.dim + i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// `L x`.
    pub fn mul_lower(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            out[i] = (0..=i).map(|k| self.lower[i * n + k] * x[k]).sum();
        }
    }

    /// `A^{-1} = L^{-T} L^{-1}`.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        // Rows of `linv` are rows of L^{-1}; only the lower triangle is nonzero.
        let mut linv = vec![0.0; n * n];
        for i in 0..n {
            linv[i * n + i] = 1.0 / self.lower[i * n + i];
            for j in 0..i {
                let mut s = 0.0;
                for k in j..i {
                    s -= self.lower[i * n + k] * linv[k * n + j];
                }
                linv[i * n + j] = s / self.lower[i * n + i];
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in i..n {
                    s += linv[k * n + i] * linv[k * n + j];
                }
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        SymMatrix::from_raw(n, out)
    }
}

/// Inverse of a positive definite matrix.
pub fn inverse_pd(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(Cholesky::new(a)?.inverse())
}

/// Log determinant of a positive definite matrix via its Cholesky factor.
pub fn log_det_pd(a: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::new(a)?.log_det())
}

/// `-log det(Ωk Ω0^{-1}) + tr(Ωk Ω0^{-1}) - p`, clamped at zero against rounding.
pub fn kl_penalty(omega_k: &SymMatrix, omega_0: &SymMatrix) -> Result<f64> {
    check_same_dim(omega_k, omega_0)?;
    let ck = Cholesky::new(omega_k)?;
    let c0 = Cholesky::new(omega_0)?;
    let sigma0 = c0.inverse();
    let value =
        -ck.log_det() + c0.log_det() + omega_k.trace_product(&sigma0)? - omega_k.dim() as f64;
    Ok(value.max(0.0))
}

/// Sum of `|a_ij|` over all ordered off-diagonal pairs (both triangles).
pub fn l1_offdiag(a: &SymMatrix) -> f64 {
    let p = a.dim();
    let mut s = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            s += a.get(i, j).abs();
        }
    }
    2.0 * s
}

/// `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Column-centered `Y^T Y / n` for an `n x p` row-major observation matrix.
pub fn sample_covariance(observations: &[f64], n: usize, p: usize) -> Result<SymMatrix> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: n });
    }
    if p < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: p });
    }
    if observations.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: observations.len(),
        });
    }
    if observations.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut mean = vec![0.0; p];
    for row in observations.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = vec![0.0; p];
    let mut acc = vec![0.0; p * p];
    for row in observations.chunks_exact(p) {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for i in 0..p {
            let ci = centered[i];
            let dst = &mut acc[i * p..i * p + i + 1];
            for (d, cj) in dst.iter_mut().zip(&centered[..=i]) {
                *d += ci * cj;
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = acc[i * p + j] / n as f64;
            acc[i * p + j] = v;
            acc[j * p + i] = v;
        }
    }
    Ok(SymMatrix::from_raw(p, acc))
}

/// One sub-dataset: its `n x p` observations and cached sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectData {
    n: usize,
    p: usize,
    observations: Vec<f64>,
    sample_cov: SymMatrix,
}

impl SubjectData {
    pub fn new(n: usize, p: usize, observations: Vec<f64>) -> Result<Self> {
        let sample_cov = sample_covariance(&observations, n, p)?;
        Ok(Self {
            n,
            p,
            observations,
            sample_cov,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn sample_cov(&self) -> &SymMatrix {
        &self.sample_cov
    }
}

/// Row-major dense product `C = A B` for `n x n` operands.
pub(crate) fn matmul(n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    c.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let ci = &mut c[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let bk = &b[k * n..(k + 1) * n];
            for (cv, bv) in ci.iter_mut().zip(bk) {
                *cv += aik * bv;
            }
        }
    }
}

/// `X A X` for symmetric `X` and `A`, returned exactly symmetric.
pub(crate) fn sandwich(x: &SymMatrix, a: &SymMatrix) -> SymMatrix {
    let n = x.dim();
    let mut t = vec![0.0; n * n];
    let mut out = vec![0.0; n * n];
    matmul(n, x.as_slice(), a.as_slice(), &mut t);
    matmul(n, &t, x.as_slice(), &mut out);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[i * n + j] + out[j * n + i]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    SymMatrix::from_raw(n, out)
}

/// Entrywise mean of matrices, summing each entry in ascending value order so
/// the result does not depend on the order of `mats`.
pub(crate) fn order_free_mean(mats: &[&SymMatrix]) -> Result<SymMatrix> {
    let first = mats
        .first()
        .ok_or(Error::DimensionTooSmall { min: 1, got: 0 })?;
    for m in mats {
        check_same_dim(first, m)?;
    }
    let n = first.dim();
    let k = mats.len() as f64;
    let mut buf = Vec::with_capacity(mats.len());
    SymMatrix::from_upper_fn(n, |i, j| {
        buf.clear();
        buf.extend(mats.iter().map(|m| m.get(i, j)));
        buf.sort_by(f64::total_cmp);
        buf.iter().sum::<f64>() / k
    })
}
