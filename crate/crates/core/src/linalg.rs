//! Dense symmetric and SPD linear algebra.
//!
//! Everything here is sized for desk-scale problems (a few hundred rows at
//! most). Matrices are stored row-major in a flat `Vec<f64>`.

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymMatrix::from_row_major`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default relative pivot threshold for [`cholesky`].
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// Default relative tolerance for [`psd_order_holds`].
pub const DEFAULT_ORDER_TOL: f64 = 1e-9;

/// Largest dimension handled by the Jacobi eigenvalue sweep; beyond it
/// [`extreme_eigs`] switches to shifted power iteration.
pub const JACOBI_MAX_DIM: usize = 512;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dense symmetric matrix. Symmetry is exact: every constructor and mutator
/// leaves `m[i][j] == m[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle and
    /// mirrored below.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Accepts a row-major square array whose asymmetry is within
    /// [`SYMMETRY_TOL`] of its largest entry, then averages the two halves.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        check_len(dim * dim, data.len())?;
        let scale = data.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (data[i * dim + j] - data[j * dim + i]).abs();
                if !(gap <= SYMMETRY_TOL * scale) {
                    return Err(Error::Asymmetric { i, j, gap });
                }
            }
        }
        let mut m = SymMatrix { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_len(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// `x xᵀ` scaled by `alpha`.
    pub fn outer(alpha: f64, x: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| alpha * x[i] * x[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn try_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        Ok(self.matvec(x))
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.dim).fold(0.0_f64, |acc, i| acc.max(self.get(i, i).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale_in_place(s);
        m
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &SymMatrix, sign: f64) -> Result<Self> {
        check_len(self.dim, other.dim)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + sign * b)
            .collect();
        Ok(SymMatrix {
            dim: self.dim,
            data,
        })
    }

    /// `M += alpha * x xᵀ`
    pub fn add_rank1(&mut self, alpha: f64, x: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            let ai = alpha * x[i];
            for j in i..d {
                let v = self.data[i * d + j] + ai * x[j];
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    /// `M += alpha * (x yᵀ + y xᵀ)`
    pub fn add_rank2(&mut self, alpha: f64, x: &[f64], y: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            let (ax, ay) = (alpha * x[i], alpha * y[i]);
            for j in i..d {
                let v = self.data[i * d + j] + (ax * y[j] + ay * x[j]);
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    /// Replaces `M` by `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    /// Product of two symmetric matrices (not symmetric in general).
    pub fn mul(&self, other: &SymMatrix) -> SquareMatrix {
        SquareMatrix::from_sym(self).mul(&SquareMatrix::from_sym(other))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// General dense square matrix; used for the factor `L` with `LᵀL = G⁻¹`,
/// which is not triangular once updated.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_len(dim * dim, data.len())?;
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_sym(m: &SymMatrix) -> Self {
        SquareMatrix {
            dim: m.dim,
            data: m.data.clone(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ x`
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (i, xi) in x.iter().enumerate() {
            axpy(*xi, self.row(i), &mut y);
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let row = &mut out.data[i * d..(i + 1) * d];
                axpy(a, orow, row);
            }
        }
        out
    }

    /// `MᵀM`, symmetrized.
    pub fn gram(&self) -> SymMatrix {
        let d = self.dim;
        let mut g = SymMatrix::zeros(d);
        for k in 0..d {
            g.add_rank1(1.0, self.row(k));
        }
        g.symmetrize();
        g
    }

    /// `M S Mᵀ` for symmetric `S`, symmetrized.
    pub fn congruence(&self, s: &SymMatrix) -> SymMatrix {
        let d = self.dim;
        // rows of (M S) are Sᵀ applied to rows of M
        let ms: Vec<Vec<f64>> = (0..d).map(|i| s.matvec(self.row(i))).collect();
        let mut out = SymMatrix::from_fn(d, |i, j| dot(&ms[i], self.row(j)));
        out.symmetrize();
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `M += x yᵀ * alpha`
    pub fn add_outer(&mut self, alpha: f64, x: &[f64], y: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            let ax = alpha * x[i];
            if ax == 0.0 {
                continue;
            }
            axpy(ax, y, &mut self.data[i * d..(i + 1) * d]);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Lower-triangular Cholesky factor, `lower · lowerᵀ = source`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    dim: usize,
    lower: Vec<f64>,
}

/// Factors an SPD matrix. Fails with `NotPositiveDefinite` when a pivot is at
/// or below `rel_tol` times the largest diagonal entry.
pub fn cholesky(m: &SymMatrix, rel_tol: f64) -> Result<CholFactor> {
    let d = m.dim();
    let threshold = rel_tol * m.max_abs_diag();
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if !(pivot > threshold) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(CholFactor { dim: d, lower: l })
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * b[k];
            }
            b[i] = s / self.lower[i * d + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        let d = self.dim;
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s -= self.lower[k * d + i] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, rhs.len())?;
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// `bᵀ M⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn inverse_quad_form(&self, b: &[f64]) -> Result<f64> {
        check_len(self.dim, b.len())?;
        let mut y = b.to_vec();
        self.forward_in_place(&mut y);
        Ok(dot(&y, &y))
    }

    pub fn inverse(&self) -> SymMatrix {
        let d = self.dim;
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            self.solve_in_place(&mut e);
            cols.push(e);
        }
        let mut inv = SymMatrix::from_fn(d, |i, j| 0.5 * (cols[j][i] + cols[i][j]));
        inv.symmetrize();
        inv
    }

    /// Diagonal of `M⁻¹`: squared column norms of `L⁻¹`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let d = self.dim;
        let mut diag = vec![0.0; d];
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            self.forward_in_place(&mut e);
            diag[j] = dot(&e, &e);
        }
        diag
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        SymMatrix::from_fn(d, |i, j| {
            (0..=i.min(j))
                .map(|k| self.lower(i, k) * self.lower(j, k))
                .sum()
        })
    }
}

fn off_diagonal_norm(a: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            s += 2.0 * a[i * d + j] * a[i * d + j];
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi sweeps. Returns eigenvalues (unsorted, aligned with the
/// columns of the returned vectors when requested).
fn jacobi(
    m: &SymMatrix,
    max_sweeps: usize,
    tol: f64,
    want_vectors: bool,
) -> (Vec<f64>, Option<SquareMatrix>, bool) {
    let d = m.dim();
    let mut a = m.data.clone();
    let mut v = want_vectors.then(|| SquareMatrix::identity(d));
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return (vec![0.0; d], v, true);
    }
    let mut converged = false;
    for _ in 0..max_sweeps {
        if off_diagonal_norm(&a, d) <= tol * scale {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k * d + p], a[k * d + q]);
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p * d + k], a[q * d + k]);
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..d {
                        let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a, d) <= tol * scale {
        converged = true;
    }
    let values = (0..d).map(|i| a[i * d + i]).collect();
    (values, v, converged)
}

/// Full symmetric eigendecomposition by cyclic Jacobi. Eigenvectors are the
/// columns of the returned matrix.
pub fn sym_eigen(m: &SymMatrix, max_sweeps: usize, tol: f64) -> Result<(Vec<f64>, SquareMatrix)> {
    let (values, vectors, converged) = jacobi(m, max_sweeps, tol, true);
    if !converged {
        let (lo, hi) = min_max(&values);
        return Err(Error::NoConvergence {
            iters: max_sweeps,
            lambda_min: lo,
            lambda_max: hi,
        });
    }
    Ok((values, vectors.expect("vectors requested")))
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Smallest and largest eigenvalues.
///
/// Dimensions up to [`JACOBI_MAX_DIM`] use Jacobi sweeps (`iters` bounds the
/// number of sweeps, convergence when the off-diagonal mass drops below
/// `tol·‖m‖_F`). Larger matrices fall back to power iteration on `m` and on
/// `λ_max·I − m`, with `iters` iterations each.
pub fn extreme_eigs(m: &SymMatrix, iters: usize, tol: f64) -> Result<(f64, f64)> {
    if m.dim() <= JACOBI_MAX_DIM {
        let (values, _, converged) = jacobi(m, iters, tol, false);
        let (lo, hi) = min_max(&values);
        if !converged {
            return Err(Error::NoConvergence {
                iters,
                lambda_min: lo,
                lambda_max: hi,
            });
        }
        return Ok((lo, hi));
    }
    let (hi, ok_hi) = power_iteration(m, 0.0, iters, tol);
    let shift = hi.abs().max(m.max_abs_diag()) * 2.0;
    // eigenvalues of shift·I − m are shift − λ; the largest maps to λ_min
    let (top, ok_lo) = power_iteration(m, shift, iters, tol);
    let lo = shift - top;
    if !(ok_hi && ok_lo) {
        return Err(Error::NoConvergence {
            iters,
            lambda_min: lo,
            lambda_max: hi,
        });
    }
    Ok((lo, hi))
}

/// Dominant eigenvalue of `shift·I − m` when `shift > 0`, otherwise of `m`.
fn power_iteration(m: &SymMatrix, shift: f64, iters: usize, tol: f64) -> (f64, bool) {
    let d = m.dim();
    let mut x: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64) / (d as f64)).collect();
    let n0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mx = m.matvec(x);
        if shift == 0.0 {
            mx
        } else {
            x.iter().zip(&mx).map(|(xi, mi)| shift * xi - mi).collect()
        }
    };
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = apply(&x);
        let next = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return (0.0, true);
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return (next, true);
        }
        lambda = next;
    }
    (lambda, false)
}

/// Symmetric `m^{-1/2}` of an SPD matrix.
pub fn inverse_sqrt(m: &SymMatrix) -> Result<SquareMatrix> {
    let (values, vectors) = sym_eigen(m, 100, 1e-15)?;
    let d = m.dim();
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NotPositiveDefinite { index: i, pivot: v });
        }
    }
    let mut out = SymMatrix::zeros(d);
    for (k, &v) in values.iter().enumerate() {
        let col: Vec<f64> = (0..d).map(|i| vectors.get(i, k)).collect();
        out.add_rank1(1.0 / v.sqrt(), &col);
    }
    out.symmetrize();
    Ok(SquareMatrix::from_sym(&out))
}

/// `a ⪯ b` up to tolerance: `λ_min(b − a) ≥ −tol·(1 + ‖b − a‖₂)`.
pub fn psd_order_holds(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    let diff = b.sub(a)?;
    // Fast path: max|diag| ≤ ‖b − a‖₂, so a successful factorization of the
    // shifted difference already proves the order.
    let shift = tol * (1.0 + diff.max_abs_diag());
    if cholesky(&diff.add(&SymMatrix::scaled_identity(diff.dim(), shift))?, 0.0).is_ok() {
        return Ok(true);
    }
    let (lo, hi) = extreme_eigs(&diff, 100, 1e-15)?;
    let spectral = lo.abs().max(hi.abs());
    Ok(lo >= -tol * (1.0 + spectral))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let f = cholesky(&SymMatrix::identity(2), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(f.reconstruct(), SymMatrix::identity(2));
        assert_eq!(f.lower(0, 0), 1.0);
        assert_eq!(f.lower(1, 0), 0.0);

        let f = cholesky(&SymMatrix::from_diag(&[4.0, 9.0]), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(f.lower(0, 0), 2.0);
        assert_eq!(f.lower(1, 1), 3.0);
        assert_eq!(f.lower(1, 0), 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let err = cholesky(&SymMatrix::from_diag(&[1.0, -1.0]), DEFAULT_PIVOT_TOL).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
    }

    #[test]
    fn solve_examples() {
        let f = cholesky(&SymMatrix::identity(2), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(f.solve(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let f = cholesky(&SymMatrix::from_diag(&[4.0, 9.0]), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(f.solve(&[4.0, 9.0]).unwrap(), vec![1.0, 1.0]);
        let f = cholesky(&SymMatrix::from_diag(&[2.0, 2.0]), DEFAULT_PIVOT_TOL).unwrap();
        let x = f.solve(&[1.0, 0.0]).unwrap();
        assert!(close(x[0], 0.5, 1e-15) && x[1] == 0.0, "{x:?}");
        assert!(matches!(
            f.solve(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn extreme_eig_examples() {
        let (lo, hi) = extreme_eigs(&SymMatrix::from_diag(&[1.0, 5.0]), 50, 1e-14).unwrap();
        assert_eq!((lo, hi), (1.0, 5.0));
        let (lo, hi) = extreme_eigs(&SymMatrix::identity(3), 50, 1e-14).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (lo, hi) = extreme_eigs(&m, 50, 1e-14).unwrap();
        assert!(close(lo, 1.0, 1e-13) && close(hi, 3.0, 1e-13), "{lo} {hi}");
    }

    #[test]
    fn power_iteration_path_agrees_with_jacobi() {
        let d = JACOBI_MAX_DIM + 3;
        let diag: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64) * 0.01).collect();
        let mut m = SymMatrix::from_diag(&diag);
        // couple the two extreme coordinates so the matrix is not diagonal
        m.add_rank2(0.001, &unit(d, 0), &unit(d, d - 1));
        let (lo, hi) = extreme_eigs(&m, 20_000, 1e-13).unwrap();
        assert!(close(lo, 1.0, 1e-5), "{lo}");
        assert!(close(hi, diag[d - 1], 1e-5), "{hi}");
    }

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    }

    #[test]
    fn psd_order_examples() {
        let i2 = SymMatrix::identity(2);
        let d23 = SymMatrix::from_diag(&[2.0, 3.0]);
        assert!(psd_order_holds(&i2, &d23, DEFAULT_ORDER_TOL).unwrap());
        assert!(!psd_order_holds(&d23, &i2, DEFAULT_ORDER_TOL).unwrap());
        let m = SymMatrix::from_rows(&[vec![2.0, -0.3], vec![-0.3, 7.0]]).unwrap();
        assert!(psd_order_holds(&m, &m, DEFAULT_ORDER_TOL).unwrap());

        // Off-diagonal gap whose diagonal says nothing: eigenvalues ±4.
        let z = SymMatrix::zeros(2);
        let off = SymMatrix::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        assert!(!psd_order_holds(&z, &off, DEFAULT_ORDER_TOL).unwrap());
        // Within tolerance of the boundary, on either side of the shortcut.
        let tol = 1e-6;
        let near = SymMatrix::from_diag(&[3.0, -0.5 * tol * 4.0]);
        assert!(psd_order_holds(&z, &near, tol).unwrap());
        let below = SymMatrix::from_diag(&[3.0, -2.0 * tol * 4.0]);
        assert!(!psd_order_holds(&z, &below, tol).unwrap());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { i: 0, j: 1, .. }));
        // rounding-level asymmetry is accepted and removed
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-15, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let r = inverse_sqrt(&SymMatrix::from_diag(&[4.0, 16.0])).unwrap();
        assert!(close(r.get(0, 0), 0.5, 1e-14));
        assert!(close(r.get(1, 1), 0.25, 1e-14));
        assert_eq!(r.get(0, 1), 0.0);
    }

    #[test]
    fn inverse_diagonal_matches_inverse() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let f = cholesky(&m, DEFAULT_PIVOT_TOL).unwrap();
        let inv = f.inverse();
        for (i, v) in f.inverse_diagonal().iter().enumerate() {
            assert!(close(*v, inv.get(i, i), 1e-14));
        }
    }
}
