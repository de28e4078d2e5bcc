//! Shared strategies and nalgebra oracles for the property suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use quasinewton::linalg::{SquareMatrix, SymMatrix};

pub fn dense(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

pub fn dense_sq(m: &SquareMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

pub fn from_dense(m: &DMatrix<f64>) -> SymMatrix {
    let sym = (m + m.transpose()) * 0.5;
    SymMatrix::from_fn(m.nrows(), |i, j| sym[(i, j)])
}

pub fn inv(m: &SymMatrix) -> DMatrix<f64> {
    dense(m).try_inverse().expect("oracle inverse")
}

/// Max-entry error of `x` relative to the largest entry of `oracle`.
pub fn max_rel(x: &DMatrix<f64>, oracle: &DMatrix<f64>) -> f64 {
    (x - oracle).amax() / oracle.amax().max(f64::MIN_POSITIVE)
}

pub fn vec_rel(x: &[f64], oracle: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = oracle.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = dense(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// `λ_max(A^{-1/2} G A^{-1/2})`.
pub fn relative_max(g: &SymMatrix, a: &SymMatrix) -> f64 {
    let l = dense(a).cholesky().expect("oracle cholesky").l();
    let li = l.try_inverse().expect("triangular inverse");
    let m = &li * dense(g) * li.transpose();
    ((&m + m.transpose()) * 0.5).symmetric_eigenvalues().max()
}

pub fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
}

pub fn nonzero_vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    vector(d).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

/// `BBᵀ + shift·I` with entries of `B` in `[-1, 1]`.
pub fn spd(d: usize, shift: f64) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |b| {
        let b = DMatrix::from_row_slice(d, d, &b);
        let m = &b * b.transpose() + DMatrix::identity(d, d) * shift;
        from_dense(&m)
    })
}

/// `PPᵀ` with `P` of `rank` columns.
pub fn psd(d: usize, rank: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, d * rank).prop_map(move |p| {
        let p = DMatrix::from_row_slice(d, rank, &p);
        from_dense(&(&p * p.transpose()))
    })
}

/// `(A, G, u)` with `A` SPD, `G = A + PPᵀ` and `u ≠ 0`, for `d` in `lo..=hi`.
pub fn ordered_pair(lo: usize, hi: usize) -> impl Strategy<Value = (SymMatrix, SymMatrix, Vec<f64>)> {
    (lo..=hi, 1usize..=3).prop_flat_map(|(d, rank_cap)| {
        let rank = rank_cap.min(d);
        (spd(d, 0.2), psd(d, rank), nonzero_vector(d)).prop_map(|(a, p, u)| {
            let g = a.add(&p).unwrap();
            (a, g, u)
        })
    })
}
