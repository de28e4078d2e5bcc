//! Test objectives: quadratic, regularized log-sum-exp and ℓ₂-regularized
//! logistic regression, plus synthetic data and a LIBSVM reader.

use std::io::BufRead;

use crate::directions::sample_sphere;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, extreme_eigs, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::rng::RngState;

/// Largest dimension for which a dense Hessian is assembled.
pub const DENSE_HESSIAN_MAX_DIM: usize = 1024;

const EIG_ITERS: usize = 5_000;
const EIG_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Strong convexity parameter.
    pub mu: f64,
    /// Lipschitz constant of the gradient.
    pub lip_l: f64,
    /// Strong self-concordance parameter.
    pub self_concordant_m: f64,
}

impl Constants {
    pub fn kappa(&self) -> f64 {
        self.lip_l / self.mu
    }
}

/// A twice-differentiable, strongly convex objective.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hess_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
    fn hess_diag(&self, x: &[f64]) -> Vec<f64>;
    fn constants(&self) -> Constants;

    /// Dense Hessian; refused above [`DENSE_HESSIAN_MAX_DIM`].
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        check_dense(self.dim())?;
        let d = self.dim();
        let mut cols = Vec::with_capacity(d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            cols.push(self.hess_vec(x, &e));
            e[j] = 0.0;
        }
        let mut h = SymMatrix::from_fn(d, |i, j| 0.5 * (cols[j][i] + cols[i][j]));
        h.symmetrize();
        Ok(h)
    }
}

fn check_dense(d: usize) -> Result<()> {
    if d > DENSE_HESSIAN_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "dense Hessian requested for dimension {d} (limit {DENSE_HESSIAN_MAX_DIM})"
        )));
    }
    Ok(())
}

/// `Σ v_j v_jᵀ` over rows `v_j`.
fn gram_of_rows(rows: &[Vec<f64>], d: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(d);
    for r in rows {
        m.add_rank1(1.0, r);
    }
    m
}

fn lambda_max_of_rows(rows: &[Vec<f64>], d: usize) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    Ok(extreme_eigs(&gram_of_rows(rows, d), EIG_ITERS, EIG_TOL)?.1.max(0.0))
}

/// `½xᵀAx − bᵀx`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: SymMatrix,
    b: Vec<f64>,
    constants: Constants,
}

impl QuadraticObjective {
    pub fn new(a: SymMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.len(),
            });
        }
        cholesky(&a, DEFAULT_PIVOT_TOL)?;
        let (lo, hi) = extreme_eigs(&a, EIG_ITERS, EIG_TOL)?;
        Ok(QuadraticObjective {
            a,
            b,
            constants: Constants {
                mu: lo,
                lip_l: hi,
                self_concordant_m: 0.0,
            },
        })
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn minimizer(&self) -> Vec<f64> {
        cholesky(&self.a, DEFAULT_PIVOT_TOL)
            .expect("validated at construction")
            .solve(&self.b)
            .expect("validated at construction")
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.a.quad_form(x) - dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.matvec(x);
        g.iter_mut().zip(&self.b).for_each(|(g, b)| *g -= b);
        g
    }

    fn hess_vec(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
        self.a.matvec(v)
    }

    fn hess_diag(&self, _x: &[f64]) -> Vec<f64> {
        self.a.diagonal()
    }

    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        check_dense(self.dim())?;
        Ok(self.a.clone())
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// `ln Σ exp(c_jᵀx − b_j) + ½ Σ (c_jᵀx)² + γ/2 ‖x‖²`.
#[derive(Debug, Clone)]
pub struct LogSumExpObjective {
    dim: usize,
    /// `c_j`, one row per term.
    c: Vec<Vec<f64>>,
    b: Vec<f64>,
    gamma: f64,
    constants: Constants,
}

/// Per-point quantities shared by gradient and Hessian formulas.
struct SoftmaxAt {
    /// `c_jᵀx`
    cx: Vec<f64>,
    pi: Vec<f64>,
    /// `Σ π_j c_j`
    g: Vec<f64>,
    log_sum: f64,
}

impl LogSumExpObjective {
    pub fn new(dim: usize, c: Vec<Vec<f64>>, b: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        if c.is_empty() || c.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len().max(1),
                found: b.len(),
            });
        }
        if let Some(bad) = c.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let lip_l = 2.0 * lambda_max_of_rows(&c, dim)? + gamma;
        Ok(LogSumExpObjective {
            dim,
            c,
            b,
            gamma,
            constants: Constants {
                mu: gamma,
                lip_l,
                self_concordant_m: 2.0,
            },
        })
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn softmax_at(&self, x: &[f64]) -> SoftmaxAt {
        let cx: Vec<f64> = self.c.iter().map(|cj| dot(cj, x)).collect();
        let z: Vec<f64> = cx.iter().zip(&self.b).map(|(a, b)| a - b).collect();
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut pi: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        let mut g = vec![0.0; self.dim];
        for (cj, p) in self.c.iter().zip(&pi) {
            crate::linalg::axpy(*p, cj, &mut g);
        }
        SoftmaxAt {
            cx,
            pi,
            g,
            log_sum: zmax + total.ln(),
        }
    }
}

impl Objective for LogSumExpObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sm = self.softmax_at(x);
        sm.log_sum + 0.5 * dot(&sm.cx, &sm.cx) + 0.5 * self.gamma * dot(x, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let sm = self.softmax_at(x);
        let mut grad = sm.g;
        for (cj, t) in self.c.iter().zip(&sm.cx) {
            crate::linalg::axpy(*t, cj, &mut grad);
        }
        crate::linalg::axpy(self.gamma, x, &mut grad);
        grad
    }

    fn hess_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let sm = self.softmax_at(x);
        let mut out: Vec<f64> = v.iter().map(|vi| self.gamma * vi).collect();
        for (cj, p) in self.c.iter().zip(&sm.pi) {
            crate::linalg::axpy((p + 1.0) * dot(cj, v), cj, &mut out);
        }
        crate::linalg::axpy(-dot(&sm.g, v), &sm.g, &mut out);
        out
    }

    fn hess_diag(&self, x: &[f64]) -> Vec<f64> {
        let sm = self.softmax_at(x);
        let mut out = vec![self.gamma; self.dim];
        for (cj, p) in self.c.iter().zip(&sm.pi) {
            for (o, c) in out.iter_mut().zip(cj) {
                *o += (p + 1.0) * c * c;
            }
        }
        for (o, g) in out.iter_mut().zip(&sm.g) {
            *o -= g * g;
        }
        out
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        check_dense(self.dim)?;
        let sm = self.softmax_at(x);
        let mut h = SymMatrix::scaled_identity(self.dim, self.gamma);
        for (cj, p) in self.c.iter().zip(&sm.pi) {
            h.add_rank1(p + 1.0, cj);
        }
        h.add_rank1(-1.0, &sm.g);
        Ok(h)
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// Synthetic log-sum-exp instance whose unique minimizer is the origin.
///
/// `ĉ_j` entries (term by term) come from stream 0 of the seed and `b_j` from
/// stream 1, all uniform on `[−1, 1]`; then `c_j = ĉ_j − Σ_i π_i(0) ĉ_i`.
pub fn make_logsumexp_synthetic(d: usize, m: usize, gamma: f64, seed: u64) -> Result<LogSumExpObjective> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidParameter("d and m must be positive".into()));
    }
    let root = RngState::from_seed(seed);
    let mut rng = root.split(0);
    let mut c_hat = vec![vec![0.0; d]; m];
    for row in c_hat.iter_mut() {
        for v in row.iter_mut() {
            let (x, next) = rng.uniform(-1.0, 1.0);
            rng = next;
            *v = x;
        }
    }
    let mut rng = root.split(1);
    let mut b = vec![0.0; m];
    for v in b.iter_mut() {
        let (x, next) = rng.uniform(-1.0, 1.0);
        rng = next;
        *v = x;
    }
    // ∇f̂(0) = Σ π_j(0) ĉ_j with π_j(0) ∝ exp(−b_j)
    let bmin = b.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = b.iter().map(|bj| (bmin - bj).exp()).collect();
    let wsum: f64 = w.iter().sum();
    let mut shift = vec![0.0; d];
    for (row, wj) in c_hat.iter().zip(&w) {
        crate::linalg::axpy(wj / wsum, row, &mut shift);
    }
    let c: Vec<Vec<f64>> = c_hat
        .into_iter()
        .map(|row| row.iter().zip(&shift).map(|(a, s)| a - s).collect())
        .collect();
    LogSumExpObjective::new(d, c, b, gamma)
}

/// `Σ ln(1 + exp(−y_i wᵀx_i)) + γ/2 ‖w‖²` over dense samples.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    dim: usize,
    samples: Vec<Vec<f64>>,
    labels: Vec<f64>,
    gamma: f64,
    constants: Constants,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LogisticObjective {
    /// `labels` must be ±1. The strong self-concordance constant defaults to
    /// 0, which turns the correction step off.
    pub fn new(dim: usize, samples: Vec<Vec<f64>>, labels: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        if samples.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter(format!("labels must be +1 or -1, got {y}")));
        }
        let lip_l = lambda_max_of_rows(&samples, dim)? / 4.0 + gamma;
        Ok(LogisticObjective {
            dim,
            samples,
            labels,
            gamma,
            constants: Constants {
                mu: gamma,
                lip_l,
                self_concordant_m: 0.0,
            },
        })
    }

    pub fn from_sparse(samples: &[SparseSample], dim: usize, gamma: f64) -> Result<Self> {
        let mut rows = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for s in samples {
            let mut row = vec![0.0; dim];
            for &(idx, v) in &s.features {
                if idx == 0 || idx > dim {
                    return Err(Error::InvalidParameter(format!(
                        "feature index {idx} outside 1..={dim}"
                    )));
                }
                row[idx - 1] = v;
            }
            rows.push(row);
            labels.push(s.label);
        }
        Self::new(dim, rows, labels, gamma)
    }

    pub fn with_self_concordance(mut self, m_const: f64) -> Self {
        self.constants.self_concordant_m = m_const;
        self
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// `y_i wᵀx_i` for every sample.
    fn margins(&self, w: &[f64]) -> Vec<f64> {
        self.samples
            .iter()
            .zip(&self.labels)
            .map(|(x, y)| y * dot(x, w))
            .collect()
    }

    /// Hessian weights `σ(t)(1 − σ(t))`.
    fn curvature(&self, w: &[f64]) -> Vec<f64> {
        self.margins(w)
            .into_iter()
            .map(|t| sigmoid(t) * sigmoid(-t))
            .collect()
    }
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> f64 {
        let loss: f64 = self.margins(w).into_iter().map(|t| softplus(-t)).sum();
        loss + 0.5 * self.gamma * dot(w, w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = w.iter().map(|v| self.gamma * v).collect();
        for ((x, y), t) in self.samples.iter().zip(&self.labels).zip(self.margins(w)) {
            crate::linalg::axpy(-y * sigmoid(-t), x, &mut g);
        }
        g
    }

    fn hess_vec(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|vi| self.gamma * vi).collect();
        for (x, s) in self.samples.iter().zip(self.curvature(w)) {
            crate::linalg::axpy(s * dot(x, v), x, &mut out);
        }
        out
    }

    fn hess_diag(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![self.gamma; self.dim];
        for (x, s) in self.samples.iter().zip(self.curvature(w)) {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += s * xi * xi;
            }
        }
        out
    }

    fn hessian(&self, w: &[f64]) -> Result<SymMatrix> {
        check_dense(self.dim)?;
        let mut h = SymMatrix::scaled_identity(self.dim, self.gamma);
        for (x, s) in self.samples.iter().zip(self.curvature(w)) {
            h.add_rank1(s, x);
        }
        Ok(h)
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// Synthetic binary classification data: features uniform on `[−1, 1]`,
/// labels from the sign of a random linear score with 10% label noise.
pub fn make_logistic_synthetic(d: usize, n: usize, gamma: f64, seed: u64) -> Result<LogisticObjective> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let root = RngState::from_seed(seed);
    let (w_true, _) = sample_sphere(d, root.split(0));
    let mut rng = root.split(1);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0.0; d];
        for v in row.iter_mut() {
            let (x, next) = rng.uniform(-1.0, 1.0);
            rng = next;
            *v = x;
        }
        let (flip, next) = rng.next_f64();
        rng = next;
        let mut y = if dot(&row, &w_true) >= 0.0 { 1.0 } else { -1.0 };
        if flip < 0.1 {
            y = -y;
        }
        rows.push(row);
        labels.push(y);
    }
    LogisticObjective::new(d, rows, labels, gamma)
}

/// One line of a LIBSVM file.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSample {
    pub label: f64,
    /// 1-based `(index, value)` pairs, strictly increasing in index.
    pub features: Vec<(usize, f64)>,
}

fn parse_label(tok: &str) -> Option<f64> {
    match tok {
        "1" | "+1" | "1.0" | "+1.0" => Some(1.0),
        "-1" | "-1.0" | "0" | "0.0" => Some(-1.0),
        _ => None,
    }
}

/// Reads binary-classification data in LIBSVM text format.
///
/// Returns the samples and the dimension, which is `expected_dim` when given
/// and the largest index seen otherwise.
pub fn parse_libsvm<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<(Vec<SparseSample>, usize)> {
    let mut samples = Vec::new();
    let mut max_idx = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut toks = content.split_whitespace();
        let label_tok = toks.next().expect("non-empty line has a token");
        let label = parse_label(label_tok).ok_or_else(|| err(format!("unsupported label `{label_tok}`")))?;
        let mut features = Vec::new();
        let mut last = 0usize;
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, found `{tok}`")))?;
            if idx == "qid" {
                return Err(err("query-id fields are not supported".into()));
            }
            let idx: usize = idx.parse().map_err(|_| err(format!("bad feature index `{idx}`")))?;
            let val: f64 = val.parse().map_err(|_| err(format!("bad feature value `{val}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} does not increase (previous {last})")));
            }
            if !val.is_finite() {
                return Err(err(format!("non-finite value at index {idx}")));
            }
            if let Some(d) = expected_dim {
                if idx > d {
                    return Err(err(format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            features.push((idx, val));
        }
        max_idx = max_idx.max(last);
        samples.push(SparseSample { label, features });
    }
    Ok((samples, expected_dim.unwrap_or(max_idx)))
}

/// Random SPD matrix `Q diag(λ) Qᵀ` with eigenvalues log-spaced from 1 to
/// `kappa` and `Q` from Gram–Schmidt on a Gaussian matrix.
pub fn random_spd(d: usize, kappa: f64, seed: u64) -> Result<SymMatrix> {
    if d == 0 || !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "random_spd needs d >= 1 and kappa >= 1, got d = {d}, kappa = {kappa}"
        )));
    }
    let mut rng = RngState::from_seed(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let (mut v, next) = crate::directions::sample_gaussian(d, rng);
        rng = next;
        for q in &basis {
            let c = dot(q, &v);
            crate::linalg::axpy(-c, q, &mut v);
        }
        let n = crate::linalg::norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    let mut a = SymMatrix::zeros(d);
    for (i, q) in basis.iter().enumerate() {
        let t = if d == 1 { 0.0 } else { i as f64 / (d - 1) as f64 };
        a.add_rank1(kappa.powf(t), q);
    }
    Ok(a)
}

/// Uniform draw from the sphere of `radius` around the origin.
pub fn initial_point_on_sphere(d: usize, radius: f64, seed: u64) -> Vec<f64> {
    let (mut u, _) = sample_sphere(d, RngState::from_seed(seed));
    u.iter_mut().for_each(|x| *x *= radius);
    u
}
