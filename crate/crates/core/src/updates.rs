//! Broyden-family Hessian-approximation updates.
//!
//! Each update is written in terms of the direction `u`, the products `G·u`
//! and `A·u`, and nothing else from the target `A`. That lets the solvers
//! feed Hessian-vector products instead of dense Hessians. The dense
//! free functions at the bottom of this module wrap the same kernels for
//! callers that do hold `A`.
//!
//! The degenerate branch (`G·u = A·u` leaves `G` unchanged) needs a
//! floating-point threshold. We skip when
//! `uᵀ(G − A)u ≤ skip_tol · scale · ‖u‖²` or `‖(G − A)u‖ ≤ skip_tol · ‖G·u‖`
//! for rules with an SR1 component, and additionally when
//! `‖(G − A)u‖ ≤ skip_tol · scale · ‖u‖` for the interpolated family.
//! `scale` is `‖G − A‖_F` in the dense functions and `tr(G)` (an upper
//! bound on it whenever `A ⪯ G`) inside the solvers.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, inverse_sqrt, norm, sym_eigen, SquareMatrix, SymMatrix, DEFAULT_PIVOT_TOL};

pub const DEFAULT_SKIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    /// Convex combination `τ·DFP + (1 − τ)·SR1`, `τ ∈ [0, 1]`.
    Broyden { tau: f64 },
    Sr1,
    Bfgs,
    Dfp,
}

impl UpdateRule {
    pub fn broyden(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "Broyden parameter must lie in [0, 1], got {tau}"
            )));
        }
        Ok(UpdateRule::Broyden { tau })
    }

    pub fn name(&self) -> String {
        match self {
            UpdateRule::Broyden { tau } => format!("broyden:{tau}"),
            UpdateRule::Sr1 => "sr1".into(),
            UpdateRule::Bfgs => "bfgs".into(),
            UpdateRule::Dfp => "dfp".into(),
        }
    }

    /// Accepts `sr1`, `bfgs`, `dfp` and `broyden:<tau>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "sr1" => Ok(UpdateRule::Sr1),
            "bfgs" => Ok(UpdateRule::Bfgs),
            "dfp" => Ok(UpdateRule::Dfp),
            _ => {
                let tau = s
                    .strip_prefix("broyden:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown update rule `{s}`")))?;
                UpdateRule::broyden(tau)
            }
        }
    }

    fn has_sr1_part(&self) -> bool {
        match *self {
            UpdateRule::Sr1 => true,
            UpdateRule::Broyden { tau } => tau < 1.0,
            UpdateRule::Bfgs | UpdateRule::Dfp => false,
        }
    }

    /// SR1, spelled either way.
    pub fn is_pure_sr1(&self) -> bool {
        matches!(*self, UpdateRule::Sr1 | UpdateRule::Broyden { tau: 0.0 })
    }
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// Whether an update changed the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Applied,
    Skipped,
}

/// Scalars and vectors shared by every formula for one direction.
struct Kernel<'a> {
    u: &'a [f64],
    gu: Vec<f64>,
    au: &'a [f64],
    /// `(G − A)u`
    r: Vec<f64>,
    /// `uᵀAu`
    s: f64,
    /// `uᵀGu`
    q: f64,
    /// `uᵀ(G − A)u`
    ur: f64,
}

impl<'a> Kernel<'a> {
    fn new(g: &SymMatrix, u: &'a [f64], au: &'a [f64]) -> Result<Self> {
        let d = g.dim();
        for len in [u.len(), au.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: len,
                });
            }
        }
        if u.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroDirection);
        }
        if !u.iter().chain(au).all(|v| v.is_finite()) || !g.is_finite() {
            return Err(Error::NonFinite("update inputs"));
        }
        let gu = g.matvec(u);
        let r: Vec<f64> = gu.iter().zip(au).map(|(x, y)| x - y).collect();
        let s = dot(u, au);
        let q = dot(u, &gu);
        let ur = dot(u, &r);
        if !(s > 0.0) {
            return Err(Error::NotPositiveDefinite { index: 0, pivot: s });
        }
        Ok(Kernel {
            u,
            gu,
            au,
            r,
            s,
            q,
            ur,
        })
    }

    fn degenerate(&self, rule: UpdateRule, skip_tol: f64, scale: f64) -> bool {
        let uu = dot(self.u, self.u);
        if rule.has_sr1_part() {
            // `G·u = A·u` to working precision: `G − A` is rounding noise
            // along `u` and `1/uᵀ(G − A)u` would only amplify it.
            if self.ur <= skip_tol * scale * uu || norm(&self.r) <= skip_tol * norm(&self.gu) {
                return true;
            }
        }
        matches!(rule, UpdateRule::Broyden { .. })
            && norm(&self.r) <= skip_tol * scale * uu.sqrt()
    }

    fn sr1_primal(&self, g: &mut SymMatrix, weight: f64) {
        g.add_rank1(-weight / self.ur, &self.r);
    }

    fn dfp_primal(&self, g: &mut SymMatrix, weight: f64) {
        g.add_rank2(-weight / self.s, self.au, &self.gu);
        g.add_rank1(weight * (self.q / self.s + 1.0) / self.s, self.au);
    }

    fn primal(&self, g: &SymMatrix, rule: UpdateRule) -> SymMatrix {
        let mut out = g.clone();
        match rule {
            UpdateRule::Sr1 => self.sr1_primal(&mut out, 1.0),
            UpdateRule::Dfp => self.dfp_primal(&mut out, 1.0),
            UpdateRule::Bfgs => {
                out.add_rank1(-1.0 / self.q, &self.gu);
                out.add_rank1(1.0 / self.s, self.au);
            }
            UpdateRule::Broyden { tau } => {
                if tau > 0.0 {
                    self.dfp_primal(&mut out, tau);
                }
                if tau < 1.0 {
                    self.sr1_primal(&mut out, 1.0 - tau);
                }
            }
        }
        out.symmetrize();
        out
    }

    fn inverse(&self, h: &SymMatrix, rule: UpdateRule) -> SymMatrix {
        let hv = h.matvec(self.au);
        let a_h_a = dot(self.au, &hv);
        let mut out = h.clone();
        match rule {
            UpdateRule::Sr1 | UpdateRule::Broyden { tau: 0.0 } => {
                // H + (I − HA)u uᵀ(I − AH) / uᵀ(A − AHA)u
                let w: Vec<f64> = self.u.iter().zip(&hv).map(|(a, b)| a - b).collect();
                let den = dot(self.au, &w);
                out.add_rank1(1.0 / den, &w);
            }
            UpdateRule::Bfgs => {
                // (I − u uᵀA/s) H (I − A u uᵀ/s) + u uᵀ/s, expanded
                out.add_rank2(-1.0 / self.s, self.u, &hv);
                out.add_rank1(a_h_a / (self.s * self.s) + 1.0 / self.s, self.u);
            }
            UpdateRule::Dfp | UpdateRule::Broyden { tau: 1.0 } => {
                out.add_rank1(-1.0 / a_h_a, &hv);
                out.add_rank1(1.0 / self.s, self.u);
            }
            UpdateRule::Broyden { tau } => {
                // Primal update is G + U C Uᵀ with U = [Au, r]. Using r rather
                // than Gu keeps the basis well conditioned as G·u approaches
                // A·u. Woodbury in the form H − (HU) C (I + UᵀHU C)⁻¹ (HU)ᵀ
                // stays valid when C is singular; H·r = u − H·Au.
                let (s, ur) = (self.s, self.ur);
                let w: Vec<f64> = self.u.iter().zip(&hv).map(|(a, b)| a - b).collect();
                let c_aa = tau * ur / (s * s);
                let c_ar = -tau / s;
                let c_rr = -(1.0 - tau) / ur;
                let c = [[c_aa, c_ar], [c_ar, c_rr]];
                let a_h_r = dot(self.au, &w);
                let uhu = [[a_h_a, a_h_r], [a_h_r, dot(&self.r, &w)]];
                let mut m = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = (i == j) as u8 as f64 + uhu[i][0] * c[0][j] + uhu[i][1] * c[1][j];
                    }
                }
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let minv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
                let mut k = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        k[i][j] = c[i][0] * minv[0][j] + c[i][1] * minv[1][j];
                    }
                }
                let k_off = 0.5 * (k[0][1] + k[1][0]);
                out.add_rank1(-k[0][0], &hv);
                out.add_rank1(-k[1][1], &w);
                out.add_rank2(-k_off, &hv, &w);
            }
        }
        out.symmetrize();
        out
    }

    /// `L₊ = L − (L·Au − v)uᵀ / uᵀAu` with `v = (‖u‖_A / ‖ũ‖)·ũ`.
    fn factor(&self, l: &SquareMatrix, u_tilde: &[f64]) -> Result<SquareMatrix> {
        let nt = norm(u_tilde);
        if nt == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let coef = self.s.sqrt() / nt;
        let mut diff = l.matvec(self.au);
        for (dv, t) in diff.iter_mut().zip(u_tilde) {
            *dv -= coef * t;
        }
        let mut out = l.clone();
        out.add_outer(-1.0 / self.s, &diff, self.u);
        Ok(out)
    }
}

/// A Hessian approximation `G`, its inverse `H`, and optionally a square
/// factor `L` with `LᵀL = H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxState {
    g: SymMatrix,
    h: SymMatrix,
    l: Option<SquareMatrix>,
}

/// One update request. `u_tilde` is the unscaled direction when `u = Lᵀũ`.
#[derive(Debug, Clone, Copy)]
pub struct UpdateStep<'a> {
    pub u: &'a [f64],
    pub au: &'a [f64],
    pub u_tilde: Option<&'a [f64]>,
}

impl ApproxState {
    pub fn new(g: SymMatrix) -> Result<Self> {
        let h = cholesky(&g, DEFAULT_PIVOT_TOL)?.inverse();
        Ok(ApproxState { g, h, l: None })
    }

    /// Like [`ApproxState::new`] but also keeps `L = G^{-1/2}`.
    pub fn with_factor(g: SymMatrix) -> Result<Self> {
        let l = inverse_sqrt(&g)?;
        let mut st = Self::new(g)?;
        st.l = Some(l);
        Ok(st)
    }

    /// Picks the exact diagonal construction when `g` is diagonal, and a
    /// Cholesky inverse (plus eigen-based factor) otherwise.
    pub fn from_matrix(g: SymMatrix, with_factor: bool) -> Result<Self> {
        let d = g.dim();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || g.get(i, j) == 0.0));
        if !diagonal {
            return if with_factor { Self::with_factor(g) } else { Self::new(g) };
        }
        let diag = g.diagonal();
        if let Some((index, &pivot)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NotPositiveDefinite { index, pivot });
        }
        let h = SymMatrix::from_diag(&diag.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
        let l = with_factor.then(|| {
            let mut l = SquareMatrix::zeros(d);
            for (i, v) in diag.iter().enumerate() {
                l.add_outer(1.0 / v.sqrt(), &crate::directions::unit_vector(d, i), &crate::directions::unit_vector(d, i));
            }
            l
        });
        Ok(ApproxState { g, h, l })
    }

    /// `G = s·I` with exact inverse (and factor `I/√s` when requested).
    pub fn scaled_identity(dim: usize, s: f64, with_factor: bool) -> Self {
        ApproxState {
            g: SymMatrix::scaled_identity(dim, s),
            h: SymMatrix::scaled_identity(dim, 1.0 / s),
            l: with_factor.then(|| SquareMatrix::scaled_identity(dim, 1.0 / s.sqrt())),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn g(&self) -> &SymMatrix {
        &self.g
    }

    pub fn h(&self) -> &SymMatrix {
        &self.h
    }

    pub fn factor(&self) -> Option<&SquareMatrix> {
        self.l.as_ref()
    }

    /// Correction step: `G ← (1 + M r) G`, `H ← H / (1 + M r)`,
    /// `L ← L / √(1 + M r)`.
    pub fn correct_in_place(&mut self, m_const: f64, r: f64) {
        let c = 1.0 + m_const * r;
        if c == 1.0 {
            return;
        }
        self.g.scale_in_place(c);
        self.h.scale_in_place(1.0 / c);
        if let Some(l) = self.l.as_mut() {
            l.scale_in_place(1.0 / c.sqrt());
        }
    }

    /// Applies `rule` along `step.u`, updating `G`, `H` and (for BFGS with a
    /// scaled direction) `L`.
    pub fn update(
        &mut self,
        rule: UpdateRule,
        step: UpdateStep<'_>,
        skip_tol: f64,
        scale: f64,
    ) -> Result<UpdateOutcome> {
        if self.l.is_some() && !(rule == UpdateRule::Bfgs && step.u_tilde.is_some()) {
            return Err(Error::InvalidParameter(
                "a maintained factor can only follow BFGS updates along scaled directions".into(),
            ));
        }
        let kernel = Kernel::new(&self.g, step.u, step.au)?;
        if kernel.degenerate(rule, skip_tol, scale) {
            return Ok(UpdateOutcome::Skipped);
        }
        let g = kernel.primal(&self.g, rule);
        let h = kernel.inverse(&self.h, rule);
        let l = match (&self.l, step.u_tilde) {
            (Some(l), Some(t)) => Some(kernel.factor(l, t)?),
            _ => None,
        };
        if !g.is_finite() || !h.is_finite() || l.as_ref().is_some_and(|l| !l.is_finite()) {
            return Err(Error::NonFinite("approximation update"));
        }
        self.g = g;
        self.h = h;
        self.l = l;
        Ok(UpdateOutcome::Applied)
    }
}

/// Factor `W` of a fixed positive semidefinite gap `G − A = WWᵀ`.
///
/// Against a fixed target, SR1 along `u` is `W ← W(I − zzᵀ/zᵀz)` with
/// `z = Wᵀu`. That is an orthogonal projection, so the gap stays PSD in
/// floating point. The rank-one form `G − rrᵀ/uᵀr` instead scales any
/// rounding-level negative part of `G − A` by about `1/(vᵀu)²` on the step
/// that removes the last remaining direction `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapFactor {
    /// `Wᵀ`, so that rows are the columns of `W`.
    wt: SquareMatrix,
}

impl GapFactor {
    /// Factors `g − a`; eigenvalues below zero (rounding only, when
    /// `a ⪯ g`) are dropped.
    pub fn new(g: &SymMatrix, a: &SymMatrix) -> Result<Self> {
        let diff = g.sub(a)?;
        let d = diff.dim();
        let (values, vectors) = sym_eigen(&diff, 100, 1e-15)?;
        let mut data = vec![0.0; d * d];
        for (k, &v) in values.iter().enumerate() {
            let c = v.max(0.0).sqrt();
            for i in 0..d {
                data[k * d + i] = c * vectors.get(i, k);
            }
        }
        Ok(GapFactor {
            wt: SquareMatrix::from_row_major(d, data)?,
        })
    }

    /// `WWᵀ`
    pub fn gap(&self) -> SymMatrix {
        self.wt.gram()
    }
}

impl ApproxState {
    /// SR1 step toward the fixed target `a`, with the gap carried by `gap`.
    /// `G` is rebuilt as `A + WWᵀ`; `H` follows the usual inverse formula.
    /// Skips under the same test as [`ApproxState::update`] with
    /// `scale = ‖G − A‖_F`.
    pub fn sr1_fixed_target(
        &mut self,
        a: &SymMatrix,
        gap: &mut GapFactor,
        u: &[f64],
        au: &[f64],
        skip_tol: f64,
    ) -> Result<UpdateOutcome> {
        if self.l.is_some() {
            return Err(Error::InvalidParameter(
                "a maintained factor can only follow BFGS updates along scaled directions".into(),
            ));
        }
        if a.dim() != self.dim() || gap.wt.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: if a.dim() != self.dim() { a.dim() } else { gap.wt.dim() },
            });
        }
        let kernel = Kernel::new(&self.g, u, au)?;
        let z = gap.wt.matvec(u);
        let ur = dot(&z, &z);
        let scale = gap.gap().frobenius_norm();
        if ur <= skip_tol * scale * dot(u, u) {
            return Ok(UpdateOutcome::Skipped);
        }
        let r = gap.wt.transpose_matvec(&z);
        let mut wt = gap.wt.clone();
        wt.add_outer(-1.0 / ur, &z, &r);
        let mut g = a.add(&wt.gram())?;
        g.symmetrize();
        let h = kernel.inverse(&self.h, UpdateRule::Sr1);
        if !g.is_finite() || !h.is_finite() || !wt.is_finite() {
            return Err(Error::NonFinite("approximation update"));
        }
        gap.wt = wt;
        self.g = g;
        self.h = h;
        Ok(UpdateOutcome::Applied)
    }
}

/// Value-returning form of [`ApproxState::correct_in_place`].
pub fn correct(state: &ApproxState, m_const: f64, r: f64) -> ApproxState {
    let mut out = state.clone();
    out.correct_in_place(m_const, r);
    out
}

fn dense_kernel<'a>(g: &SymMatrix, a: &SymMatrix, u: &'a [f64], au: &'a [f64]) -> Result<Kernel<'a>> {
    if a.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: a.dim(),
        });
    }
    Kernel::new(g, u, au)
}

fn gap_norm(g: &SymMatrix, a: &SymMatrix) -> Result<f64> {
    Ok(g.sub(a)?.frobenius_norm())
}

fn checked_au(a: &SymMatrix, u: &[f64]) -> Result<Vec<f64>> {
    a.try_matvec(u)
}

/// `Broyd_τ(G, A, u)`; returns `G` unchanged on the degenerate branch.
pub fn broyden_update(
    g: &SymMatrix,
    a: &SymMatrix,
    u: &[f64],
    tau: f64,
    skip_tol: f64,
) -> Result<SymMatrix> {
    let rule = UpdateRule::broyden(tau)?;
    let au = checked_au(a, u)?;
    let k = dense_kernel(g, a, u, &au)?;
    if k.degenerate(rule, skip_tol, gap_norm(g, a)?) {
        return Ok(g.clone());
    }
    Ok(k.primal(g, rule))
}

/// `G − (G − A)u uᵀ(G − A) / uᵀ(G − A)u`.
pub fn sr1_update(g: &SymMatrix, a: &SymMatrix, u: &[f64], skip_tol: f64) -> Result<SymMatrix> {
    let au = checked_au(a, u)?;
    let k = dense_kernel(g, a, u, &au)?;
    if k.degenerate(UpdateRule::Sr1, skip_tol, gap_norm(g, a)?) {
        return Ok(g.clone());
    }
    Ok(k.primal(g, UpdateRule::Sr1))
}

/// `G − G u uᵀG / uᵀGu + A u uᵀA / uᵀAu`.
pub fn bfgs_update(g: &SymMatrix, a: &SymMatrix, u: &[f64]) -> Result<SymMatrix> {
    let au = checked_au(a, u)?;
    Ok(dense_kernel(g, a, u, &au)?.primal(g, UpdateRule::Bfgs))
}

pub fn dfp_update(g: &SymMatrix, a: &SymMatrix, u: &[f64]) -> Result<SymMatrix> {
    let au = checked_au(a, u)?;
    Ok(dense_kernel(g, a, u, &au)?.primal(g, UpdateRule::Dfp))
}

/// Inverse of [`sr1_update`] maintained directly from `H = G⁻¹`. Skips when
/// the denominator `uᵀ(A − AHA)u` is at most `skip_tol · uᵀAu`.
pub fn sr1_inverse_update(h: &SymMatrix, a: &SymMatrix, u: &[f64], skip_tol: f64) -> Result<SymMatrix> {
    let au = checked_au(a, u)?;
    if h.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: h.dim(),
        });
    }
    let hv = h.matvec(&au);
    let w: Vec<f64> = u.iter().zip(&hv).map(|(a, b)| a - b).collect();
    let den = dot(&au, &w);
    if den <= skip_tol * dot(u, &au) {
        return Ok(h.clone());
    }
    let mut out = h.clone();
    out.add_rank1(1.0 / den, &w);
    out.symmetrize();
    Ok(out)
}

/// Inverse of [`bfgs_update`] maintained directly from `H = G⁻¹`.
pub fn bfgs_inverse_update(h: &SymMatrix, a: &SymMatrix, u: &[f64]) -> Result<SymMatrix> {
    let au = checked_au(a, u)?;
    if h.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: h.dim(),
        });
    }
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let s = dot(u, &au);
    let hv = h.matvec(&au);
    let mut out = h.clone();
    out.add_rank2(-1.0 / s, u, &hv);
    out.add_rank1(dot(&au, &hv) / (s * s) + 1.0 / s, u);
    out.symmetrize();
    Ok(out)
}

/// Inverse of `Broyd_τ(G, A, u)` from `H = G⁻¹` (needs `G` for `Gu`).
pub fn broyden_inverse_update(
    h: &SymMatrix,
    g: &SymMatrix,
    a: &SymMatrix,
    u: &[f64],
    tau: f64,
    skip_tol: f64,
) -> Result<SymMatrix> {
    let rule = UpdateRule::broyden(tau)?;
    let au = checked_au(a, u)?;
    let k = dense_kernel(g, a, u, &au)?;
    if k.degenerate(rule, skip_tol, gap_norm(g, a)?) {
        return Ok(h.clone());
    }
    Ok(k.inverse(h, rule))
}

/// Factor update for BFGS along `u = Lᵀũ`: returns `L₊` with
/// `L₊ᵀL₊ = [BFGS(G, A, u)]⁻¹` whenever `LᵀL = G⁻¹`.
pub fn bfgs_factor_update(l: &SquareMatrix, a: &SymMatrix, u: &[f64], u_tilde: &[f64]) -> Result<SquareMatrix> {
    if norm(u_tilde) == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let au = checked_au(a, u)?;
    let s = dot(u, &au);
    if !(s > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: s });
    }
    let coef = s.sqrt() / norm(u_tilde);
    let mut diff = l.matvec(&au);
    for (dv, t) in diff.iter_mut().zip(u_tilde) {
        *dv -= coef * t;
    }
    let mut out = l.clone();
    out.add_outer(-1.0 / s, &diff, u);
    Ok(out)
}
