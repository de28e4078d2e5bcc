//! Closed-form reference curves for the convergence measures.

use crate::error::{Error, Result};

/// Method families that have their own starting-moment and superlinear
/// contraction constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GreedyBroyden,
    GreedyBfgs,
    GreedySr1,
    RandomBroyden,
    RandomBfgs,
    RandomSr1,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::GreedyBroyden => "greedy_broyden",
            Method::GreedyBfgs => "greedy_bfgs",
            Method::GreedySr1 => "greedy_sr1",
            Method::RandomBroyden => "random_broyden",
            Method::RandomBfgs => "random_bfgs",
            Method::RandomSr1 => "random_sr1",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Method::GreedyBroyden,
            Method::GreedyBfgs,
            Method::GreedySr1,
            Method::RandomBroyden,
            Method::RandomBfgs,
            Method::RandomSr1,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }

    /// Per-step base `q` of the superlinear factor `q^{k(k−1)/2}`.
    pub fn superlinear_base(&self, d: f64, kappa: f64) -> f64 {
        match self {
            Method::GreedyBroyden => 1.0 - 1.0 / (d * kappa),
            Method::GreedyBfgs | Method::GreedySr1 => 1.0 - 1.0 / d,
            Method::RandomBroyden => 1.0 - 1.0 / (d * kappa + 1.0),
            Method::RandomBfgs | Method::RandomSr1 => 1.0 - 1.0 / (d + 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeKind {
    /// `(1 − 1/(dκ))^k σ₀`
    BroydenMatrix,
    /// `max(0, 1 − k/d) τ₀`
    Sr1Matrix,
    /// `(1 − 1/d)^k σ₀`
    BfgsMatrix,
    /// Bound on `λ_{k+1}/λ_k`: `max(0, 1 − k/d) τ₀/μ`
    Sr1QuadraticRatio,
    /// Bound on `λ_{k+1}/λ_k`: `(1 − 1/d)^k σ₀`
    BfgsQuadraticRatio,
    /// `2d²κ²σ₀/δ · (1 − 1/(dκ+1))^k`, holding with probability `1 − δ`.
    RandomBroydenHighProb,
    /// Linear phase `(1 − 1/(2κ))^k λ₀` up to `k₀`, then the superlinear
    /// factor `q^{j(j−1)/2} (1/2)^j` on top of it.
    TwoPhase(Method),
}

impl EnvelopeKind {
    pub fn name(&self) -> String {
        match self {
            EnvelopeKind::BroydenMatrix => "broyden_matrix".into(),
            EnvelopeKind::Sr1Matrix => "sr1_matrix".into(),
            EnvelopeKind::BfgsMatrix => "bfgs_matrix".into(),
            EnvelopeKind::Sr1QuadraticRatio => "sr1_quadratic_ratio".into(),
            EnvelopeKind::BfgsQuadraticRatio => "bfgs_quadratic_ratio".into(),
            EnvelopeKind::RandomBroydenHighProb => "random_broyden_high_prob".into(),
            EnvelopeKind::TwoPhase(m) => format!("two_phase:{}", m.name()),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s {
            "broyden_matrix" => EnvelopeKind::BroydenMatrix,
            "sr1_matrix" => EnvelopeKind::Sr1Matrix,
            "bfgs_matrix" => EnvelopeKind::BfgsMatrix,
            "sr1_quadratic_ratio" => EnvelopeKind::Sr1QuadraticRatio,
            "bfgs_quadratic_ratio" => EnvelopeKind::BfgsQuadraticRatio,
            "random_broyden_high_prob" => EnvelopeKind::RandomBroydenHighProb,
            _ => s
                .strip_prefix("two_phase:")
                .and_then(Method::parse)
                .map(EnvelopeKind::TwoPhase)
                .ok_or_else(|| Error::Config(format!("unknown envelope kind `{s}`")))?,
        };
        Ok(kind)
    }

    /// Which measure the envelope bounds.
    pub fn measure(&self) -> &'static str {
        match self {
            EnvelopeKind::Sr1Matrix => "tau",
            EnvelopeKind::BroydenMatrix | EnvelopeKind::BfgsMatrix | EnvelopeKind::RandomBroydenHighProb => "sigma",
            EnvelopeKind::Sr1QuadraticRatio | EnvelopeKind::BfgsQuadraticRatio => "lambda_ratio",
            EnvelopeKind::TwoPhase(_) => "lambda",
        }
    }
}

/// Inputs to an envelope. Only the fields a kind uses must be set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvelopeParams {
    pub d: usize,
    pub kappa: f64,
    pub sigma0: f64,
    pub tau0: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub delta: f64,
    /// Length of the linear phase; defaults to `⌈K₂⌉` of the method.
    pub k0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEnvelope {
    pub kind: EnvelopeKind,
    /// Bound at `k = 0, 1, …`.
    pub values: Vec<f64>,
}

fn need(name: &str, v: f64, positive: bool) -> Result<f64> {
    let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
    if !ok {
        return Err(Error::InvalidParameter(format!("envelope parameter {name} = {v}")));
    }
    Ok(v)
}

/// Iteration after which the superlinear bound is below the starting value.
pub fn starting_moment(method: Method, d: usize, kappa: f64, delta: f64) -> f64 {
    let d = d as f64;
    match method {
        Method::GreedyBfgs => 2.0 * d * (2.0 * d * kappa).ln() + 1.0,
        Method::GreedySr1 => 2.0 * d * (2.0 * d * kappa * kappa).ln() + 1.0,
        Method::GreedyBroyden => 2.0 * d * kappa * (2.0 * d * kappa).ln() + 1.0,
        Method::RandomBroyden => {
            2.0 * (d * kappa + 1.0) * (4.0 * d.powi(3) * kappa.powi(3) / delta).ln() + 1.0
        }
        Method::RandomBfgs => 2.0 * (d + 1.0) * (4.0 * d.powi(3) * kappa / delta).ln() + 1.0,
        Method::RandomSr1 => 2.0 * (d + 1.0) * (4.0 * d.powi(3) * kappa * kappa / delta).ln() + 1.0,
    }
}

/// `(1 − 1/d)(1 + Mr)²(σ + 2dMr)`: one-step bound on the next `σ` for
/// scaled BFGS on a general objective.
pub fn sigma_recursion_bound(d: usize, sigma: f64, m_const: f64, r: f64) -> f64 {
    let d = d as f64;
    let c = 1.0 + m_const * r;
    (1.0 - 1.0 / d) * c * c * (sigma + 2.0 * d * m_const * r)
}

/// Broyden-family version of [`sigma_recursion_bound`] with contraction
/// `1 − 1/(dκ)`.
pub fn broyden_sigma_recursion_bound(d: usize, kappa: f64, sigma: f64, m_const: f64, r: f64) -> f64 {
    let df = d as f64;
    let c = 1.0 + m_const * r;
    (1.0 - 1.0 / (df * kappa)) * c * c * (sigma + 2.0 * df * m_const * r)
}

/// `(1 − 1/d)(1 + Mr)²(η + 2Mr)` for the SR1 trace ratio `η`.
pub fn eta_recursion_bound(d: usize, eta: f64, m_const: f64, r: f64) -> f64 {
    let c = 1.0 + m_const * r;
    (1.0 - 1.0 / d as f64) * c * c * (eta + 2.0 * m_const * r)
}

/// Evaluates `kind` at `k = 0..=steps`.
pub fn bound_envelope(kind: EnvelopeKind, params: &EnvelopeParams, steps: usize) -> Result<BoundEnvelope> {
    if params.d == 0 {
        return Err(Error::InvalidParameter("envelope dimension must be positive".into()));
    }
    let d = params.d as f64;
    let ks = 0..=steps;
    let values: Vec<f64> = match kind {
        EnvelopeKind::BroydenMatrix => {
            let kappa = need("kappa", params.kappa, true)?;
            let s0 = need("sigma0", params.sigma0, false)?;
            let q = 1.0 - 1.0 / (d * kappa);
            ks.map(|k| q.powi(k as i32) * s0).collect()
        }
        EnvelopeKind::Sr1Matrix => {
            let t0 = need("tau0", params.tau0, false)?;
            ks.map(|k| (1.0 - k as f64 / d).max(0.0) * t0).collect()
        }
        EnvelopeKind::BfgsMatrix | EnvelopeKind::BfgsQuadraticRatio => {
            let s0 = need("sigma0", params.sigma0, false)?;
            let q = 1.0 - 1.0 / d;
            ks.map(|k| q.powi(k as i32) * s0).collect()
        }
        EnvelopeKind::Sr1QuadraticRatio => {
            let t0 = need("tau0", params.tau0, false)?;
            let mu = need("mu", params.mu, true)?;
            ks.map(|k| (1.0 - k as f64 / d).max(0.0) * t0 / mu).collect()
        }
        EnvelopeKind::RandomBroydenHighProb => {
            let kappa = need("kappa", params.kappa, true)?;
            let s0 = need("sigma0", params.sigma0, false)?;
            let delta = need("delta", params.delta, true)?;
            let c = 2.0 * d * d * kappa * kappa * s0 / delta;
            let q = 1.0 - 1.0 / (d * kappa + 1.0);
            ks.map(|k| c * q.powi(k as i32)).collect()
        }
        EnvelopeKind::TwoPhase(method) => {
            let kappa = need("kappa", params.kappa, true)?;
            let l0 = need("lambda0", params.lambda0, false)?;
            let k0 = match params.k0 {
                Some(k0) => k0,
                None => {
                    let delta = if matches!(method, Method::GreedyBfgs | Method::GreedySr1 | Method::GreedyBroyden) {
                        1.0
                    } else {
                        need("delta", params.delta, true)?
                    };
                    starting_moment(method, params.d, kappa, delta).ceil() as usize
                }
            };
            let lin = 1.0 - 1.0 / (2.0 * kappa);
            let q = method.superlinear_base(d, kappa);
            ks.map(|k| {
                if k <= k0 {
                    lin.powi(k as i32) * l0
                } else {
                    let j = (k - k0) as f64;
                    q.powf(j * (j - 1.0) / 2.0) * 0.5f64.powf(j) * lin.powi(k0 as i32) * l0
                }
            })
            .collect()
        }
    };
    Ok(BoundEnvelope { kind, values })
}
