//! Update-direction strategies.
//!
//! Greedy selectors return a 0-based coordinate index and break ties toward
//! the lowest index. Random samplers are pure functions of an [`RngState`].

use crate::error::{Error, Result};
use crate::linalg::{cholesky, norm, SquareMatrix, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionKind {
    GreedyBroyden,
    GreedySr1,
    /// Needs `(L A Lᵀ)⁻¹`, an O(d³) computation per step.
    GreedyBfgsTestOnly,
    RandomSphere,
    RandomGaussian,
}

impl DirectionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DirectionKind::GreedyBroyden => "greedy_broyden",
            DirectionKind::GreedySr1 => "greedy_sr1",
            DirectionKind::GreedyBfgsTestOnly => "greedy_bfgs",
            DirectionKind::RandomSphere => "random_sphere",
            DirectionKind::RandomGaussian => "random_gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "greedy_broyden" => DirectionKind::GreedyBroyden,
            "greedy_sr1" => DirectionKind::GreedySr1,
            "greedy_bfgs" => DirectionKind::GreedyBfgsTestOnly,
            "random_sphere" | "random" => DirectionKind::RandomSphere,
            "random_gaussian" => DirectionKind::RandomGaussian,
            other => return Err(Error::Config(format!("unknown direction `{other}`"))),
        })
    }

    pub fn is_random(&self) -> bool {
        matches!(self, DirectionKind::RandomSphere | DirectionKind::RandomGaussian)
    }
}

/// How each update direction is chosen.
///
/// With `scaled` set, a random draw `ũ` is mapped to `u = Lᵀũ` through the
/// factor `LᵀL = G⁻¹`; this only pairs with the BFGS rule. Greedy BFGS is
/// always scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectionStrategy {
    pub kind: DirectionKind,
    pub seed: u64,
    pub scaled: bool,
}

impl DirectionStrategy {
    pub fn new(kind: DirectionKind) -> Self {
        DirectionStrategy {
            kind,
            seed: 0,
            scaled: kind == DirectionKind::GreedyBfgsTestOnly,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scaling(mut self, scaled: bool) -> Self {
        self.scaled = scaled || self.kind == DirectionKind::GreedyBfgsTestOnly;
        self
    }

    /// Whether the approximation must carry a factor `L`.
    pub fn needs_factor(&self) -> bool {
        self.scaled
    }

    pub fn label(&self) -> String {
        if self.scaled && self.kind.is_random() {
            format!("{}_scaled", self.kind.name())
        } else {
            self.kind.name().to_string()
        }
    }
}

fn argmax_by(n: usize, mut score: impl FnMut(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..n {
        let v = score(i);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// `argmax_i G_ii / A_ii`.
pub fn greedy_broyden_dir(g_diag: &[f64], a_diag: &[f64]) -> usize {
    debug_assert_eq!(g_diag.len(), a_diag.len());
    argmax_by(g_diag.len(), |i| g_diag[i] / a_diag[i])
}

/// `argmax_i (G_ii − A_ii)`.
pub fn greedy_sr1_dir(g_diag: &[f64], a_diag: &[f64]) -> usize {
    debug_assert_eq!(g_diag.len(), a_diag.len());
    argmax_by(g_diag.len(), |i| g_diag[i] - a_diag[i])
}

/// Largest diagonal entry of the precomputed `L⁻ᵀA⁻¹L⁻¹`.
pub fn greedy_bfgs_dir(l_inv_weighted: &SymMatrix) -> usize {
    argmax_by(l_inv_weighted.dim(), |i| l_inv_weighted.get(i, i))
}

/// Greedy BFGS index computed from the factor: the diagonal of
/// `L⁻ᵀA⁻¹L⁻¹ = (L A Lᵀ)⁻¹`.
pub fn greedy_bfgs_dir_from_factor(l: &SquareMatrix, a: &SymMatrix) -> Result<usize> {
    let weighted = l.congruence(a);
    let diag = cholesky(&weighted, DEFAULT_PIVOT_TOL)?.inverse_diagonal();
    Ok(argmax_by(diag.len(), |i| diag[i]))
}

pub fn sample_gaussian(dim: usize, rng: RngState) -> (Vec<f64>, RngState) {
    let mut v = vec![0.0; dim];
    let next = rng.fill_normal(&mut v);
    (v, next)
}

/// Uniform on the unit sphere, as a normalized Gaussian draw.
pub fn sample_sphere(dim: usize, rng: RngState) -> (Vec<f64>, RngState) {
    assert!(dim >= 1, "sphere dimension must be positive");
    let mut state = rng;
    loop {
        let (mut v, next) = sample_gaussian(dim, state);
        state = next;
        let n = norm(&v);
        if n > 0.0 && n.is_finite() {
            v.iter_mut().for_each(|x| *x /= n);
            return (v, state);
        }
    }
}

pub fn unit_vector(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isotropy_error(dim: usize, samples: usize, draw: impl Fn(RngState) -> (Vec<f64>, RngState)) -> f64 {
        let mut acc = vec![0.0; dim * dim];
        let mut rng = RngState::from_seed(2024);
        for _ in 0..samples {
            let (u, next) = draw(rng);
            rng = next;
            let uu: f64 = u.iter().map(|x| x * x).sum();
            for i in 0..dim {
                for j in 0..dim {
                    acc[i * dim + j] += u[i] * u[j] / uu;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 / dim as f64 } else { 0.0 };
                worst = worst.max((acc[i * dim + j] / samples as f64 - want).abs());
            }
        }
        worst
    }

    #[test]
    fn greedy_broyden_examples() {
        assert_eq!(greedy_broyden_dir(&[2.0, 5.0], &[1.0, 1.0]), 1);
        assert_eq!(greedy_broyden_dir(&[3.0, 4.0], &[3.0, 4.0]), 0);
        assert_eq!(greedy_broyden_dir(&[6.0, 5.0], &[3.0, 1.0]), 1);
    }

    #[test]
    fn greedy_sr1_examples() {
        assert_eq!(greedy_sr1_dir(&[4.0, 2.0], &[1.0, 1.0]), 0);
        assert_eq!(greedy_sr1_dir(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]), 0);
        assert_eq!(greedy_sr1_dir(&[1.0, 1.0, 8.0], &[1.0, 1.0, 1.0]), 2);
    }

    #[test]
    fn greedy_bfgs_examples() {
        assert_eq!(greedy_bfgs_dir(&SymMatrix::from_diag(&[1.0, 4.0])), 1);
        assert_eq!(greedy_bfgs_dir(&SymMatrix::from_diag(&[2.0, 2.0])), 0);
        assert_eq!(greedy_bfgs_dir(&SymMatrix::from_diag(&[9.0, 2.0, 9.0])), 0);
        let i = greedy_bfgs_dir_from_factor(&SquareMatrix::identity(2), &SymMatrix::from_diag(&[1.0, 0.25])).unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn sphere_examples() {
        let (u, _) = sample_sphere(1, RngState::from_seed(3));
        assert_eq!(u[0].abs(), 1.0);
        let mut rng = RngState::from_seed(9);
        for d in 1..20 {
            let (u, next) = sample_sphere(d, rng);
            rng = next;
            assert!((norm(&u) - 1.0).abs() <= 1e-12);
        }
        assert!(isotropy_error(4, 20_000, |r| sample_sphere(4, r)) < 0.02);
    }

    #[test]
    fn gaussian_examples() {
        let s = RngState::from_seed(11);
        assert_eq!(sample_gaussian(5, s), sample_gaussian(5, s));
        let (v, _) = sample_gaussian(100_000, s);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!(isotropy_error(4, 20_000, |r| sample_gaussian(4, r)) < 0.02);
    }

    #[test]
    fn strategy_names_round_trip() {
        for kind in [
            DirectionKind::GreedyBroyden,
            DirectionKind::GreedySr1,
            DirectionKind::GreedyBfgsTestOnly,
            DirectionKind::RandomSphere,
            DirectionKind::RandomGaussian,
        ] {
            assert_eq!(DirectionKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(DirectionKind::parse("steepest").is_err());
        assert!(DirectionStrategy::new(DirectionKind::GreedyBfgsTestOnly).needs_factor());
        assert!(!DirectionStrategy::new(DirectionKind::RandomSphere).needs_factor());
    }
}
