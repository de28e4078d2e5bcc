//! Iteration drivers: matrix approximation, quadratic and general
//! minimization, Newton warm start and an accelerated-gradient baseline.

use std::time::Instant;

use crate::directions::{
    greedy_bfgs_dir_from_factor, greedy_broyden_dir, greedy_sr1_dir, sample_gaussian, sample_sphere, unit_vector,
    DirectionKind, DirectionStrategy,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, norm, psd_order_holds, SymMatrix, DEFAULT_ORDER_TOL, DEFAULT_PIVOT_TOL};
use crate::measures::{lambda_with_factor, sigma_with_factor, tau_measure};
use crate::objectives::{Objective, QuadraticObjective};
use crate::rng::RngState;
use crate::updates::{ApproxState, GapFactor, UpdateRule, UpdateStep, DEFAULT_SKIP_TOL};

/// Dense instrumentation is on by default up to this dimension.
pub const DENSE_DEFAULT_MAX_DIM: usize = 256;

/// Per-step measurements. Absent values were not computed for this run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub grad_norm: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    /// `tr(G_k − ∇²f(x_k)) / tr(∇²f(x_k))`
    pub eta: Option<f64>,
    /// `‖x_{k+1} − x_k‖` in the Hessian norm at `x_k`.
    pub r: Option<f64>,
    /// Whether `∇²f(x_k) ⪯ G_k` held.
    pub hess_below_g: Option<bool>,
    /// Seconds since the run started.
    pub elapsed: f64,
}

impl IterationRecord {
    fn new(k: usize, elapsed: f64) -> Self {
        IterationRecord {
            k,
            grad_norm: None,
            lambda: None,
            sigma: None,
            tau: None,
            eta: None,
            r: None,
            hess_below_g: None,
            elapsed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    /// Absolute threshold on `‖∇f‖`.
    pub grad_tol: f64,
    /// Threshold on `λ_k / λ_0`; iterates freeze once it is reached.
    pub lambda_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iters: 100,
            grad_tol: 0.0,
            lambda_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub skip_tol: f64,
    /// Permits the O(d³)-per-step greedy BFGS direction.
    pub allow_expensive: bool,
    /// Dense Hessian measurements (λ, σ, η, order check). `None` enables
    /// them up to [`DENSE_DEFAULT_MAX_DIM`].
    pub dense_instrumentation: Option<bool>,
    /// Fail when the approximation drops below its target. General runs
    /// only enforce this when the correction constant is positive.
    pub enforce_order: bool,
    pub order_tol: f64,
    /// Matrix runs stop updating once `τ_k ≤ tau_tol · τ_0`.
    pub tau_tol: f64,
    /// Record wall-clock time in each record (otherwise 0).
    pub timing: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            skip_tol: DEFAULT_SKIP_TOL,
            allow_expensive: false,
            dense_instrumentation: None,
            enforce_order: true,
            order_tol: DEFAULT_ORDER_TOL,
            tau_tol: 1e-12,
            timing: false,
        }
    }
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub trace: Vec<IterationRecord>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} recorded steps)", self.error, self.trace.len())
    }
}

impl std::error::Error for RunFailure {}

pub type RunResult<T> = std::result::Result<T, RunFailure>;

fn fail<T>(error: Error, trace: Vec<IterationRecord>) -> RunResult<T> {
    Err(RunFailure { error, trace })
}

/// Checks that `rule` and `dir` can run together.
pub fn validate_pairing(rule: UpdateRule, dir: &DirectionStrategy, opts: &SolverOptions) -> Result<()> {
    if dir.kind == DirectionKind::GreedyBfgsTestOnly && !opts.allow_expensive {
        return Err(Error::Config(
            "greedy_bfgs directions cost O(d^3) per step; set allow_expensive to use them".into(),
        ));
    }
    if dir.scaled && rule != UpdateRule::Bfgs {
        return Err(Error::Config(format!(
            "scaled directions require the bfgs rule, got {rule}"
        )));
    }
    if dir.scaled && !(dir.kind.is_random() || dir.kind == DirectionKind::GreedyBfgsTestOnly) {
        return Err(Error::Config(format!("{} directions cannot be scaled", dir.kind.name())));
    }
    Ok(())
}

/// What a direction choice needs to know about the current target Hessian.
trait Target {
    fn diag(&self) -> Vec<f64>;
    fn dense(&self) -> Result<SymMatrix>;
}

struct DenseTarget<'a>(&'a SymMatrix);

impl Target for DenseTarget<'_> {
    fn diag(&self) -> Vec<f64> {
        self.0.diagonal()
    }

    fn dense(&self) -> Result<SymMatrix> {
        Ok(self.0.clone())
    }
}

struct ObjectiveTarget<'a> {
    obj: &'a dyn Objective,
    x: &'a [f64],
}

impl Target for ObjectiveTarget<'_> {
    fn diag(&self) -> Vec<f64> {
        self.obj.hess_diag(self.x)
    }

    fn dense(&self) -> Result<SymMatrix> {
        self.obj.hessian(self.x)
    }
}

struct Chosen {
    u: Vec<f64>,
    u_tilde: Option<Vec<f64>>,
}

struct DirectionPicker {
    strategy: DirectionStrategy,
    rng: RngState,
}

impl DirectionPicker {
    fn new(strategy: DirectionStrategy) -> Self {
        DirectionPicker {
            strategy,
            rng: RngState::from_seed(strategy.seed),
        }
    }

    fn pick(&mut self, state: &ApproxState, target: &dyn Target) -> Result<Chosen> {
        let d = state.dim();
        let raw = match self.strategy.kind {
            DirectionKind::GreedyBroyden => unit_vector(d, greedy_broyden_dir(&state.g().diagonal(), &target.diag())),
            DirectionKind::GreedySr1 => unit_vector(d, greedy_sr1_dir(&state.g().diagonal(), &target.diag())),
            DirectionKind::GreedyBfgsTestOnly => {
                let l = state.factor().ok_or_else(|| Error::InvalidParameter("greedy BFGS needs a factor".into()))?;
                unit_vector(d, greedy_bfgs_dir_from_factor(l, &target.dense()?)?)
            }
            DirectionKind::RandomSphere => {
                let (v, next) = sample_sphere(d, self.rng);
                self.rng = next;
                v
            }
            DirectionKind::RandomGaussian => loop {
                let (v, next) = sample_gaussian(d, self.rng);
                self.rng = next;
                if norm(&v) > 0.0 {
                    break v;
                }
            },
        };
        if self.strategy.scaled {
            let l = state
                .factor()
                .ok_or_else(|| Error::InvalidParameter("scaled directions need a factor".into()))?;
            Ok(Chosen {
                u: l.transpose_matvec(&raw),
                u_tilde: Some(raw),
            })
        } else {
            Ok(Chosen { u: raw, u_tilde: None })
        }
    }
}

/// Repeatedly updates `g0` toward the fixed target `a` and records `σ` and
/// `τ` at every step `k = 0..=steps`.
pub fn approx_matrix(
    a: &SymMatrix,
    g0: &SymMatrix,
    rule: UpdateRule,
    dir: DirectionStrategy,
    steps: usize,
    opts: &SolverOptions,
) -> RunResult<Vec<IterationRecord>> {
    approx_matrix_observed(a, g0, rule, dir, steps, opts, |_, _| {})
}

/// [`approx_matrix`] that also hands every intermediate state to `observe`.
pub fn approx_matrix_observed(
    a: &SymMatrix,
    g0: &SymMatrix,
    rule: UpdateRule,
    dir: DirectionStrategy,
    steps: usize,
    opts: &SolverOptions,
    mut observe: impl FnMut(usize, &ApproxState),
) -> RunResult<Vec<IterationRecord>> {
    let start = Instant::now();
    let clock = || if opts.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let mut trace = Vec::new();
    let setup = (|| -> Result<_> {
        validate_pairing(rule, &dir, opts)?;
        if a.dim() != g0.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: g0.dim(),
            });
        }
        let a_fac = cholesky(a, DEFAULT_PIVOT_TOL)?;
        if !psd_order_holds(a, g0, opts.order_tol)? {
            return Err(Error::InvariantBreach {
                step: 0,
                what: "initial approximation is not above the target".into(),
            });
        }
        let state = ApproxState::from_matrix(g0.clone(), dir.needs_factor())?;
        // SR1 can drive G all the way to A; the factored gap keeps that last
        // step from pushing G below A through rounding.
        let gap = if rule.is_pure_sr1() { Some(GapFactor::new(g0, a)?) } else { None };
        Ok((a_fac, state, gap))
    })();
    let (a_fac, mut state, mut gap) = match setup {
        Ok(v) => v,
        Err(e) => return fail(e, trace),
    };
    let mut picker = DirectionPicker::new(dir);
    let mut tau0 = None;
    for k in 0..=steps {
        let mut rec = IterationRecord::new(k, clock());
        let measured = sigma_with_factor(&a_fac, a, state.g()).and_then(|s| Ok((s, tau_measure(a, state.g())?)));
        let (sigma, tau) = match measured {
            Ok(v) => v,
            Err(e) => return fail(e, trace),
        };
        rec.sigma = Some(sigma);
        rec.tau = Some(tau);
        trace.push(rec);
        observe(k, &state);
        if k > 0 && opts.enforce_order {
            match psd_order_holds(a, state.g(), opts.order_tol) {
                Ok(true) => {}
                Ok(false) => {
                    return fail(
                        Error::InvariantBreach {
                            step: k,
                            what: "approximation dropped below the target".into(),
                        },
                        trace,
                    )
                }
                Err(e) => return fail(e, trace),
            }
        }
        let t0 = *tau0.get_or_insert(tau);
        if k == steps {
            break;
        }
        // Once G has reached A the remaining steps are recorded but frozen,
        // so every run of a given length shares the same step grid.
        if tau <= opts.tau_tol * t0 {
            continue;
        }
        let step = (|| -> Result<()> {
            let chosen = picker.pick(&state, &DenseTarget(a))?;
            let au = a.matvec(&chosen.u);
            if let Some(gap) = gap.as_mut() {
                state.sr1_fixed_target(a, gap, &chosen.u, &au, opts.skip_tol)?;
                return Ok(());
            }
            let scale = state.g().sub(a)?.frobenius_norm();
            state.update(
                rule,
                UpdateStep {
                    u: &chosen.u,
                    au: &au,
                    u_tilde: chosen.u_tilde.as_deref(),
                },
                opts.skip_tol,
                scale,
            )?;
            Ok(())
        })();
        if let Err(e) = step {
            return fail(e, trace);
        }
    }
    Ok(trace)
}

/// Quasi-Newton minimization of a quadratic from a given `g0 ⪰ A`, using the
/// same driver as [`solve_general`] with the correction disabled.
pub fn solve_quadratic(
    obj: &QuadraticObjective,
    x0: &[f64],
    g0: &SymMatrix,
    rule: UpdateRule,
    dir: DirectionStrategy,
    stop: &StopRule,
    opts: &SolverOptions,
) -> RunResult<(Vec<f64>, Vec<IterationRecord>)> {
    let init = (|| -> Result<ApproxState> {
        validate_pairing(rule, &dir, opts)?;
        if !psd_order_holds(obj.a(), g0, opts.order_tol)? {
            return Err(Error::InvariantBreach {
                step: 0,
                what: "initial approximation is not above the Hessian".into(),
            });
        }
        ApproxState::from_matrix(g0.clone(), dir.needs_factor())
    })();
    match init {
        Ok(state) => drive(obj, x0, state, rule, dir, 0.0, stop, opts),
        Err(e) => fail(e, Vec::new()),
    }
}

/// Quasi-Newton minimization of a strongly self-concordant objective from
/// `G₀ = L·I`, with the correction `G ← (1 + M r)G` before every update.
pub fn solve_general(
    obj: &dyn Objective,
    x0: &[f64],
    rule: UpdateRule,
    dir: DirectionStrategy,
    m_const: f64,
    stop: &StopRule,
    opts: &SolverOptions,
) -> RunResult<(Vec<f64>, Vec<IterationRecord>)> {
    if let Err(e) = validate_pairing(rule, &dir, opts) {
        return fail(e, Vec::new());
    }
    if !(m_const >= 0.0) {
        return fail(
            Error::InvalidParameter(format!("correction constant must be non-negative, got {m_const}")),
            Vec::new(),
        );
    }
    let l = obj.constants().lip_l;
    let state = ApproxState::scaled_identity(obj.dim(), l, dir.needs_factor());
    drive(obj, x0, state, rule, dir, m_const, stop, opts)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    obj: &dyn Objective,
    x0: &[f64],
    mut state: ApproxState,
    rule: UpdateRule,
    dir: DirectionStrategy,
    m_const: f64,
    stop: &StopRule,
    opts: &SolverOptions,
) -> RunResult<(Vec<f64>, Vec<IterationRecord>)> {
    let start = Instant::now();
    let clock = || if opts.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let d = obj.dim();
    let mut trace: Vec<IterationRecord> = Vec::new();
    if x0.len() != d || state.dim() != d {
        return fail(
            Error::DimensionMismatch {
                expected: d,
                found: if x0.len() != d { x0.len() } else { state.dim() },
            },
            trace,
        );
    }
    let dense = opts.dense_instrumentation.unwrap_or(d <= DENSE_DEFAULT_MAX_DIM);
    let enforce = opts.enforce_order && m_const > 0.0;
    let mut picker = DirectionPicker::new(dir);
    let mut x = x0.to_vec();
    let mut grad = obj.gradient(&x);
    let mut lambda0 = None;

    for k in 0.. {
        let mut rec = IterationRecord::new(k, clock());
        if !grad.iter().all(|v| v.is_finite()) {
            return fail(Error::NonFinite("gradient"), trace);
        }
        let gnorm = norm(&grad);
        rec.grad_norm = Some(gnorm);
        if dense {
            let measured = (|| -> Result<()> {
                let hess = obj.hessian(&x)?;
                let fac = cholesky(&hess, DEFAULT_PIVOT_TOL)?;
                rec.lambda = Some(lambda_with_factor(&grad, &fac)?);
                rec.sigma = Some(sigma_with_factor(&fac, &hess, state.g())?);
                let tau = tau_measure(&hess, state.g())?;
                rec.tau = Some(tau);
                rec.eta = Some(tau / hess.trace());
                rec.hess_below_g = Some(psd_order_holds(&hess, state.g(), opts.order_tol)?);
                Ok(())
            })();
            if let Err(e) = measured {
                trace.push(rec);
                return fail(e, trace);
            }
        }
        let below = rec.hess_below_g;
        let lambda = rec.lambda;
        trace.push(rec);
        if enforce && below == Some(false) {
            return fail(
                Error::InvariantBreach {
                    step: k,
                    what: "Hessian is not below the approximation".into(),
                },
                trace,
            );
        }

        let l0 = *lambda0.get_or_insert(lambda.unwrap_or(f64::NAN));
        let lambda_done = matches!(lambda, Some(l) if l <= stop.lambda_tol * l0);
        if k >= stop.max_iters || gnorm <= stop.grad_tol || lambda_done {
            break;
        }

        let advanced = (|| -> Result<(Vec<f64>, f64)> {
            let mut s = state.h().matvec(&grad);
            s.iter_mut().for_each(|v| *v = -*v);
            let r = dot(&s, &obj.hess_vec(&x, &s)).max(0.0).sqrt();
            let x_next: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
            state.correct_in_place(m_const, r);
            let target = ObjectiveTarget { obj, x: &x_next };
            let chosen = picker.pick(&state, &target)?;
            let au = obj.hess_vec(&x_next, &chosen.u);
            let scale = state.g().trace();
            state.update(
                rule,
                UpdateStep {
                    u: &chosen.u,
                    au: &au,
                    u_tilde: chosen.u_tilde.as_deref(),
                },
                opts.skip_tol,
                scale,
            )?;
            Ok((x_next, r))
        })();
        match advanced {
            Ok((x_next, r)) => {
                trace.last_mut().expect("pushed above").r = Some(r);
                x = x_next;
                grad = obj.gradient(&x);
            }
            Err(e) => return fail(e, trace),
        }
    }
    Ok((x, trace))
}

/// `steps` full Newton iterations from `x0`.
pub fn newton_warm_start(obj: &dyn Objective, x0: &[f64], steps: usize) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..steps {
        newton_step(obj, &mut x)?;
    }
    Ok(x)
}

/// Newton iterations until `‖∇f‖ ≤ grad_target` (at most `max_steps`).
/// Returns the point and the number of steps taken.
pub fn newton_until(obj: &dyn Objective, x0: &[f64], grad_target: f64, max_steps: usize) -> Result<(Vec<f64>, usize)> {
    let mut x = x0.to_vec();
    for taken in 0..=max_steps {
        if norm(&obj.gradient(&x)) <= grad_target || taken == max_steps {
            return Ok((x, taken));
        }
        newton_step(obj, &mut x)?;
    }
    unreachable!("loop returns on its last iteration")
}

fn newton_step(obj: &dyn Objective, x: &mut [f64]) -> Result<()> {
    let g = obj.gradient(x);
    let step = cholesky(&obj.hessian(x)?, DEFAULT_PIVOT_TOL)?.solve(&g)?;
    x.iter_mut().zip(&step).for_each(|(a, s)| *a -= s);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Newton iterate"));
    }
    Ok(())
}

/// Constant-step accelerated gradient method for μ-strongly convex,
/// L-smooth objectives. Returns the final point and `‖∇f‖` at every
/// iterate including `x0`.
pub fn agd_baseline(obj: &dyn Objective, x0: &[f64], iters: usize) -> (Vec<f64>, Vec<f64>) {
    let c = obj.constants();
    let beta = agd_momentum(c.kappa());
    let mut x = x0.to_vec();
    let mut x_prev = x.clone();
    let mut trace = vec![norm(&obj.gradient(&x))];
    for _ in 0..iters {
        let y: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a + beta * (a - b)).collect();
        let gy = obj.gradient(&y);
        let next: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - g / c.lip_l).collect();
        x_prev = std::mem::replace(&mut x, next);
        trace.push(norm(&obj.gradient(&x)));
    }
    (x, trace)
}

/// `(√κ − 1)/(√κ + 1)`
pub fn agd_momentum(kappa: f64) -> f64 {
    let s = kappa.sqrt();
    (s - 1.0) / (s + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::DirectionKind;
    use crate::objectives::make_logsumexp_synthetic;

    fn greedy(kind: DirectionKind) -> DirectionStrategy {
        DirectionStrategy::new(kind)
    }

    #[test]
    fn scalar_sr1_lands_in_one_step() {
        let a = SymMatrix::from_diag(&[2.0]);
        let g0 = SymMatrix::from_diag(&[5.0]);
        let trace = approx_matrix(&a, &g0, UpdateRule::Sr1, greedy(DirectionKind::GreedySr1), 3, &SolverOptions::default()).unwrap();
        assert_eq!(trace.len(), 4);
        assert!(trace[1..].iter().all(|r| r.tau == Some(0.0)));
    }

    #[test]
    fn exact_start_is_a_no_op() {
        let a = SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let trace = approx_matrix(&a, &a, UpdateRule::Bfgs, greedy(DirectionKind::GreedyBroyden), 4, &SolverOptions::default()).unwrap();
        assert_eq!(trace.len(), 5);
        assert!(trace.iter().all(|r| r.sigma == Some(0.0) && r.tau == Some(0.0)));
    }

    #[test]
    fn rejects_start_below_target() {
        let a = SymMatrix::from_diag(&[2.0, 2.0]);
        let err = approx_matrix(&a, &SymMatrix::identity(2), UpdateRule::Sr1, greedy(DirectionKind::GreedySr1), 2, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err.error, Error::InvariantBreach { step: 0, .. }));
    }

    #[test]
    fn greedy_bfgs_requires_opt_in() {
        let a = SymMatrix::identity(2);
        let g0 = SymMatrix::scaled_identity(2, 2.0);
        let dir = greedy(DirectionKind::GreedyBfgsTestOnly);
        assert!(approx_matrix(&a, &g0, UpdateRule::Bfgs, dir, 2, &SolverOptions::default()).is_err());
        let opts = SolverOptions {
            allow_expensive: true,
            ..Default::default()
        };
        assert!(approx_matrix(&a, &g0, UpdateRule::Bfgs, dir, 2, &opts).is_ok());
        assert!(approx_matrix(&a, &g0, UpdateRule::Sr1, dir, 2, &opts).is_err());
    }

    #[test]
    fn quadratic_hand_example() {
        let obj = QuadraticObjective::new(SymMatrix::from_diag(&[1.0, 4.0]), vec![0.0, 0.0]).unwrap();
        let stop = StopRule {
            max_iters: 1,
            ..Default::default()
        };
        let g0 = SymMatrix::scaled_identity(2, 4.0);
        let (x1, trace) = solve_quadratic(&obj, &[1.0, 1.0], &g0, UpdateRule::Sr1, greedy(DirectionKind::GreedySr1), &stop, &SolverOptions::default()).unwrap();
        assert!((trace[0].lambda.unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(x1, vec![0.75, 0.0]);
    }

    #[test]
    fn quadratic_with_exact_hessian_is_newton() {
        let a = SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let obj = QuadraticObjective::new(a.clone(), vec![1.0, -1.0]).unwrap();
        let (x, trace) = solve_quadratic(&obj, &[0.5, 0.5], &a, UpdateRule::Bfgs, greedy(DirectionKind::GreedyBroyden), &StopRule::default(), &SolverOptions::default()).unwrap();
        assert_eq!(trace.len(), 2);
        let xs = obj.minimizer();
        assert!(norm(&[x[0] - xs[0], x[1] - xs[1]]) < 1e-14);
    }

    #[test]
    fn general_driver_matches_quadratic_driver() {
        let a = SymMatrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 0.5], vec![0.0, 0.5, 2.0]]).unwrap();
        let obj = QuadraticObjective::new(a, vec![1.0, 0.0, -1.0]).unwrap();
        let dir = DirectionStrategy::new(DirectionKind::RandomSphere).with_seed(5);
        let g0 = SymMatrix::scaled_identity(3, obj.constants().lip_l);
        let stop = StopRule::default();
        let opts = SolverOptions::default();
        let q = solve_quadratic(&obj, &[1.0, 1.0, 1.0], &g0, UpdateRule::Sr1, dir, &stop, &opts).unwrap();
        let g = solve_general(&obj, &[1.0, 1.0, 1.0], UpdateRule::Sr1, dir, 0.0, &stop, &opts).unwrap();
        assert_eq!(q, g);
    }

    #[test]
    fn correction_keeps_hessian_below() {
        let obj = make_logsumexp_synthetic(6, 9, 1.0, 2).unwrap();
        let x0 = crate::objectives::initial_point_on_sphere(6, 0.5, 1);
        let stop = StopRule {
            max_iters: 15,
            ..Default::default()
        };
        let (_, trace) = solve_general(&obj, &x0, UpdateRule::Sr1, greedy(DirectionKind::GreedySr1), 2.0, &stop, &SolverOptions::default()).unwrap();
        assert!(trace.iter().all(|r| r.hess_below_g == Some(true)));
    }

    #[test]
    fn newton_examples() {
        let obj = QuadraticObjective::new(SymMatrix::from_diag(&[2.0, 5.0]), vec![1.0, 1.0]).unwrap();
        assert_eq!(newton_warm_start(&obj, &[3.0, 3.0], 0).unwrap(), vec![3.0, 3.0]);
        let x = newton_warm_start(&obj, &[3.0, 3.0], 1).unwrap();
        assert!(norm(&obj.gradient(&x)) < 1e-14);
    }

    #[test]
    fn agd_examples() {
        assert_eq!(agd_momentum(1.0), 0.0);
        let obj = QuadraticObjective::new(SymMatrix::scaled_identity(3, 2.0), vec![1.0, 2.0, 3.0]).unwrap();
        let (x, trace) = agd_baseline(&obj, &[0.0; 3], 1);
        let xs = obj.minimizer();
        assert!(x.iter().zip(&xs).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(trace[1] < 1e-14);
    }
}
