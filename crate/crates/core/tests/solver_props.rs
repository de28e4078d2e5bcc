use proptest::prelude::*;
use quasinewton::directions::{DirectionKind, DirectionStrategy};
use quasinewton::linalg::{extreme_eigs, norm, SymMatrix};
use quasinewton::objectives::{make_logsumexp_synthetic, random_spd, Objective, QuadraticObjective};
use quasinewton::solvers::{
    agd_baseline, agd_momentum, approx_matrix, newton_warm_start, solve_general, validate_pairing, IterationRecord,
    SolverOptions, StopRule,
};
use quasinewton::updates::UpdateRule;

fn series(trace: &[IterationRecord], pick: impl Fn(&IterationRecord) -> Option<f64>) -> Vec<f64> {
    trace.iter().map(|r| pick(r).expect("measure recorded")).collect()
}

fn start(a: &SymMatrix) -> SymMatrix {
    let (_, hi) = extreme_eigs(a, 5_000, 1e-13).unwrap();
    SymMatrix::scaled_identity(a.dim(), hi)
}

fn expensive() -> SolverOptions {
    SolverOptions {
        allow_expensive: true,
        ..SolverOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greedy_sr1_removes_its_share_each_step(d in 2usize..=12, kappa in 2.0f64..200.0, seed in any::<u64>()) {
        let a = random_spd(d, kappa, seed).unwrap();
        let dir = DirectionStrategy::new(DirectionKind::GreedySr1);
        let trace = approx_matrix(&a, &start(&a), UpdateRule::Sr1, dir, d, &SolverOptions::default()).unwrap();
        let tau = series(&trace, |r| r.tau);
        for k in 0..d {
            let bound = (1.0 - 1.0 / (d - k) as f64) * tau[k] + 1e-9 * tau[0];
            prop_assert!(tau[k + 1] <= bound, "k = {}: {} > {}", k, tau[k + 1], bound);
        }
    }

    #[test]
    fn greedy_broyden_family_contracts_sigma(
        d in 2usize..=10,
        kappa in 2.0f64..50.0,
        seed in any::<u64>(),
        t in 0.0f64..=1.0,
    ) {
        let a = random_spd(d, kappa, seed).unwrap();
        let (lo, hi) = extreme_eigs(&a, 5_000, 1e-13).unwrap();
        let rate = 1.0 - lo / (d as f64 * hi);
        let dir = DirectionStrategy::new(DirectionKind::GreedyBroyden);
        for rule in [UpdateRule::Dfp, UpdateRule::Bfgs, UpdateRule::broyden(t).unwrap()] {
            let trace = approx_matrix(&a, &start(&a), rule, dir, 2 * d, &SolverOptions::default()).unwrap();
            let sigma = series(&trace, |r| r.sigma);
            for k in 0..sigma.len() - 1 {
                prop_assert!(
                    sigma[k + 1] <= rate * sigma[k] + 1e-9 * sigma[0],
                    "{} k = {}: {} > {}", rule, k, sigma[k + 1], rate * sigma[k]
                );
            }
        }
    }

    #[test]
    fn greedy_scaled_bfgs_contracts_sigma(d in 2usize..=10, kappa in 2.0f64..200.0, seed in any::<u64>()) {
        let a = random_spd(d, kappa, seed).unwrap();
        let dir = DirectionStrategy::new(DirectionKind::GreedyBfgsTestOnly);
        let trace = approx_matrix(&a, &start(&a), UpdateRule::Bfgs, dir, 2 * d, &expensive()).unwrap();
        let sigma = series(&trace, |r| r.sigma);
        let rate = 1.0 - 1.0 / d as f64;
        for k in 0..sigma.len() - 1 {
            prop_assert!(sigma[k + 1] <= rate * sigma[k] + 1e-9 * sigma[0]);
        }
    }

    #[test]
    fn agd_stays_inside_its_rate(d in 1usize..=12, kappa in 1.5f64..300.0, seed in any::<u64>()) {
        let a = random_spd(d, kappa, seed).unwrap();
        let b: Vec<f64> = (0..d).map(|i| ((i + 1) as f64).cos()).collect();
        let obj = QuadraticObjective::new(a, b).unwrap();
        let c = obj.constants();
        let x_star = obj.minimizer();
        let x0 = vec![1.0; d];
        let gap0 = obj.value(&x0) - obj.value(&x_star);
        let dist2: f64 = x0.iter().zip(&x_star).map(|(p, q)| (p - q).powi(2)).sum();
        let energy = gap0 + 0.5 * c.mu * dist2;
        let (_, grads) = agd_baseline(&obj, &x0, 60);
        let rate = 1.0 - (c.mu / c.lip_l).sqrt();
        for (k, g) in grads.iter().enumerate() {
            // ‖∇f‖² ≤ 2L (f − f*) ≤ 2L (1 − 1/√κ)^k (f₀ − f* + μ/2 ‖x₀ − x*‖²)
            let bound = 2.0 * c.lip_l * rate.powi(k as i32) * energy;
            prop_assert!(g * g <= bound * (1.0 + 1e-9) + 1e-24, "k = {}", k);
        }
    }
}

#[test]
fn corrected_runs_keep_the_hessian_below() {
    let obj = make_logsumexp_synthetic(8, 16, 0.5, 3).unwrap();
    let m_const = obj.constants().self_concordant_m;
    let stop = StopRule {
        max_iters: 40,
        grad_tol: 1e-12,
        lambda_tol: 0.0,
    };
    let runs = [
        (UpdateRule::Sr1, DirectionStrategy::new(DirectionKind::GreedySr1), true),
        (UpdateRule::Bfgs, DirectionStrategy::new(DirectionKind::GreedyBroyden), true),
        (UpdateRule::broyden(0.5).unwrap(), DirectionStrategy::new(DirectionKind::GreedyBroyden), false),
        (UpdateRule::Bfgs, DirectionStrategy::new(DirectionKind::RandomSphere).with_seed(4).with_scaling(true), false),
    ];
    for scale in [0.3, 0.02] {
        let x0: Vec<f64> = (0..8).map(|i| scale * (i as f64 - 3.5)).collect();
        for (rule, dir, fast) in runs {
            let (x, trace) = solve_general(&obj, &x0, rule, dir, m_const, &stop, &expensive()).unwrap();
            assert!(trace.iter().all(|r| r.hess_below_g == Some(true)), "{rule} / {}", dir.label());
            if fast && scale < 0.1 {
                assert!(norm(&obj.gradient(&x)) <= 1e-10, "{rule} / {}", dir.label());
            }
        }
    }
}

#[test]
fn warm_start_reaches_the_quadratic_minimizer_in_one_step() {
    let a = random_spd(6, 40.0, 11).unwrap();
    let obj = QuadraticObjective::new(a, vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0]).unwrap();
    let x = newton_warm_start(&obj, &[0.0; 6], 1).unwrap();
    assert!(norm(&obj.gradient(&x)) <= 1e-10);
}

#[test]
fn pairings_are_checked() {
    let opts = SolverOptions::default();
    let bfgs_greedy = DirectionStrategy::new(DirectionKind::GreedyBfgsTestOnly);
    assert!(validate_pairing(UpdateRule::Bfgs, &bfgs_greedy, &opts).is_err());
    assert!(validate_pairing(UpdateRule::Bfgs, &bfgs_greedy, &expensive()).is_ok());
    let scaled = DirectionStrategy::new(DirectionKind::RandomSphere).with_scaling(true);
    assert!(validate_pairing(UpdateRule::Sr1, &scaled, &opts).is_err());
    assert!(validate_pairing(UpdateRule::Bfgs, &scaled, &opts).is_ok());
}

#[test]
fn momentum_matches_condition_number() {
    assert_eq!(agd_momentum(1.0), 0.0);
    assert!((agd_momentum(100.0) - 9.0 / 11.0).abs() < 1e-15);
}
