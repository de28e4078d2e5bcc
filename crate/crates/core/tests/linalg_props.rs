mod common;

use common::{dense, eigenvalues, inv, max_rel, ordered_pair, spd, vec_rel, vector};
use proptest::prelude::*;
use quasinewton::linalg::{
    cholesky, extreme_eigs, inverse_sqrt, psd_order_holds, SymMatrix, DEFAULT_ORDER_TOL, DEFAULT_PIVOT_TOL,
};
use quasinewton::Error;

fn sized_spd() -> impl Strategy<Value = SymMatrix> {
    (1usize..=12).prop_flat_map(|d| spd(d, 0.1))
}

proptest! {
    #[test]
    fn cholesky_round_trip(m in sized_spd(), x in common::nonzero_vector(12)) {
        let x = &x[..m.dim()];
        if x.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        let fac = cholesky(&m, DEFAULT_PIVOT_TOL).unwrap();
        let back = fac.solve(&m.matvec(x)).unwrap();
        prop_assert!(vec_rel(&back, x) <= 1e-8);
        prop_assert!(fac.reconstruct().max_abs_diff(&m) <= 1e-12 * m.max_abs_diag().max(1.0));
    }

    #[test]
    fn inverse_and_diagonal_match_oracle(m in sized_spd()) {
        let fac = cholesky(&m, DEFAULT_PIVOT_TOL).unwrap();
        let oracle = inv(&m);
        prop_assert!(max_rel(&dense(&fac.inverse()), &oracle) <= 1e-9);
        let diag = fac.inverse_diagonal();
        let want: Vec<f64> = (0..m.dim()).map(|i| oracle[(i, i)]).collect();
        prop_assert!(vec_rel(&diag, &want) <= 1e-9);
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse(m in sized_spd()) {
        let r = common::dense_sq(&inverse_sqrt(&m).unwrap());
        prop_assert!(max_rel(&(&r * &r), &inv(&m)) <= 1e-8);
    }

    #[test]
    fn extreme_eigs_match_oracle(m in sized_spd()) {
        let (lo, hi) = extreme_eigs(&m, 200, 1e-14).unwrap();
        let ev = eigenvalues(&m);
        let top = ev[ev.len() - 1];
        prop_assert!((hi - top).abs() <= 1e-9 * top);
        prop_assert!((lo - ev[0]).abs() <= 1e-9 * top);
    }

    #[test]
    fn extreme_eigs_exact_on_diagonals(diag in prop::collection::vec(-50.0f64..50.0, 1..10)) {
        let (lo, hi) = extreme_eigs(&SymMatrix::from_diag(&diag), 100, 1e-15).unwrap();
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let max = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(lo, min);
        prop_assert_eq!(hi, max);
    }

    #[test]
    fn order_is_reflexive_and_antisymmetric((a, g, _) in ordered_pair(2, 10)) {
        prop_assert!(psd_order_holds(&a, &a, DEFAULT_ORDER_TOL).unwrap());
        prop_assert!(psd_order_holds(&g, &g, DEFAULT_ORDER_TOL).unwrap());
        prop_assert!(psd_order_holds(&a, &g, DEFAULT_ORDER_TOL).unwrap());
        let gap = eigenvalues(&g.sub(&a).unwrap());
        if gap[gap.len() - 1] > 1e-6 {
            prop_assert!(!psd_order_holds(&g, &a, DEFAULT_ORDER_TOL).unwrap());
        }
    }

    #[test]
    fn matvec_matches_oracle(m in sized_spd(), x in vector(12)) {
        let x = &x[..m.dim()];
        let want = dense(&m) * nalgebra::DVector::from_column_slice(x);
        prop_assert!(vec_rel(&m.matvec(x), want.as_slice()) <= 1e-14);
    }
}

#[test]
fn asymmetric_input_is_rejected() {
    let err = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0 + 1e-6, 1.0]).unwrap_err();
    assert!(matches!(err, Error::Asymmetric { .. }));
    assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]).is_ok());
}

#[test]
fn indefinite_matrix_has_no_cholesky() {
    let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(matches!(cholesky(&m, DEFAULT_PIVOT_TOL), Err(Error::NotPositiveDefinite { .. })));
}
