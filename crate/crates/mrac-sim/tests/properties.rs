//! Property tests for the numeric invariants the simulator leans on.

mod common;

use common::companion_from_roots;
use mrac_sim::laws::{weight_derivative, AdaptiveLaw, AdaptiveState};
use mrac_sim::matrix::{
    is_spd, solve_least_squares, solve_lyapunov, vec_scale, Matrix,
};
use mrac_sim::models::build_regressor;
use mrac_sim::sim::governor_projection;
use proptest::prelude::*;

fn stable_real_roots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..-0.5f64, 1..5)
}

fn stable_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..-0.5f64, 0.3..2.0f64), 0..3)
}

fn small_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, len)
}

proptest! {
    /// Every Hurwitz/SPD pair in the corpus yields a Lyapunov solution
    /// that meets the residual bound and is itself SPD.
    #[test]
    fn lyapunov_residual_and_spd(reals in stable_real_roots(), pairs in stable_pairs()) {
        let a_r = companion_from_roots(&reals, &pairs);
        let n = a_r.rows();
        let q = Matrix::identity(n);
        let p = solve_lyapunov(&a_r, &q).unwrap();
        let residual = q
            .add(&a_r.transpose().matmul(&p).unwrap()).unwrap()
            .add(&p.matmul(&a_r).unwrap()).unwrap()
            .frobenius_norm();
        prop_assert!(residual <= 1e-10 * q.frobenius_norm().max(1.0));
        prop_assert!(is_spd(&p));
    }

    /// The regressor is jointly linear in (x, c, kappa) — exactly, since
    /// concatenation does no arithmetic.
    #[test]
    fn regressor_joint_linearity(
        x in small_vec(3),
        c in small_vec(2),
        kappa in -3.0..3.0f64,
        alpha in -10.0..10.0f64,
    ) {
        let scaled = build_regressor(&vec_scale(&x, alpha), &vec_scale(&c, alpha), alpha * kappa);
        let direct = vec_scale(&build_regressor(&x, &c, kappa), alpha);
        prop_assert_eq!(scaled, direct);
    }

    /// Scaling invariance of the weight derivative over a continuous range
    /// of alpha, for the laws that admit any nonzero alpha.
    #[test]
    fn weight_derivative_scale_invariance(
        omega in small_vec(4),
        e in small_vec(2),
        w in small_vec(4),
        alpha in prop_oneof![0.05..20.0f64, -20.0..-0.05f64],
        sigma in 0.01..3.0f64,
    ) {
        let p = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let b = Matrix::new(2, 1, vec![0.3, 1.0]).unwrap();
        let gamma0 = Matrix::from_diag(&[3.0, 1.0, 2.0, 0.5]);
        let w_hat = Matrix::new(4, 1, w).unwrap();
        let state = AdaptiveState { w_hat, w_hat_f: None };
        let scaled_omega = vec_scale(&omega, alpha);
        let scaled_e = vec_scale(&e, alpha);
        for (nominal_law, scaled_law) in [
            (
                AdaptiveLaw::StandardMrac { gamma: gamma0.clone() },
                AdaptiveLaw::StandardMrac { gamma: gamma0.div_scalar(alpha * alpha) },
            ),
            (
                AdaptiveLaw::SigmaMod { gamma: gamma0.clone(), sigma },
                AdaptiveLaw::SigmaMod { gamma: gamma0.div_scalar(alpha * alpha), sigma },
            ),
        ] {
            let nominal = weight_derivative(&nominal_law, &state, &omega, &e, &p, &b).unwrap();
            let scaled =
                weight_derivative(&scaled_law, &state, &scaled_omega, &scaled_e, &p, &b).unwrap();
            let diff = nominal.w_hat.sub(&scaled.w_hat).unwrap().max_abs();
            prop_assert!(diff <= 1e-12 * nominal.w_hat.max_abs().max(1.0));
        }
    }

    /// Square invertible least squares solves to the residual bound.
    #[test]
    fn least_squares_square_invertible(entries in prop::collection::vec(-2.0..2.0f64, 9), rhs in small_vec(3)) {
        // diagonally dominant shift keeps the system comfortably invertible
        let mut a = Matrix::new(3, 3, entries).unwrap();
        for i in 0..3 {
            a.set(i, i, a.at(i, i) + 6.0);
        }
        let b = Matrix::new(3, 1, rhs).unwrap();
        let x = solve_least_squares(&a, &b).unwrap();
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        prop_assert!(res <= 1e-10 * (1.0 + b.frobenius_norm()));
    }

    /// The governor projection is symmetric, idempotent, and fixes B.
    #[test]
    fn projection_invariants(entries in prop::collection::vec(-2.0..2.0f64, 8)) {
        let b = Matrix::new(4, 2, entries).unwrap();
        if mrac_sim::matrix::rank(&b, 1e-8) < 2 {
            return Ok(()); // skip the measure-zero rank-deficient draws
        }
        let g = governor_projection(&b).unwrap();
        prop_assert!(g.sub(&g.transpose()).unwrap().max_abs() <= 1e-9);
        prop_assert!(g.matmul(&g).unwrap().sub(&g).unwrap().max_abs() <= 1e-9);
        prop_assert!(g.matmul(&b).unwrap().sub(&b).unwrap().max_abs() <= 1e-9);
    }

    /// CSV fields round-trip: shortest float formatting parses back to
    /// the identical double.
    #[test]
    fn float_formatting_roundtrips(v in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = format!("{v}");
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }
}
