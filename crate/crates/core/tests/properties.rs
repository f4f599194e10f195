//! Property tests for the structural invariants of the model and the
//! integrator: transform round trips, rotation equivariance, energy
//! normalization, and convergence order against the closed-form orbit.

use fowler_core::fowler::{fowler_rhs_flat, profile_from_necksize};
use fowler_core::integrator::{integrate, IntegratorConfig};
use fowler_core::model::{
    ball_to_cyl, cyl_to_ball, hamiltonian, limit_rhs, scalar_hamiltonian, CylState, Dimension,
    RadialField,
};
use proptest::prelude::*;

fn rotate(theta: f64, x: [f64; 2]) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ball_cylinder_round_trip(
        n in 3u32..=8,
        r in 1e-3f64..1e3,
        u1 in 0.0f64..5.0,
        u2 in 0.0f64..5.0,
        du1 in -5.0f64..5.0,
        du2 in -5.0f64..5.0,
    ) {
        let n = Dimension::new(n).unwrap();
        let field = RadialField { u: [u1, u2], du_dr: [du1, du2] };
        let state = ball_to_cyl(n, r, field).unwrap();
        let (r_back, f_back) = cyl_to_ball(n, &state);
        let scale = 1.0 + u1.abs() + u2.abs() + du1.abs() + du2.abs();
        prop_assert!((r_back - r).abs() <= 1e-12 * (1.0 + r));
        for i in 0..2 {
            prop_assert!((f_back.u[i] - field.u[i]).abs() <= 1e-12 * scale);
            prop_assert!((f_back.du_dr[i] - field.du_dr[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn limit_rhs_is_rotation_equivariant(
        n in 3u32..=6,
        theta in 0.0f64..std::f64::consts::TAU,
        v1 in -2.0f64..2.0,
        v2 in -2.0f64..2.0,
        w1 in -2.0f64..2.0,
        w2 in -2.0f64..2.0,
    ) {
        let n = Dimension::new(n).unwrap();
        let state = CylState::new(0.0, [v1, v2], [w1, w2]);
        let rotated = CylState::new(0.0, rotate(theta, state.v), rotate(theta, state.w));
        let (dv, dw) = limit_rhs(n, &state);
        let (dv_r, dw_r) = limit_rhs(n, &rotated);
        let dv_rot = rotate(theta, dv);
        let dw_rot = rotate(theta, dw);
        for i in 0..2 {
            prop_assert!((dv_r[i] - dv_rot[i]).abs() <= 1e-12);
            prop_assert!((dw_r[i] - dw_rot[i]).abs() <= 1e-12);
        }
        // the energy only sees the norms, so it is invariant
        prop_assert!((hamiltonian(n, &rotated) - hamiltonian(n, &state)).abs() <= 1e-12);
    }

    #[test]
    fn scalar_energy_is_twice_vector_energy(
        n in 3u32..=6,
        v in 0.0f64..3.0,
        w in -3.0f64..3.0,
    ) {
        let n = Dimension::new(n).unwrap();
        let state = CylState::scalar(0.0, v, w);
        // exact by construction: both normalizations share the kernel
        prop_assert_eq!(scalar_hamiltonian(n, v, w), 2.0 * hamiltonian(n, &state));
    }
}

#[test]
fn fowler_states_stay_below_one() {
    let cfg = IntegratorConfig::default();
    for nn in [3u32, 4, 5] {
        let n = Dimension::new(nn).unwrap();
        let eps_cyl = fowler_core::fowler::cylinder_necksize(n);
        for i in 1..=8 {
            let eps = eps_cyl * (0.02 + 0.96 * (i as f64 - 1.0) / 7.0);
            let p = profile_from_necksize(n, eps, &cfg).unwrap();
            for y in p.samples.states() {
                assert!(y[0] < 1.0, "n={nn} eps={eps}: v = {} reaches 1", y[0]);
                assert!(y[0] > 0.0);
            }
        }
    }
}

#[test]
fn tighter_tolerances_shrink_the_error() {
    // cosh closed form as reference; error should drop monotonically with
    // the tolerance and by a solid factor across two decades
    let n = Dimension::new(3).unwrap();
    let err_at = |rel: f64| {
        let cfg = IntegratorConfig::new(rel, rel * 1e-2).unwrap();
        let traj = integrate(
            |_t, y, dy| fowler_rhs_flat(n, y, dy),
            &[1.0, 0.0],
            (0.0, 5.0),
            &cfg,
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let t = 5.0 * i as f64 / 200.0;
            let v = traj.eval(t).unwrap()[0];
            worst = worst.max((v - t.cosh().powf(-0.5)).abs());
        }
        worst
    };
    let e6 = err_at(1e-6);
    let e7 = err_at(5e-7);
    let e8 = err_at(1e-8);
    assert!(e7 <= e6, "halving the tolerance increased the error: {e6} -> {e7}");
    assert!(e8 <= e6 / 4.0, "no fourfold gain across two decades: {e6} -> {e8}");
}
