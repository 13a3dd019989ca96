use std::f64::consts::{PI, TAU};

use pointerlab::continuous::prob_density;
use pointerlab::estimation::{diag_to_orth, guess_from_point, pointwise_fidelity};
use pointerlab::trotter::{density_at, evolve, step_x_diagonal, step_x_orthogonal, step_z, Amplitude, BeamGrid};
use pointerlab::{MeasurementConfig, QubitState};
use proptest::prelude::*;

fn random_grid() -> impl Strategy<Value = BeamGrid> {
    (
        prop::collection::vec(((-2.0..2.0f64, -2.0..2.0f64), (-1.0..1.0f64, -1.0..1.0f64)), 1..6),
        0.05..1.0f64,
    )
        .prop_filter_map("zero norm", |(raw, spread)| {
            let sites: Vec<([f64; 2], Amplitude)> =
                raw.iter().map(|&((z, x), (h, v))| ([z, x], Amplitude::new(h, v))).collect();
            let g = BeamGrid::from_sites(&sites, spread).ok()?;
            let n = g.norm_sqr();
            if n < 1e-3 {
                return None;
            }
            let s = 1.0 / n.sqrt();
            let scaled: Vec<_> = sites
                .iter()
                .map(|(c, a)| (*c, Amplitude::new(a.h * s, a.v * s)))
                .collect();
            BeamGrid::from_sites(&scaled, spread).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_symmetric_and_periodic(a in -10.0..10.0f64, b in -10.0..10.0f64, k in -3i32..3) {
        let f = pointwise_fidelity(a, b);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&f));
        prop_assert!((f - pointwise_fidelity(b, a)).abs() < 1e-15);
        let shift = TAU * k as f64;
        prop_assert!((f - pointwise_fidelity(a + shift, b)).abs() < 1e-12);
        prop_assert!((f - pointwise_fidelity(a, b + shift)).abs() < 1e-12);
    }

    #[test]
    fn guess_is_a_unit_direction(z in -5.0..5.0f64, x in -5.0..5.0f64, s in 0.01..100.0f64) {
        prop_assume!(z != 0.0 || x != 0.0);
        let g = guess_from_point(z, x);
        prop_assert!((0.0..TAU).contains(&g.theta_g));
        prop_assert!((g.sigma_z_g.hypot(g.sigma_x_g) - 1.0).abs() < 1e-14);
        // Scale invariant.
        let h = guess_from_point(s * z, s * x);
        prop_assert!((pointwise_fidelity(g.theta_g, h.theta_g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oblique_transform_is_linear(a in (-5.0..5.0f64, -5.0..5.0f64), b in (-5.0..5.0f64, -5.0..5.0f64), c in -3.0..3.0f64) {
        let lhs = diag_to_orth(a.0 + c * b.0, a.1 + c * b.1);
        let (ta, tb) = (diag_to_orth(a.0, a.1), diag_to_orth(b.0, b.1));
        prop_assert!((lhs.0 - ta.0 - c * tb.0).abs() < 1e-12);
        prop_assert!((lhs.1 - ta.1 - c * tb.1).abs() < 1e-12);
    }

    #[test]
    fn trotter_steps_preserve_norm(g in random_grid(), d in 0.01..1.5f64, angle in 0.1..(PI - 0.1)) {
        for next in [step_z(&g, d).unwrap(), step_x_orthogonal(&g, d).unwrap(), step_x_diagonal(&g, d, angle).unwrap()] {
            prop_assert!((next.norm_sqr() - 1.0).abs() < 1e-12, "{}", next.norm_sqr());
        }
    }

    #[test]
    fn orthogonal_exchange_symmetry(w in 0.05..1.5f64, n in 1usize..8, z in -2.0..2.0f64, x in -2.0..2.0f64) {
        let cfg = MeasurementConfig::orthogonal(w, n).unwrap();
        let dens = |psi: QubitState, z: f64, x: f64| density_at(&evolve(&psi, &cfg).unwrap(), z, x);
        let (h, v) = (dens(QubitState::zero(), z, x), dens(QubitState::one(), -z, x));
        prop_assert!((h - v).abs() <= 1e-12 * h.max(1.0), "{h} {v}");
        let (d, a) = (dens(QubitState::plus(), z, x), dens(QubitState::minus(), z, -x));
        prop_assert!((d - a).abs() <= 1e-12 * d.max(1.0), "{d} {a}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn continuous_mirror_symmetries(w in 0.1..2.0f64, z in -2.0..2.0f64, x in -2.0..2.0f64) {
        let cfg = MeasurementConfig::continuous(w).unwrap();
        let p = |psi: QubitState, z: f64, x: f64| prob_density(z, x, &psi, &cfg).unwrap();
        let zero = QubitState::zero();
        let (a, b) = (p(zero, z, x), p(zero, z, -x));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-3));
        let minus = QubitState::minus();
        let (a, b) = (p(minus, z, x), p(minus, -z, x));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-3));
    }

    #[test]
    fn continuous_rotation_covariance(w in 0.1..2.0f64, theta in 0.0..TAU, z in -2.0..2.0f64, x in -2.0..2.0f64) {
        let cfg = MeasurementConfig::continuous(w).unwrap();
        let psi = QubitState::new(theta).unwrap();
        let (s, c) = theta.sin_cos();
        let (zr, xr) = (c * z + s * x, -s * z + c * x);
        let a = prob_density(z, x, &psi, &cfg).unwrap();
        let b = prob_density(zr, xr, &QubitState::zero(), &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-3), "{a} {b}");
    }

    #[test]
    fn density_is_nonnegative(w in 0.02..5.0f64, theta in 0.0..TAU, z in -3.0..3.0f64, x in -3.0..3.0f64, n in 1usize..10) {
        let psi = QubitState::new(theta).unwrap();
        prop_assert!(prob_density(z, x, &psi, &MeasurementConfig::continuous(w).unwrap()).unwrap() >= 0.0);
        for cfg in [MeasurementConfig::orthogonal(w, n).unwrap(), MeasurementConfig::diagonal(w, n).unwrap()] {
            prop_assert!(density_at(&evolve(&psi, &cfg).unwrap(), z, x) >= 0.0);
        }
    }
}
