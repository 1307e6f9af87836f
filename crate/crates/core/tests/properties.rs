use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use proptest::prelude::*;
use remote_tomo::config::{Mode, RunConfig, StateSpec};
use remote_tomo::interaction::{ApparatusPreparation, TrackingEvaluator};
use remote_tomo::states::{displaced_vacuum, gaussian_convolve, hermite_function, QuadratureDensity};
use remote_tomo::tomography::Apodization;
use remote_tomo::transit::{transit_corrected_observable, TransitParams};
use remote_tomo::{Grid1D, QuadratureAngle};

fn grid() -> impl Strategy<Value = Grid1D> {
    (-20.0..-1.0f64, 1.0..20.0f64, 2usize..2000).prop_map(|(a, b, n)| Grid1D::new(a, b, n).unwrap())
}

fn config() -> impl Strategy<Value = RunConfig> {
    let state = prop_oneof![
        (0usize..20).prop_map(StateSpec::Fock),
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(q0, p0)| StateSpec::DisplacedVacuum { q0, p0 }),
        "[a-z]{1,8}(/[a-z]{1,8}){0,2}\\.csv".prop_map(|p| StateSpec::File(PathBuf::from(p))),
    ];
    (
        state,
        any::<bool>(),
        1e-3..2.0f64,
        proptest::option::of(1e-3..10.0f64),
        2usize..720,
        (grid(), grid(), grid(), grid()),
        proptest::option::of(0.1..100.0f64),
        any::<bool>(),
        0.0..10.0f64,
        "[a-z]{1,10}",
    )
        .prop_map(|(state, exact, b1, b2, angle_count, grids, eta_max, cosine, omega_tau, output)| RunConfig {
            state,
            mode: if exact { Mode::Exact } else { Mode::Simulated },
            b1,
            b2,
            angle_count,
            u_grid: grids.0,
            w_grid: grids.1,
            dm_grid: grids.2,
            state_grid: grids.3,
            eta_max,
            apodization: if cosine { Apodization::Cosine } else { Apodization::None },
            omega_tau,
            output: PathBuf::from(output),
        })
}

proptest! {
    #[test]
    fn config_round_trip(c in config()) {
        prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn grid_points_stay_uniform(g in grid()) {
        let pts = g.to_vec();
        prop_assert_eq!(pts.len(), g.count());
        prop_assert_eq!(pts[0], g.min());
        prop_assert!((pts[pts.len() - 1] - g.max()).abs() <= 1e-12 * g.max().abs().max(1.0));
        let total: f64 = (0..g.count()).map(|i| g.weight(i)).sum();
        prop_assert!((total - (g.max() - g.min())).abs() < 1e-9 * (g.max() - g.min()));
    }

    #[test]
    fn rotations_are_orthogonal(theta in -20.0..20.0f64) {
        let r = QuadratureAngle::new(theta).rotation();
        let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        prop_assert!((det - 1.0).abs() < 1e-12);
        prop_assert!((r[0][0].powi(2) + r[0][1].powi(2) - 1.0).abs() < 1e-12);
        let a = QuadratureAngle::new(theta).radians();
        prop_assert!((0.0..TAU).contains(&a));
    }

    #[test]
    fn corrected_observables_have_unit_coefficients(theta in 0.0..PI, wt in 0.0..50.0f64) {
        let spec = transit_corrected_observable(QuadratureAngle::new(theta), TransitParams::from_phase(wt).unwrap());
        let (a, b) = spec.position_channel;
        let (c, d) = spec.momentum_channel;
        prop_assert!((a.hypot(b) - 1.0).abs() < 1e-12);
        prop_assert!((c.hypot(d) - 1.0).abs() < 1e-12);
        let shifted = transit_corrected_observable(QuadratureAngle::new(theta), TransitParams::from_phase(wt + TAU).unwrap());
        prop_assert!((shifted.position_channel.0 - a).abs() < 1e-9 && (shifted.position_channel.1 - b).abs() < 1e-9);
    }

    #[test]
    fn smearing_preserves_mass_and_mean(mu in -2.0..2.0f64, width in 0.3..1.5f64, sigma in 1e-3..1.0f64) {
        let ugrid = Grid1D::symmetric(16.0, 1281).unwrap();
        let values = ugrid.points().map(|u| (-(u - mu).powi(2) / (2.0 * width * width)).exp() / (width * TAU.sqrt())).collect();
        let d = QuadratureDensity { theta: QuadratureAngle::new(0.0), ugrid, values };
        let s = gaussian_convolve(&d, sigma).unwrap();
        prop_assert!((s.integral() - d.integral()).abs() < 1e-8);
        let mean: f64 = ugrid.points().enumerate().map(|(i, u)| u * s.values[i] * ugrid.weight(i)).sum();
        prop_assert!((mean - mu).abs() < 1e-6);
    }

    #[test]
    fn hermite_functions_have_parity(n in 0usize..20, q in 0.0..6.0f64) {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((hermite_function(n, -q) - sign * hermite_function(n, q)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Tracking rows of coherent states are Gaussians centred on the rotated
    /// mean with variance 1/2 + b1^2/2.
    #[test]
    fn coherent_tracking_rows(q0 in -2.0..2.0f64, p0 in -2.0..2.0f64, theta in 0.0..PI, b1 in 0.05..0.8f64) {
        let state = displaced_vacuum(q0, p0, Grid1D::default_state()).unwrap();
        let ugrid = Grid1D::symmetric(6.0, 97).unwrap();
        let a = QuadratureAngle::new(theta);
        let row = TrackingEvaluator::new(&state, ApparatusPreparation::symmetric(b1).unwrap()).y_theta_row(a, &ugrid).unwrap();
        let (c, s) = a.cos_sin();
        let (mu, var) = (q0 * c + p0 * s, 0.5 + 0.5 * b1 * b1);
        for (i, u) in ugrid.points().enumerate() {
            let expected = (-(u - mu).powi(2) / (2.0 * var)).exp() / (TAU * var).sqrt();
            prop_assert!((row[i] - expected).abs() < 1e-6, "u={} got {} want {}", u, row[i], expected);
        }
    }
}
