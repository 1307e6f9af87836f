//! Independent reference computations and the property ledger.
//!
//! The brute-force expectation integrates the joint amplitude directly, with
//! no analytic closure of any integral; the smeared Wigner references are
//! exact Wigner functions convolved with Gaussians on the grid.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::interaction::{
    final_system_stats, marginal_stats, tracking_commutator_norm, ApparatusPreparation, JointAmplitude, TrackingEvaluator,
};
use crate::quadrature::AdaptiveQuadrature;
use crate::states::{exact_wigner, gaussian_convolve, gaussian_smooth, oscillator_eigenstate, SystemState, WignerGrid, WignerProjector};
use crate::tomography::{build_sinogram, inverse_radon_wigner, RadonFilterConfig, SinogramMode};
use crate::transit::{expect_with_transit, TransitParams};

/// Resolution and tolerances for oracle runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    resolution_multiplier: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { resolution_multiplier: 2, tolerances: default_tolerances() }
    }
}

impl OracleConfig {
    pub fn new(resolution_multiplier: usize) -> Result<Self> {
        if resolution_multiplier < 2 {
            return Err(TomoError::InvalidParameter(format!(
                "oracle resolution multiplier {resolution_multiplier} must be at least 2"
            )));
        }
        Ok(Self { resolution_multiplier, tolerances: default_tolerances() })
    }

    pub fn resolution_multiplier(&self) -> usize {
        self.resolution_multiplier
    }

    pub fn tolerance(&self, property: &str) -> f64 {
        self.tolerances.get(property).copied().unwrap_or(1e-6)
    }
}

fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("convolution_identity", 1e-4),
        ("brute_force_vs_fused", 1e-5),
        ("brute_force_vs_convolution", 1e-5),
        ("dispersion_x1", 1e-5),
        ("dispersion_x2", 1e-5),
        ("final_position_variance", 1e-5),
        ("final_position_mean", 1e-6),
        ("transit_invariance", 1e-6),
        ("commutator_norm_floor", 0.01),
        ("vacuum_reconstruction_norm", 1e-3),
        ("vacuum_reconstruction_peak", 5e-3),
        ("smeared_reference_delta_limit", 1e-6),
        ("fock_rotation_invariance", 1e-6),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Evaluation budget of one brute-force point.
const BRUTE_FORCE_BUDGET: usize = 4_000_000_000;

/// `Tr rho_APP(T) Y_theta(u)` as
/// `(sqrt(pi)/b1)(1/2pi) int dq |int dv psi(q, u c - v s, u s + v c)|^2`,
/// each `psi` itself an adaptive integral over `xi`.
pub fn brute_force_expectation(
    state: &SystemState,
    prep: &ApparatusPreparation,
    theta: QuadratureAngle,
    u: f64,
    config: &OracleConfig,
) -> Result<f64> {
    prep.require_symmetric()?;
    let mult = config.resolution_multiplier;
    if mult < 2 {
        return Err(TomoError::InvalidParameter("oracle runs need a resolution multiplier of at least 2".into()));
    }
    let (b1, b2) = (prep.b1(), prep.b2());
    let (c, s) = theta.cos_sin();
    let (lo, hi) = state.support(1e-16);

    // Amplitude windows: |psi| ~ exp(-d^2/(8 b^2)) is below 1e-11 past d = 14 b.
    let reach = 14.0;
    let q_lo = lo - reach * b2;
    let q_hi = hi + reach * b2;
    let spread = (state.variance_position().max(state.variance_momentum())
        + prep.position_noise().max(prep.momentum_noise()))
    .sqrt();
    let centre = (state.mean_position().powi(2) + state.mean_momentum().powi(2)).sqrt();
    let v_half = centre + 14.0 * spread + u.abs();

    // Ten-point panels two Gaussian widths wide resolve every factor; the
    // multiplier refines from there.
    let finest = 2.0 * b1.min(b2).min(1.0) * 2.0 / mult as f64;
    let width_q = q_hi - q_lo;
    let tol = 1e-8 / mult as f64;
    let inner = AdaptiveQuadrature::default().with_tolerance(1e-14, tol);
    let middle = AdaptiveQuadrature::default()
        .with_tolerance(1e-13, tol)
        .with_initial_panels(((2.0 * v_half / finest).ceil() as usize).max(8));
    let outer = AdaptiveQuadrature::default()
        .with_tolerance(1e-12, tol)
        .with_initial_panels(((width_q / finest).ceil() as usize).max(8))
        .with_budget(BRUTE_FORCE_BUDGET);

    let g1 = 1.0 / (8.0 * b1 * b1);
    let g2 = 1.0 / (8.0 * b2 * b2);
    let norm = 1.0 / (2.0 * PI * (b1 * b2).sqrt());
    let psi = |q: f64, x1: f64, x2: f64| -> Result<num_complex::Complex64> {
        let c1 = 2.0 * x1 - q;
        let a = lo.max(c1 - reach * b1).max(q - reach * b2);
        let b = hi.min(c1 + reach * b1).min(q + reach * b2);
        if a >= b {
            return Ok(num_complex::Complex64::new(0.0, 0.0));
        }
        let panels = ((b - a) / finest).ceil() as usize;
        let v = inner.clone().with_oscillation(x2.abs()).with_initial_panels(panels.max(4)).integrate(a, b, |xi| {
            let d1 = c1 - xi;
            let d2 = q - xi;
            state.amplitude_at(xi) * num_complex::Complex64::from_polar((-(g1 * d1 * d1) - g2 * d2 * d2).exp(), d2 * x2)
        })?;
        Ok(v * norm)
    };

    let mut failure: Option<TomoError> = None;
    let total = outer.integrate_real(q_lo, q_hi, |q| {
        if failure.is_some() {
            return 0.0;
        }
        let column = middle.integrate(-v_half, v_half, |v| {
            if failure.is_some() {
                return num_complex::Complex64::new(0.0, 0.0);
            }
            match psi(q, u * c - v * s, u * s + v * c) {
                Ok(z) => z,
                Err(e) => {
                    failure = Some(e);
                    num_complex::Complex64::new(0.0, 0.0)
                }
            }
        });
        match column {
            Ok(z) => z.norm_sqr(),
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = failure {
        return Err(match e {
            TomoError::QuadratureNonConvergence(m) => TomoError::BudgetExceeded(m),
            other => other,
        });
    }
    let total = total.map_err(|e| match e {
        TomoError::QuadratureNonConvergence(m) => TomoError::BudgetExceeded(m),
        other => other,
    })?;
    Ok(PI.sqrt() / b1 / (2.0 * PI) * total)
}

/// Exact Wigner function convolved with a Gaussian of per-axis variances
/// `var_q`, `var_p` (zero variance leaves that axis untouched).
pub fn smeared_wigner(state: &SystemState, var_q: f64, var_p: f64, qgrid: &Grid1D, pgrid: &Grid1D) -> Result<WignerGrid> {
    if var_q < 0.0 || var_p < 0.0 {
        return Err(TomoError::InvalidParameter("smearing variances must be nonnegative".into()));
    }
    let mut w = exact_wigner(state, qgrid, pgrid)?;
    if var_p > 0.0 {
        for mut row in w.values.rows_mut() {
            let smoothed = gaussian_smooth(row.as_slice().expect("row layout"), pgrid.spacing(), var_p.sqrt());
            row.iter_mut().zip(smoothed).for_each(|(r, v)| *r = v);
        }
    }
    if var_q > 0.0 {
        for mut col in w.values.columns_mut() {
            let data: Vec<f64> = col.iter().cloned().collect();
            let smoothed = gaussian_smooth(&data, qgrid.spacing(), var_q.sqrt());
            col.iter_mut().zip(smoothed).for_each(|(r, v)| *r = v);
        }
    }
    Ok(w)
}

/// Exact Wigner function smeared by an isotropic Gaussian of per-axis
/// variance `b1^2 / 2`: the target of a reconstruction from finite-`b1`
/// apparatus expectations.
pub fn smeared_wigner_reference(state: &SystemState, b1: f64, qgrid: &Grid1D, pgrid: &Grid1D) -> Result<WignerGrid> {
    if !(b1 > 0.0) {
        return Err(TomoError::InvalidParameter(format!("b1 = {b1} must be positive")));
    }
    let v = 0.5 * b1 * b1;
    smeared_wigner(state, v, v, qgrid, pgrid)
}

/// Joint distribution of the simultaneous position-momentum measurement with
/// balanced unit apparatus, the Husimi function: Wigner smeared by variance
/// `1/2` per axis.
pub fn arthurs_kelly_distribution(state: &SystemState, qgrid: &Grid1D, pgrid: &Grid1D) -> Result<WignerGrid> {
    smeared_wigner(state, 0.5, 0.5, qgrid, pgrid)
}

/// One line of the verification ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub property: String,
    pub tolerance: f64,
    pub measured: f64,
    pub pass: bool,
}

impl LedgerEntry {
    /// Passes when `measured <= tolerance`.
    fn at_most(property: &str, tolerance: f64, measured: f64) -> Self {
        Self { property: property.into(), tolerance, measured, pass: measured <= tolerance }
    }

    /// Passes when `measured > floor`.
    fn above(property: &str, floor: f64, measured: f64) -> Self {
        Self { property: property.into(), tolerance: floor, measured, pass: measured > floor }
    }
}

/// Runs the oracle ledger at default resolution.
pub fn run_ledger(config: &OracleConfig) -> Result<Vec<LedgerEntry>> {
    let sgrid = Grid1D::default_state();
    let ugrid = Grid1D::default_phase_space();
    let mut out = Vec::new();
    let fock: Vec<SystemState> = (0..4).map(|n| oscillator_eigenstate(n, sgrid)).collect::<Result<_>>()?;

    // Convolution identity over states, widths and angles.
    let mut worst: f64 = 0.0;
    for s in &fock {
        let projector = WignerProjector::new(s)?;
        for b1 in [0.1, 0.3, FRAC_1_SQRT_2] {
            let eval = TrackingEvaluator::new(s, ApparatusPreparation::symmetric(b1)?);
            for theta in [0.0, FRAC_PI_4, FRAC_PI_2].map(QuadratureAngle::new) {
                let row = eval.y_theta_row(theta, &ugrid)?;
                let oracle = gaussian_convolve(&projector.density(theta, &ugrid), b1 / 2f64.sqrt())?;
                for (i, u) in ugrid.points().enumerate() {
                    if u.abs() <= 5.0 {
                        worst = worst.max((row[i] - oracle.values[i]).abs());
                    }
                }
            }
        }
    }
    out.push(LedgerEntry::at_most("convolution_identity", config.tolerance("convolution_identity"), worst));

    // Brute force against the fused route and the convolution oracle.
    let prep = ApparatusPreparation::symmetric(0.3)?;
    let theta0 = QuadratureAngle::new(0.0);
    let brute = brute_force_expectation(&fock[0], &prep, theta0, 0.0, config)?;
    let conv = 1.0 / (2.0 * PI * (0.5 + 0.045)).sqrt();
    out.push(LedgerEntry::at_most(
        "brute_force_vs_convolution",
        config.tolerance("brute_force_vs_convolution"),
        (brute - conv).abs(),
    ));
    let sym = ApparatusPreparation::symmetric(FRAC_1_SQRT_2)?;
    let theta = QuadratureAngle::new(0.6);
    let fused = TrackingEvaluator::new(&fock[3], sym).y_theta_row(theta, &Grid1D::new(-0.5, 0.5, 3)?)?[2];
    let brute = brute_force_expectation(&fock[3], &sym, theta, 0.5, config)?;
    out.push(LedgerEntry::at_most("brute_force_vs_fused", config.tolerance("brute_force_vs_fused"), (brute - fused).abs()));

    // Dispersions.
    let balanced = ApparatusPreparation::symmetric(FRAC_1_SQRT_2)?;
    let (mut dx1, mut dx2, mut dq, mut mq): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for s in [&fock[0], &fock[3]] {
        let joint = JointAmplitude::new(s, balanced)?;
        let m = marginal_stats(&joint)?;
        let f = final_system_stats(&joint)?;
        dx1 = dx1.max((m.var_x1 - s.variance_position() - balanced.position_noise()).abs());
        dx2 = dx2.max((m.var_x2 - s.variance_momentum() - balanced.momentum_noise()).abs());
        dq = dq.max((f.var_q - s.variance_position() - 2.0 * balanced.b2().powi(2)).abs());
        mq = mq.max((f.mean_q - s.mean_position()).abs());
    }
    out.push(LedgerEntry::at_most("dispersion_x1", config.tolerance("dispersion_x1"), dx1));
    out.push(LedgerEntry::at_most("dispersion_x2", config.tolerance("dispersion_x2"), dx2));
    out.push(LedgerEntry::at_most("final_position_variance", config.tolerance("final_position_variance"), dq));
    out.push(LedgerEntry::at_most("final_position_mean", config.tolerance("final_position_mean"), mq));

    // Transit invariance at one point.
    let narrow = ApparatusPreparation::symmetric(0.1)?;
    let base = crate::interaction::expect_y_theta(&fock[3], &narrow, theta0, 0.5)?;
    let mut worst: f64 = 0.0;
    for wt in [0.3, FRAC_PI_2, 2.0 * PI] {
        let v = expect_with_transit(&fock[3], &narrow, theta0, 0.5, TransitParams::from_phase(wt)?)?;
        worst = worst.max((v - base).abs());
    }
    out.push(LedgerEntry::at_most("transit_invariance", config.tolerance("transit_invariance"), worst));

    // Fock rotation invariance of the simulated expectation.
    let eval = TrackingEvaluator::new(&fock[3], narrow);
    let g = Grid1D::symmetric(4.0, 33)?;
    let a = eval.y_theta_row(theta0, &g)?;
    let b = eval.y_theta_row(QuadratureAngle::new(PI / 3.0), &g)?;
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    out.push(LedgerEntry::at_most("fock_rotation_invariance", config.tolerance("fock_rotation_invariance"), worst));

    // Non-commutativity.
    let cgrid = Grid1D::symmetric(4.0, 33)?;
    let norm = tracking_commutator_norm(&balanced, &cgrid, 0.0, 0.0);
    out.push(LedgerEntry::above("commutator_norm_floor", config.tolerance("commutator_norm_floor"), norm));

    // Vacuum reconstruction normalization.
    let sino = build_sinogram(&fock[0], SinogramMode::Exact, &QuadratureAngle::half_turn(90), &ugrid)?;
    let wg = Grid1D::symmetric(6.0, 121)?;
    let w = inverse_radon_wigner(&sino, &wg, &wg, &RadonFilterConfig::for_grid(&ugrid))?;
    out.push(LedgerEntry::at_most(
        "vacuum_reconstruction_norm",
        config.tolerance("vacuum_reconstruction_norm"),
        (w.integral() - 1.0).abs(),
    ));
    out.push(LedgerEntry::at_most(
        "vacuum_reconstruction_peak",
        config.tolerance("vacuum_reconstruction_peak"),
        (w.nearest(0.0, 0.0) - 1.0 / PI).abs(),
    ));

    // Smeared reference delta limit.
    let rg = Grid1D::symmetric(6.0, 193)?;
    let exact = exact_wigner(&fock[3], &rg, &rg)?;
    let smeared = smeared_wigner_reference(&fock[3], 1e-4, &rg, &rg)?;
    let worst = exact.values.iter().zip(smeared.values.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    out.push(LedgerEntry::at_most(
        "smeared_reference_delta_limit",
        config.tolerance("smeared_reference_delta_limit"),
        worst,
    ));
    Ok(out)
}
