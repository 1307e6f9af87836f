//! Free evolution of the apparatus photons between the interaction and the
//! measurement, and the quadrature substitution that undoes it.
//!
//! Quadratures follow `x = (a + a^dagger)/sqrt(2)`, `p = -i (a - a^dagger)/sqrt(2)`,
//! so `H0 = omega (a1^dagger a1 + a2^dagger a2 + 1)` rotates each apparatus mode
//! rigidly: `x -> x cos(w t) + p sin(w t)`, `p -> p cos(w t) - x sin(w t)`.
//!
//! Expectations are evaluated through the characteristic function of the
//! apparatus state. In the Heisenberg picture the interaction maps
//! `x1 -> x1 + q + p2/2`, `x2 -> x2 + p - p1/2`, leaving `p1`, `p2` fixed, so
//! for `l = (l_x1, l_p1, l_x2, l_p2)`
//!
//! ```text
//! <exp(i l.R)> = chi_sys(l_x1, l_x2)
//!              exp(-l_x1^2 b1^2/4 - (l_p1 - l_x2/2)^2 / (4 b1^2))
//!              exp(-l_x2^2 / (16 b2^2) - (l_p2 + l_x1/2)^2 b2^2)
//! ```
//!
//! and `Tr rho (sqrt(pi)/b1) delta(X - u) delta(P)` for commuting linear forms
//! `X`, `P` is `(sqrt(pi)/b1)(2 pi)^-2 int d alpha d beta exp(-i alpha u) chi(alpha X + beta P)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::interaction::ApparatusPreparation;
use crate::quadrature::GaussLegendre;
use crate::states::SystemState;
use crate::tomography::{stack, Sinogram, SinogramSource};

/// Shared photon frequency and transit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitParams {
    pub omega: f64,
    pub tau: f64,
}

impl TransitParams {
    pub fn new(omega: f64, tau: f64) -> Result<Self> {
        if !(omega >= 0.0 && tau >= 0.0 && omega.is_finite() && tau.is_finite()) {
            return Err(TomoError::InvalidParameter(format!("omega = {omega}, tau = {tau} must be nonnegative")));
        }
        Ok(Self { omega, tau })
    }

    /// Phase `omega tau` with unit frequency.
    pub fn from_phase(omega_tau: f64) -> Result<Self> {
        Self::new(1.0, omega_tau)
    }

    /// Separate photon frequencies; only equal ones are supported.
    pub fn with_frequencies(omega1: f64, omega2: f64, tau: f64) -> Result<Self> {
        if (omega1 - omega2).abs() > 1e-12 * omega1.abs().max(omega2.abs()).max(1.0) {
            return Err(TomoError::UnsupportedConfiguration(format!(
                "photon frequencies {omega1} and {omega2} differ"
            )));
        }
        Self::new(omega1, tau)
    }

    pub fn none() -> Self {
        Self { omega: 0.0, tau: 0.0 }
    }

    /// `omega tau` reduced to `[0, 2 pi)`.
    pub fn phase(&self) -> f64 {
        (self.omega * self.tau).rem_euclid(TAU)
    }
}

/// Mixing coefficients of the measured quadratures: `(a, b)` measures
/// `a x1_theta + b p1_theta` on the first channel and `(c, d)` measures
/// `c p2_theta + d x2_theta` on the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub position_channel: (f64, f64),
    pub momentum_channel: (f64, f64),
}

impl ObservableSpec {
    pub fn identity() -> Self {
        Self { position_channel: (1.0, 0.0), momentum_channel: (1.0, 0.0) }
    }
}

/// Quadratures to measure after a transit so that the expectations equal the
/// ones at the end of the interaction.
pub fn transit_corrected_observable(_theta: QuadratureAngle, transit: TransitParams) -> ObservableSpec {
    let (s, c) = transit.phase().sin_cos();
    ObservableSpec { position_channel: (c, -s), momentum_channel: (c, s) }
}

type Form = [f64; 4];

/// Linear forms of the two measured quadratures on `(x1, p1, x2, p2)`,
/// pulled back through the free evolution to the end of the interaction.
fn pulled_back_forms(theta: QuadratureAngle, spec: &ObservableSpec, transit: TransitParams) -> (Form, Form) {
    let (c, s) = theta.cos_sin();
    let x1t = [c, 0.0, s, 0.0];
    let p1t = [0.0, c, 0.0, s];
    let x2t = [-s, 0.0, c, 0.0];
    let p2t = [0.0, -s, 0.0, c];
    let (a, b) = spec.position_channel;
    let (cc, d) = spec.momentum_channel;
    let x: Form = std::array::from_fn(|k| a * x1t[k] + b * p1t[k]);
    let p: Form = std::array::from_fn(|k| cc * p2t[k] + d * x2t[k]);
    let (sw, cw) = transit.phase().sin_cos();
    let back = |l: Form| -> Form {
        [
            l[0] * cw - l[1] * sw,
            l[0] * sw + l[1] * cw,
            l[2] * cw - l[3] * sw,
            l[2] * sw + l[3] * cw,
        ]
    };
    (back(x), back(p))
}

/// Apparatus Gaussian exponent for a form at the end of the interaction.
fn apparatus_exponent(l: &Form, prep: &ApparatusPreparation) -> f64 {
    let (b1, b2) = (prep.b1(), prep.b2());
    let m1 = l[1] - 0.5 * l[2];
    let m2 = l[3] + 0.5 * l[0];
    -(l[0] * l[0] * b1 * b1 / 4.0) - m1 * m1 / (4.0 * b1 * b1) - l[2] * l[2] / (16.0 * b2 * b2) - m2 * m2 * b2 * b2
}

/// Row of `Tr rho_APP(T + tau) Y(u)` for the given measured quadratures.
pub fn transit_row(
    state: &SystemState,
    prep: &ApparatusPreparation,
    theta: QuadratureAngle,
    ugrid: &Grid1D,
    transit: TransitParams,
    spec: &ObservableSpec,
) -> Result<Vec<f64>> {
    prep.require_symmetric()?;
    let (lx, lp) = pulled_back_forms(theta, spec, transit);
    let at = |alpha: f64, beta: f64| -> Form { std::array::from_fn(|k| alpha * lx[k] + beta * lp[k]) };

    // Quadratic form of the apparatus exponent in beta fixes the window.
    let e0 = apparatus_exponent(&at(0.0, 1.0), prep);
    let curvature = -e0;
    let beta_sd = (0.5 / curvature).sqrt();
    let cross = |alpha: f64| {
        // exponent(alpha, beta) = e_aa alpha^2 + 2 e_ab alpha beta + e_bb beta^2
        let e_ab = 0.5 * (apparatus_exponent(&at(alpha, 1.0), prep) - apparatus_exponent(&at(alpha, 0.0), prep) - e0);
        -e_ab / e0
    };
    let sys_depends_on_beta = lp[0].abs() > 1e-14 || lp[2].abs() > 1e-14;
    let rule = GaussLegendre::ten();

    let g = |alpha: f64| -> Complex64 {
        let centre = cross(alpha);
        let nodes = rule.composite(centre - 12.0 * beta_sd, centre + 12.0 * beta_sd, 24);
        let fixed = (!sys_depends_on_beta).then(|| {
            let l = at(alpha, 0.0);
            state.characteristic(l[0], l[2])
        });
        nodes
            .iter()
            .map(|&(beta, w)| {
                let l = at(alpha, beta);
                let sys = fixed.unwrap_or_else(|| state.characteristic(l[0], l[2]));
                sys * (apparatus_exponent(&l, prep).exp() * w)
            })
            .sum()
    };

    let (lo, hi) = state.support(1e-16);
    let radius = lo.abs().max(hi.abs()).max(8.0);
    let umax = ugrid.min().abs().max(ugrid.max().abs());
    let spread = 12.0 * (prep.b1() + 1.0 / prep.b1());
    let period = 2.0 * (umax + radius + spread) + 8.0;
    let da = TAU / period;
    let amax = PI / state.grid().spacing();

    let mut samples = vec![(0.0, g(0.0))];
    let mut quiet = 0;
    let mut k = 1;
    loop {
        let alpha = k as f64 * da;
        if alpha > amax {
            break;
        }
        let v = g(alpha);
        samples.push((alpha, v));
        if v.norm() < 1e-16 {
            quiet += 1;
            if quiet >= 16 {
                break;
            }
        } else {
            quiet = 0;
        }
        k += 1;
    }
    let scale = PI.sqrt() / prep.b1() / (4.0 * PI * PI) * 2.0 * da;
    Ok(ugrid
        .points()
        .map(|u| {
            let mut acc = 0.5 * samples[0].1.re;
            for &(alpha, v) in &samples[1..] {
                acc += (v * Complex64::from_polar(1.0, -alpha * u)).re;
            }
            acc * scale
        })
        .collect())
}

/// `Tr rho_APP(T + tau)` of the transit-corrected observable at one `u`.
pub fn expect_with_transit(
    state: &SystemState,
    prep: &ApparatusPreparation,
    theta: QuadratureAngle,
    u: f64,
    transit: TransitParams,
) -> Result<f64> {
    let g = Grid1D::new(u - 1.0, u + 1.0, 3)?;
    let spec = transit_corrected_observable(theta, transit);
    Ok(transit_row(state, prep, theta, &g, transit, &spec)?[1])
}

/// Sinogram measured after the transit, with or without the substitution.
///
/// Uncorrected rows are generally not densities of the system, so they are
/// returned as raw rows rather than a validated sinogram.
pub fn transit_rows(
    state: &SystemState,
    prep: &ApparatusPreparation,
    angles: &[QuadratureAngle],
    ugrid: &Grid1D,
    transit: TransitParams,
    corrected: bool,
) -> Result<Vec<Vec<f64>>> {
    angles
        .par_iter()
        .map(|&a| {
            let spec = if corrected { transit_corrected_observable(a, transit) } else { ObservableSpec::identity() };
            transit_row(state, prep, a, ugrid, transit, &spec)
        })
        .collect()
}

/// Corrected transit sinogram.
pub fn transit_sinogram(
    state: &SystemState,
    prep: &ApparatusPreparation,
    angles: &[QuadratureAngle],
    ugrid: &Grid1D,
    transit: TransitParams,
) -> Result<Sinogram> {
    let rows = transit_rows(state, prep, angles, ugrid, transit, true)?;
    Sinogram::new(angles.to_vec(), *ugrid, stack(&rows, ugrid.count()), SinogramSource::Simulated { b1: prep.b1() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::expect_y_theta;
    use crate::states::oscillator_eigenstate;
    use approx::assert_abs_diff_eq;

    fn fock3() -> SystemState {
        oscillator_eigenstate(3, Grid1D::default_state()).unwrap()
    }

    #[test]
    fn observable_specs() {
        let t = QuadratureAngle::new(0.4);
        let id = transit_corrected_observable(t, TransitParams::none());
        assert_eq!(id, ObservableSpec::identity());
        let full = transit_corrected_observable(t, TransitParams::from_phase(TAU).unwrap());
        assert_abs_diff_eq!(full.position_channel.0, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(full.position_channel.1, 0.0, epsilon = 1e-15);
        let quarter = transit_corrected_observable(t, TransitParams::from_phase(0.5 * PI).unwrap());
        assert_abs_diff_eq!(quarter.position_channel.0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(quarter.position_channel.1, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(quarter.momentum_channel.1, 1.0, epsilon = 1e-15);
        let any = transit_corrected_observable(t, TransitParams::from_phase(1.1).unwrap());
        let (a, b) = any.position_channel;
        assert_abs_diff_eq!(a * a + b * b, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unequal_frequencies_rejected() {
        assert!(matches!(
            TransitParams::with_frequencies(1.0, 1.5, 2.0),
            Err(TomoError::UnsupportedConfiguration(_))
        ));
        assert!(TransitParams::with_frequencies(2.0, 2.0, 0.1).is_ok());
    }

    #[test]
    fn corrected_expectation_is_transit_invariant() {
        let prep = ApparatusPreparation::symmetric(0.1).unwrap();
        let theta = QuadratureAngle::new(0.0);
        let reference = expect_y_theta(&fock3(), &prep, theta, 0.5).unwrap();
        for wt in [0.0, 0.3, 0.5 * PI, TAU] {
            let v = expect_with_transit(&fock3(), &prep, theta, 0.5, TransitParams::from_phase(wt).unwrap()).unwrap();
            assert_abs_diff_eq!(v, reference, epsilon = 1e-6);
        }
    }

    #[test]
    fn general_angle_matches_fused_route() {
        let prep = ApparatusPreparation::symmetric(0.3).unwrap();
        let s = crate::states::displaced_vacuum(0.7, -1.1, Grid1D::default_state()).unwrap();
        let theta = QuadratureAngle::new(1.0);
        for u in [-1.0, 0.2, 1.5] {
            let a = expect_y_theta(&s, &prep, theta, u).unwrap();
            let b = expect_with_transit(&s, &prep, theta, u, TransitParams::from_phase(2.2).unwrap()).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn uncorrected_quarter_period_deviates() {
        let prep = ApparatusPreparation::symmetric(0.1).unwrap();
        let theta = QuadratureAngle::new(0.0);
        let g = Grid1D::symmetric(4.0, 33).unwrap();
        let reference = crate::interaction::TrackingEvaluator::new(&fock3(), prep).y_theta_row(theta, &g).unwrap();
        let raw = transit_row(&fock3(), &prep, theta, &g, TransitParams::from_phase(0.5 * PI).unwrap(), &ObservableSpec::identity()).unwrap();
        let worst = raw.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-2, "worst {worst}");
    }

    #[test]
    fn periodic_in_phase() {
        let prep = ApparatusPreparation::symmetric(0.3).unwrap();
        let g = Grid1D::symmetric(3.0, 7).unwrap();
        let theta = QuadratureAngle::new(0.7);
        let id = ObservableSpec::identity();
        let a = transit_row(&fock3(), &prep, theta, &g, TransitParams::from_phase(0.4).unwrap(), &id).unwrap();
        let b = transit_row(&fock3(), &prep, theta, &g, TransitParams::from_phase(0.4 + TAU).unwrap(), &id).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
