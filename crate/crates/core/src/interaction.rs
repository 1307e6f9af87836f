//! Arthurs-Kelly evolution of one system mode coupled to two apparatus modes.
//!
//! With `KT = 1` the joint amplitude after the interaction is
//!
//! ```text
//! psi(q, x1, x2) = int dxi phi(xi) exp(i (q - xi) x2) / (2 pi sqrt(b1 b2))
//!                  * exp(-(2 x1 - q - xi)^2 / (8 b1^2) - (q - xi)^2 / (8 b2^2))
//! ```
//!
//! evaluated here by adaptive quadrature over `xi`. The apparatus density
//! matrix is never stored: its elements are traced over `q` on demand, and the
//! expectations of the tracking observables integrate the trace and both `xi`
//! integrals in one fused pass.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::quadrature::{AdaptiveQuadrature, GaussLegendre};
use crate::states::SystemState;

/// Gaussian factors `exp(-d^2 / (8 b^2))` are dropped beyond `d = REACH * b`.
const REACH: f64 = 18.0;

/// Gaussian apparatus preparation: `chi1` of width `b1`, `chi2` of width `1/(2 b2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusPreparation {
    b1: f64,
    b2: f64,
    symmetric: bool,
}

impl ApparatusPreparation {
    /// Rotationally invariant preparation `2 b1 b2 = 1`.
    pub fn symmetric(b1: f64) -> Result<Self> {
        check_width("b1", b1)?;
        Ok(Self { b1, b2: 0.5 / b1, symmetric: true })
    }

    /// Arbitrary widths; flagged symmetric when `2 b1 b2 = 1` holds.
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        check_width("b1", b1)?;
        check_width("b2", b2)?;
        let symmetric = (2.0 * b1 * b2 - 1.0).abs() < 1e-12;
        Ok(Self { b1, b2, symmetric })
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.symmetric {
            Ok(())
        } else {
            Err(TomoError::NonSymmetricPreparation { b1: self.b1, b2: self.b2 })
        }
    }

    /// Extra variance of `x1` over the system position: `(b1^2 + b2^2)/2`.
    pub fn position_noise(&self) -> f64 {
        0.5 * (self.b1 * self.b1 + self.b2 * self.b2)
    }

    /// Extra variance of `x2` over the system momentum: `(b1^2 + b2^2)/(8 b1^2 b2^2)`.
    pub fn momentum_noise(&self) -> f64 {
        (self.b1 * self.b1 + self.b2 * self.b2) / (8.0 * self.b1 * self.b1 * self.b2 * self.b2)
    }

    /// Variance of the Gaussian smearing seen through `Y_theta`: `b1^2 / 2`.
    pub fn tracking_variance(&self) -> f64 {
        0.5 * self.b1 * self.b1
    }

    /// Variance of the Gaussian smearing seen through `Z`: `1 / (8 b2^2)`.
    pub fn momentum_tracking_variance(&self) -> f64 {
        1.0 / (8.0 * self.b2 * self.b2)
    }

    /// `chi1(x) = pi^{-1/4} b1^{-1/2} exp(-x^2 / (2 b1^2))`.
    pub fn chi1(&self, x: f64) -> f64 {
        PI.powf(-0.25) / self.b1.sqrt() * (-x * x / (2.0 * self.b1 * self.b1)).exp()
    }

    /// `chi2(x) = pi^{-1/4} (2 b2)^{1/2} exp(-2 b2^2 x^2)`.
    pub fn chi2(&self, x: f64) -> f64 {
        PI.powf(-0.25) * (2.0 * self.b2).sqrt() * (-2.0 * self.b2 * self.b2 * x * x).exp()
    }
}

fn check_width(name: &str, b: f64) -> Result<()> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(TomoError::InvalidParameter(format!("{name} = {b} must be positive and finite")))
    }
}

/// Coupling strength and duration; only the product `KT = 1` enters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams {
    pub coupling: f64,
    pub duration: f64,
}

impl InteractionParams {
    pub fn new(coupling: f64, duration: f64) -> Result<Self> {
        if !(coupling > 0.0 && duration > 0.0) || (coupling * duration - 1.0).abs() > 1e-12 {
            return Err(TomoError::UnsupportedConfiguration(format!(
                "K T = {} but the evolution is solved for K T = 1",
                coupling * duration
            )));
        }
        Ok(Self { coupling, duration })
    }

    pub fn unit() -> Self {
        Self { coupling: 1.0, duration: 1.0 }
    }
}

/// `psi(q, x1, x2)` by adaptive quadrature over the internal variable `xi`.
pub fn joint_amplitude(state: &SystemState, prep: &ApparatusPreparation, q: f64, x1: f64, x2: f64) -> Result<Complex64> {
    let (lo, hi) = state.support(1e-16);
    joint_amplitude_on(state, prep, (lo, hi), q, x1, x2, &AdaptiveQuadrature::default())
}

fn joint_amplitude_on(
    state: &SystemState,
    prep: &ApparatusPreparation,
    (lo, hi): (f64, f64),
    q: f64,
    x1: f64,
    x2: f64,
    quad: &AdaptiveQuadrature,
) -> Result<Complex64> {
    let (b1, b2) = (prep.b1, prep.b2);
    let c1 = 2.0 * x1 - q;
    let a = lo.max(c1 - REACH * b1).max(q - REACH * b2);
    let b = hi.min(c1 + REACH * b1).min(q + REACH * b2);
    if a >= b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let norm = 1.0 / (2.0 * PI * (b1 * b2).sqrt());
    let g1 = 1.0 / (8.0 * b1 * b1);
    let g2 = 1.0 / (8.0 * b2 * b2);
    // Panels no wider than the narrower Gaussian.
    let panels = ((b - a) / (2.0 * b1.min(b2))).ceil() as usize;
    let quad = quad.clone().with_oscillation(x2.abs()).with_initial_panels(panels.clamp(4, 4096));
    let v = quad.integrate(a, b, |xi| {
        let d1 = c1 - xi;
        let d2 = q - xi;
        let env = (-(g1 * d1 * d1) - g2 * d2 * d2).exp();
        if env < 1e-300 {
            return Complex64::new(0.0, 0.0);
        }
        state.amplitude_at(xi) * Complex64::from_polar(env, d2 * x2)
    })?;
    Ok(v * norm)
}

type Key = (u64, u64);

/// Joint post-interaction amplitude with a fixed trace rule over `q` and a
/// per-`(x1, x2)` cache of amplitudes on its nodes.
#[derive(Debug)]
pub struct JointAmplitude {
    state: SystemState,
    prep: ApparatusPreparation,
    support: (f64, f64),
    qnodes: Vec<(f64, f64)>,
    quad: AdaptiveQuadrature,
    cache: RwLock<HashMap<Key, Arc<Vec<Complex64>>>>,
}

impl JointAmplitude {
    pub fn new(state: &SystemState, prep: ApparatusPreparation) -> Result<Self> {
        let support = state.support(1e-16);
        let reach = REACH * prep.b2 + 0.5;
        let (a, b) = (support.0 - reach, support.1 + reach);
        let width = 0.5f64.min(prep.b1).min(prep.b2);
        let panels = ((b - a) / width).ceil() as usize;
        if panels > 200_000 {
            return Err(TomoError::BudgetExceeded(format!("trace rule would need {panels} panels")));
        }
        let qnodes = GaussLegendre::ten().composite(a, b, panels);
        let quad = AdaptiveQuadrature::default().with_tolerance(1e-15, 1e-10);
        Ok(Self { state: state.clone(), prep, support, qnodes, quad, cache: RwLock::new(HashMap::new()) })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn preparation(&self) -> &ApparatusPreparation {
        &self.prep
    }

    /// `psi(q, x1, x2)` at an arbitrary point.
    pub fn amplitude(&self, q: f64, x1: f64, x2: f64) -> Result<Complex64> {
        joint_amplitude_on(&self.state, &self.prep, self.support, q, x1, x2, &self.quad)
    }

    /// Amplitudes on the trace nodes for one apparatus point.
    ///
    /// Uses a fixed composite rule in `xi` with panels no wider than the
    /// narrower Gaussian or one radian of the `exp(-i xi x2)` phase.
    fn column(&self, x1: f64, x2: f64) -> Result<Arc<Vec<Complex64>>> {
        let key = (x1.to_bits(), x2.to_bits());
        if let Some(c) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let (b1, b2) = (self.prep.b1, self.prep.b2);
        let (lo, hi) = self.support;
        let width = 0.5f64.min(b1).min(b2).min(2.0 / (x2.abs() + 1.0));
        let panels = ((hi - lo) / width).ceil() as usize;
        if panels > 1_000_000 {
            return Err(TomoError::BudgetExceeded(format!("xi rule would need {panels} panels")));
        }
        let xi_rule: Vec<(f64, Complex64)> = GaussLegendre::ten()
            .composite(lo, hi, panels)
            .into_iter()
            .map(|(xi, w)| (xi, self.state.amplitude_at(xi) * Complex64::from_polar(w, -xi * x2)))
            .collect();
        let norm = 1.0 / (2.0 * PI * (b1 * b2).sqrt());
        let g1 = 1.0 / (8.0 * b1 * b1);
        let g2 = 1.0 / (8.0 * b2 * b2);
        let first = |bound: f64| xi_rule.partition_point(|&(xi, _)| xi < bound);
        let col = self
            .qnodes
            .iter()
            .map(|&(q, _)| {
                let c1 = 2.0 * x1 - q;
                let a = (c1 - REACH * b1).max(q - REACH * b2);
                let b = (c1 + REACH * b1).min(q + REACH * b2);
                if a >= b {
                    return Complex64::new(0.0, 0.0);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for &(xi, a_k) in &xi_rule[first(a)..first(b)] {
                    let d1 = c1 - xi;
                    let d2 = q - xi;
                    acc += a_k * (-(g1 * d1 * d1) - g2 * d2 * d2).exp();
                }
                acc * Complex64::from_polar(norm, q * x2)
            })
            .collect();
        let col = Arc::new(col);
        self.cache.write().expect("cache lock").insert(key, Arc::clone(&col));
        Ok(col)
    }

    /// `<x1, x2| rho_APP |x1', x2'> = int psi(q, x1, x2) psi*(q, x1', x2') dq`.
    pub fn density_element(&self, x1: f64, x2: f64, x1p: f64, x2p: f64) -> Result<Complex64> {
        let a = self.column(x1, x2)?;
        let b = self.column(x1p, x2p)?;
        Ok(self.qnodes.iter().zip(a.iter().zip(b.iter())).map(|(&(_, w), (u, v))| u * v.conj() * w).sum())
    }

    /// `sum |psi|^2 dq dx1 dx2` with the trace rule in `q` and trapezoid
    /// sums over the apparatus grids.
    pub fn global_norm(&self, x1grid: &Grid1D, x2grid: &Grid1D) -> Result<f64> {
        let mut total = 0.0;
        for (i, x1) in x1grid.points().enumerate() {
            for (j, x2) in x2grid.points().enumerate() {
                let p = self.density_element(x1, x2, x1, x2)?.re;
                total += p * x1grid.weight(i) * x2grid.weight(j);
            }
        }
        Ok(total)
    }

    pub fn clear_cache(&self) {
        self.cache.write().expect("cache lock").clear();
    }
}

/// `<x1, x2| rho_APP |x1', x2'>` traced over the system coordinate.
pub fn apparatus_density_element(joint: &JointAmplitude, x1: f64, x2: f64, x1p: f64, x2p: f64) -> Result<Complex64> {
    joint.density_element(x1, x2, x1p, x2p)
}

/// Means and variances of the apparatus pointer positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalStats {
    pub mean_x1: f64,
    pub var_x1: f64,
    pub mean_x2: f64,
    pub var_x2: f64,
}

/// Position statistics of the system after the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSystemStats {
    pub mean_q: f64,
    pub var_q: f64,
}

/// Centered Gaussian quadrature nodes for a density of the given variance.
fn gaussian_nodes(variance: f64) -> Vec<(f64, f64)> {
    let sd = variance.sqrt();
    let norm = 1.0 / (2.0 * PI * variance).sqrt();
    GaussLegendre::ten()
        .composite(-12.0 * sd, 12.0 * sd, 12)
        .into_iter()
        .map(|(x, w)| (x, w * norm * (-x * x / (2.0 * variance)).exp()))
        .collect()
}

/// Mean and variance of `a + b + c/2`-type sums of three independent
/// variables, integrated as a triple sum.
fn moments3(first: &[(f64, f64)], second: &[(f64, f64)], third: &[(f64, f64)], combine: impl Fn(f64, f64, f64) -> f64) -> (f64, f64) {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for &(a, wa) in first {
        if wa == 0.0 {
            continue;
        }
        for &(b, wb) in second {
            let wab = wa * wb;
            for &(c, wc) in third {
                let w = wab * wc;
                let v = combine(a, b, c);
                m0 += w;
                m1 += w * v;
                m2 += w * v * v;
            }
        }
    }
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

fn position_samples(state: &SystemState) -> Vec<(f64, f64)> {
    let g = state.grid();
    state.amplitudes().iter().enumerate().map(|(i, a)| (g.point(i), a.norm_sqr() * g.weight(i))).collect()
}

fn momentum_samples(state: &SystemState) -> Vec<(f64, f64)> {
    // Same sampling as the position grid; the state is band limited well
    // inside its Nyquist range.
    let g = state.grid();
    g.points()
        .enumerate()
        .map(|(i, p)| (p, state.momentum_amplitude(p).norm_sqr() * g.weight(i)))
        .collect()
}

/// Pointer statistics of the apparatus after the interaction.
///
/// In the mixed `(q, x1, p2)` representation the evolved amplitude is the
/// product `chi1(x1 - q + p2/2) chi2~(p2) phi(q - p2)`, so `x1` is distributed
/// as `xi + w + p2/2` with `xi ~ |phi|^2`, `w ~ |chi1|^2`, `p2 ~ |chi2~|^2`.
/// The mirror `(p, p1, x2)` representation gives `x2` as `k + y - p1/2` with
/// `k ~ |phi~|^2`, `y ~ |chi2|^2` and `p1 ~ |chi1~|^2`.
pub fn marginal_stats(joint: &JointAmplitude) -> Result<MarginalStats> {
    let prep = joint.prep;
    let (b1, b2) = (prep.b1, prep.b2);
    let xs = position_samples(&joint.state);
    let ps = momentum_samples(&joint.state);
    let chi1_pos = gaussian_nodes(0.5 * b1 * b1);
    let chi2_mom = gaussian_nodes(2.0 * b2 * b2);
    let chi2_pos = gaussian_nodes(1.0 / (8.0 * b2 * b2));
    let chi1_mom = gaussian_nodes(1.0 / (2.0 * b1 * b1));
    let (mean_x1, var_x1) = moments3(&xs, &chi1_pos, &chi2_mom, |xi, w, p2| xi + w + 0.5 * p2);
    let (mean_x2, var_x2) = moments3(&ps, &chi2_pos, &chi1_mom, |k, y, p1| k + y - 0.5 * p1);
    Ok(MarginalStats { mean_x1, var_x1, mean_x2, var_x2 })
}

/// Position statistics of the system after the interaction: `q_T = xi + p2`.
pub fn final_system_stats(joint: &JointAmplitude) -> Result<FinalSystemStats> {
    let xs = position_samples(&joint.state);
    let chi2_mom = gaussian_nodes(2.0 * joint.prep.b2 * joint.prep.b2);
    let (mean_q, var_q) = moments3(&xs, &chi2_mom, &[(0.0, 1.0)], |xi, p2, _| xi + p2);
    Ok(FinalSystemStats { mean_q, var_q })
}

/// Fused evaluator for the expectations of the tracking observables.
///
/// For `Y_theta(u) = (sqrt(pi)/b1) |x1_theta = u><x1_theta = u| |p2_theta = 0><p2_theta = 0|`
/// the trace over the apparatus reads
/// `(sqrt(pi)/b1)(1/2pi) int dq |int dv psi(q, u c - v s, u s + v c)|^2`.
/// Inserting the `xi` integral for `psi`, the Gaussian `v` and `q` integrals
/// close, leaving
///
/// ```text
/// E(u) = (1/2pi) int dt exp(-i t u) exp(-b1^2 t^2 / 4)
///        int dx phi(x + s t/2) phi*(x - s t/2) exp(i c t x)
/// ```
///
/// which is computed here with trapezoid sums in `t` and `x`.
#[derive(Debug, Clone)]
pub struct TrackingEvaluator<'a> {
    state: &'a SystemState,
    prep: ApparatusPreparation,
    radius: f64,
}

impl<'a> TrackingEvaluator<'a> {
    pub fn new(state: &'a SystemState, prep: ApparatusPreparation) -> Self {
        let (lo, hi) = state.support(1e-16);
        let radius = lo.abs().max(hi.abs());
        Self { state, prep, radius }
    }

    /// `Tr rho_APP Y_theta(u)` for every `u` of `ugrid`.
    pub fn y_theta_row(&self, theta: QuadratureAngle, ugrid: &Grid1D) -> Result<Vec<f64>> {
        self.prep.require_symmetric()?;
        let (c, s) = theta.cos_sin();
        let damping = 0.25 * self.prep.b1 * self.prep.b1;
        Ok(self.fourier_row(ugrid, self.prep.b1, |t| self.state.characteristic(c * t, s * t) * (-damping * t * t).exp()))
    }

    /// `Tr rho_APP Z(x2)` for every `x2` of `grid`; any preparation.
    ///
    /// `Z(x2) = (1/(2 b1 sqrt(pi))) int dx1 dx1' |x1><x1'| |x2><x2|`; the
    /// `x1`, `x1'` and `q` integrals close to
    /// `(1/2pi) int dy exp(-i y x2) exp(-y^2/(16 b2^2)) int dx phi(x + y/2) phi*(x - y/2)`.
    pub fn z_row(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let damping = 1.0 / (16.0 * self.prep.b2 * self.prep.b2);
        let smear = (2.0 * self.prep.momentum_tracking_variance()).sqrt();
        Ok(self.fourier_row(grid, smear, |y| self.state.characteristic(0.0, y) * (-damping * y * y).exp()))
    }

    /// `(1/2pi) int dt exp(-i t u) f(t)` for Hermitian-symmetric `f`.
    fn fourier_row(&self, grid: &Grid1D, smear: f64, f: impl Fn(f64) -> Complex64) -> Vec<f64> {
        let umax = grid.min().abs().max(grid.max().abs());
        // Period of the implied periodic sum must clear the smeared support.
        let period = 2.0 * (umax + self.radius.max(8.0) + 12.0 * smear) + 8.0;
        let dt = 2.0 * PI / period;
        let tmax = PI / self.state.grid().spacing();
        let mut samples: Vec<(f64, Complex64)> = vec![(0.0, f(0.0))];
        let mut quiet = 0;
        let mut k = 1;
        loop {
            let t = k as f64 * dt;
            if t > tmax {
                break;
            }
            let v = f(t);
            samples.push((t, v));
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
        grid.points()
            .map(|u| {
                let mut acc = 0.5 * samples[0].1.re;
                for &(t, v) in &samples[1..] {
                    acc += (v * Complex64::from_polar(1.0, -t * u)).re;
                }
                acc * dt / PI
            })
            .collect()
    }
}

/// `Tr rho_APP(T) Y_theta(u)` at finite `b1` for a symmetric preparation.
pub fn expect_y_theta(state: &SystemState, prep: &ApparatusPreparation, theta: QuadratureAngle, u: f64) -> Result<f64> {
    prep.require_symmetric()?;
    let g = Grid1D::new(u - 1.0, u + 1.0, 3)?;
    Ok(TrackingEvaluator::new(state, *prep).y_theta_row(theta, &g)?[1])
}

/// `Tr rho_APP(T) Z(x2)` at finite `b2`.
pub fn expect_z(state: &SystemState, prep: &ApparatusPreparation, x2: f64) -> Result<f64> {
    let g = Grid1D::new(x2 - 1.0, x2 + 1.0, 3)?;
    Ok(TrackingEvaluator::new(state, *prep).z_row(&g)?[1])
}

/// Operator norm of `[Y(x1), Z(x2)]` on an `n x n` discretization of the
/// apparatus plane (`x1` and `x2` both sampled on `grid`), at the grid
/// points nearest to `x1` and `x2`.
///
/// With `|x> -> |i> / sqrt(h)` the projector `|x><x|` becomes `|i><i| / h` and
/// `int dx dx' |x><x'|` becomes `h J`, `J` the all-ones matrix, so
/// `Y = (b2 / sqrt(pi)) |i1><i1| (x) J` and `Z = (1 / (2 b1 sqrt(pi))) J (x) |i2><i2|`.
pub fn tracking_commutator_norm(prep: &ApparatusPreparation, grid: &Grid1D, x1: f64, x2: f64) -> f64 {
    let n = grid.count();
    let h = grid.spacing();
    let idx = |x: f64| (((x - grid.min()) / h).round().clamp(0.0, (n - 1) as f64)) as usize;
    let (i1, i2) = (idx(x1), idx(x2));
    let y_scale = prep.b2 / PI.sqrt();
    let z_scale = 1.0 / (2.0 * prep.b1 * PI.sqrt());
    // Vector index is a * n + b for |a> (x) |b>.
    let apply_y = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        let s: f64 = v[i1 * n..(i1 + 1) * n].iter().sum();
        out[i1 * n..(i1 + 1) * n].iter_mut().for_each(|o| *o = y_scale * s);
        out
    };
    let apply_z = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        let s: f64 = (0..n).map(|a| v[a * n + i2]).sum();
        for a in 0..n {
            out[a * n + i2] = z_scale * s;
        }
        out
    };
    let commutator = |v: &[f64]| -> Vec<f64> {
        let yz = apply_y(&apply_z(v));
        let zy = apply_z(&apply_y(v));
        yz.iter().zip(&zy).map(|(a, b)| a - b).collect()
    };
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        norm
    };
    // Power iteration on C^T C = -C^2 (C is antisymmetric).
    let mut v: Vec<f64> = (0..n * n).map(|k| 1.0 + (k as f64 * 0.7361).sin()).collect();
    normalize(&mut v);
    let mut sigma = 0.0;
    for _ in 0..500 {
        let mut w: Vec<f64> = commutator(&commutator(&v)).iter().map(|x| -x).collect();
        let lambda = normalize(&mut w);
        if lambda == 0.0 {
            return 0.0;
        }
        v = w;
        let next = lambda.sqrt();
        let done = (next - sigma).abs() <= 1e-14 * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}
