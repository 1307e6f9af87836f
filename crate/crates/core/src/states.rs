//! System wavefunctions and their exact phase-space references.
//!
//! Units: hbar = 1 and unit oscillator mass and frequency, so the ground state
//! is `pi^{-1/4} exp(-q^2/2)` and the Wigner function of a pure state is
//! `W(q, p) = (1/2pi) int phi(q + y/2) phi*(q - y/2) exp(-i p y) dy`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::interp;

/// Amplitude allowed at the grid edges.
pub const EDGE_THRESHOLD: f64 = 1e-12;
/// Tolerance on the discrete norm of a state.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Highest supported oscillator level.
pub const MAX_FOCK: usize = 20;

/// A pure system state `phi(q)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
}

impl SystemState {
    /// Wrap samples, checking normalization and edge decay.
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::from_raw(grid, amplitudes)?;
        state.check_edges()?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(TomoError::NormOutOfRange { norm });
        }
        Ok(state)
    }

    /// Samples rescaled to unit discrete norm (edge decay still checked).
    pub fn normalized(grid: Grid1D, amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut state = Self::from_raw(grid, amplitudes)?;
        let norm = state.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(TomoError::NormOutOfRange { norm });
        }
        let scale = 1.0 / norm.sqrt();
        state.amplitudes.iter_mut().for_each(|a| *a *= scale);
        state.check_edges()?;
        Ok(state)
    }

    fn from_raw(grid: Grid1D, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.count() {
            return Err(TomoError::GridMismatch(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.count()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    fn check_edges(&self) -> Result<()> {
        let edge = self.amplitudes[0].norm().max(self.amplitudes[self.amplitudes.len() - 1].norm());
        if edge > EDGE_THRESHOLD {
            return Err(TomoError::GridTooNarrow { edge_amplitude: edge, threshold: EDGE_THRESHOLD });
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `sum |phi|^2 dq` (trapezoid).
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(i, a)| a.norm_sqr() * self.grid.weight(i)).sum()
    }

    /// True when every amplitude is real.
    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|a| a.im == 0.0)
    }

    /// Interpolated amplitude; zero outside the grid.
    #[inline]
    pub fn amplitude_at(&self, q: f64) -> Complex64 {
        match interp::stencil(&self.grid, q) {
            Some((start, w)) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, wk) in w.iter().enumerate() {
                    acc += self.amplitudes[start + k] * *wk;
                }
                acc
            }
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Smallest interval outside which `|phi| <= threshold`.
    pub fn support(&self, threshold: f64) -> (f64, f64) {
        let first = self.amplitudes.iter().position(|a| a.norm() > threshold);
        let last = self.amplitudes.iter().rposition(|a| a.norm() > threshold);
        match (first, last) {
            (Some(i), Some(j)) => (
                self.grid.point(i.saturating_sub(1)),
                self.grid.point((j + 1).min(self.grid.count() - 1)),
            ),
            _ => (0.0, 0.0),
        }
    }

    pub fn position_density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean_position(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| self.grid.point(i) * a.norm_sqr() * self.grid.weight(i))
            .sum()
    }

    pub fn variance_position(&self) -> f64 {
        let m = self.mean_position();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (self.grid.point(i) - m).powi(2) * a.norm_sqr() * self.grid.weight(i))
            .sum()
    }

    /// `d phi / dq` by an eighth-order central difference.
    fn derivative(&self) -> Vec<Complex64> {
        const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let h = self.grid.spacing();
        let n = self.amplitudes.len();
        let at = |i: isize| -> Complex64 {
            if i < 0 || i >= n as isize {
                Complex64::new(0.0, 0.0)
            } else {
                self.amplitudes[i as usize]
            }
        };
        (0..n as isize)
            .map(|i| {
                let mut d = Complex64::new(0.0, 0.0);
                for (k, c) in C.iter().enumerate() {
                    let k = k as isize + 1;
                    d += (at(i + k) - at(i - k)) * *c;
                }
                d / h
            })
            .collect()
    }

    /// `<p> = int phi* (-i d/dq) phi dq`.
    pub fn mean_momentum(&self) -> f64 {
        let d = self.derivative();
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&d)
            .enumerate()
            .map(|(i, (a, da))| a.conj() * da * self.grid.weight(i))
            .sum();
        (s * Complex64::new(0.0, -1.0)).re
    }

    /// `<p^2> - <p>^2` with `<p^2> = int |phi'|^2 dq`.
    pub fn variance_momentum(&self) -> f64 {
        let d = self.derivative();
        let p2: f64 = d.iter().enumerate().map(|(i, da)| da.norm_sqr() * self.grid.weight(i)).sum();
        p2 - self.mean_momentum().powi(2)
    }

    /// Momentum-space amplitude `(2pi)^{-1/2} int phi(q) exp(-i p q) dq`.
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let s: Complex64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let q = self.grid.point(i);
                a * Complex64::from_polar(self.grid.weight(i), -p * q)
            })
            .sum();
        s / (2.0 * PI).sqrt()
    }

    /// `<e^{i(a q + b p)}> = int phi*(x - b/2) phi(x + b/2) e^{i a x} dx`.
    pub fn characteristic(&self, a: f64, b: f64) -> Complex64 {
        let h = self.grid.spacing();
        let (lo, hi) = self.support(1e-16);
        let lo = lo + 0.5 * b.abs();
        let hi = hi - 0.5 * b.abs();
        if hi <= lo {
            return Complex64::new(0.0, 0.0);
        }
        let n = ((hi - lo) / h).ceil() as usize + 1;
        let step = (hi - lo) / (n - 1) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        let rot = Complex64::from_polar(1.0, a * step);
        let mut phase = Complex64::from_polar(1.0, a * lo);
        for k in 0..n {
            let x = lo + step * k as f64;
            let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            acc += self.amplitude_at(x - 0.5 * b).conj() * self.amplitude_at(x + 0.5 * b) * phase * w;
            phase *= rot;
            if k % 64 == 63 {
                phase = Complex64::from_polar(1.0, a * (lo + step * (k + 1) as f64));
            }
        }
        acc * step
    }
}

/// Normalized eigenstate `n` of the unit oscillator, evaluated with the
/// normalized three-term Hermite-function recursion.
pub fn oscillator_eigenstate(n: usize, grid: Grid1D) -> Result<SystemState> {
    if n > MAX_FOCK {
        return Err(TomoError::InvalidParameter(format!("oscillator level {n} exceeds {MAX_FOCK}")));
    }
    let amplitudes = grid.points().map(|q| Complex64::new(hermite_function(n, q), 0.0)).collect();
    SystemState::new(grid, amplitudes)
}

/// `psi_n(q) = (2^n n! sqrt(pi))^{-1/2} H_n(q) exp(-q^2/2)`.
pub fn hermite_function(n: usize, q: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * q * q).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * q * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coherent state with `<q> = q0`, `<p> = p0` (displaced vacuum).
pub fn displaced_vacuum(q0: f64, p0: f64, grid: Grid1D) -> Result<SystemState> {
    let amplitudes = grid
        .points()
        .map(|q| Complex64::from_polar(PI.powf(-0.25) * (-0.5 * (q - q0).powi(2)).exp(), p0 * q))
        .collect();
    SystemState::new(grid, amplitudes)
}

/// Phase-space distribution on a rectangular grid, indexed `[iq, ip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub qgrid: Grid1D,
    pub pgrid: Grid1D,
    pub values: Array2<f64>,
}

impl WignerGrid {
    pub fn new(qgrid: Grid1D, pgrid: Grid1D, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (qgrid.count(), pgrid.count()) {
            return Err(TomoError::GridMismatch(format!(
                "values {:?} vs grids {}x{}",
                values.dim(),
                qgrid.count(),
                pgrid.count()
            )));
        }
        Ok(Self { qgrid, pgrid, values })
    }

    /// `sum W dq dp` (trapezoid).
    pub fn integral(&self) -> f64 {
        let mut s = 0.0;
        for ((i, j), v) in self.values.indexed_iter() {
            s += v * self.qgrid.weight(i) * self.pgrid.weight(j);
        }
        s
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the grid point nearest to `(q, p)`.
    pub fn nearest(&self, q: f64, p: f64) -> f64 {
        let iq = ((q - self.qgrid.min()) / self.qgrid.spacing()).round().clamp(0.0, (self.qgrid.count() - 1) as f64);
        let ip = ((p - self.pgrid.min()) / self.pgrid.spacing()).round().clamp(0.0, (self.pgrid.count() - 1) as f64);
        self.values[[iq as usize, ip as usize]]
    }

    /// Six-point tensor Lagrange interpolation; zero outside the grid.
    #[inline]
    pub fn value_at(&self, q: f64, p: f64) -> f64 {
        let (Some((iq, wq)), Some((ip, wp))) =
            (interp::stencil_n::<6>(&self.qgrid, q), interp::stencil_n::<6>(&self.pgrid, p))
        else {
            return 0.0;
        };
        let mut acc = 0.0;
        for (a, wa) in wq.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let row = self.values.row(iq + a);
            let mut r = 0.0;
            for (b, wb) in wp.iter().enumerate() {
                r += wb * row[ip + b];
            }
            acc += wa * r;
        }
        acc
    }

    /// Marginal over `p`, one value per `q` sample.
    pub fn position_marginal(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|row| row.iter().enumerate().map(|(j, v)| v * self.pgrid.weight(j)).sum())
            .collect()
    }

    /// Marginal over `q`, one value per `p` sample.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        self.values
            .columns()
            .into_iter()
            .map(|col| col.iter().enumerate().map(|(i, v)| v * self.qgrid.weight(i)).sum())
            .collect()
    }

    /// Integral along the line `q cos(theta) + p sin(theta) = u` for each `u`.
    pub fn project(&self, theta: QuadratureAngle, ugrid: &Grid1D) -> Vec<f64> {
        let (c, s) = theta.cos_sin();
        let radius = self.support_radius(1e-16);
        let h = self.qgrid.spacing().min(self.pgrid.spacing());
        ugrid
            .to_vec()
            .par_iter()
            .map(|&u| {
                let half = (radius * radius - u * u).max(0.0).sqrt();
                if half == 0.0 {
                    return 0.0;
                }
                let n = (half / h).ceil() as i64;
                let mut acc = 0.0;
                for k in -n..=n {
                    let v = k as f64 * h;
                    acc += self.value_at(u * c - v * s, u * s + v * c);
                }
                acc * h
            })
            .collect()
    }

    /// Radius (about the origin) outside which `|W| <= threshold` on the grid.
    pub fn support_radius(&self, threshold: f64) -> f64 {
        let mut r2: f64 = 0.0;
        for ((i, j), v) in self.values.indexed_iter() {
            if v.abs() > threshold {
                let q = self.qgrid.point(i);
                let p = self.pgrid.point(j);
                r2 = r2.max(q * q + p * p);
            }
        }
        r2.sqrt() + 2.0 * self.qgrid.spacing().max(self.pgrid.spacing())
    }

    /// Normalization and the pure-state lower bound `W >= -1/pi`.
    pub fn check_invariants(&self, norm_tol: f64) -> Result<()> {
        let total = self.integral();
        if (total - 1.0).abs() > norm_tol {
            return Err(TomoError::InvalidParameter(format!("Wigner integral {total} differs from 1")));
        }
        let min = self.min_value();
        if min < -1.0 / PI - 1e-9 {
            return Err(TomoError::InvalidParameter(format!("Wigner minimum {min} below -1/pi")));
        }
        Ok(())
    }
}

/// Wigner function of a pure state on the requested grid.
pub fn exact_wigner(state: &SystemState, qgrid: &Grid1D, pgrid: &Grid1D) -> Result<WignerGrid> {
    state.check_edges()?;
    let sg = *state.grid();
    let h = sg.spacing();
    let hy = 2.0 * h;
    let (lo, hi) = state.support(1e-16);
    let np = pgrid.count();
    let p0 = pgrid.min();
    let dp = pgrid.spacing();

    let rows: Vec<Vec<f64>> = qgrid
        .to_vec()
        .par_iter()
        .map(|&q| {
            let mut row = vec![0.0; np];
            if q < lo || q > hi {
                return row;
            }
            let kmax = ((hi - q).min(q - lo) / h).floor().max(0.0) as usize;
            let c0 = state.amplitude_at(q).norm_sqr();
            row.iter_mut().for_each(|r| *r = 0.5 * c0);
            for k in 1..=kmax {
                let y = k as f64 * hy;
                let ck = state.amplitude_at(q + 0.5 * y) * state.amplitude_at(q - 0.5 * y).conj();
                if ck.norm() < 1e-300 {
                    continue;
                }
                let mut z = ck * Complex64::from_polar(1.0, -p0 * y);
                let step = Complex64::from_polar(1.0, -dp * y);
                for (j, r) in row.iter_mut().enumerate() {
                    *r += z.re;
                    z *= step;
                    if j % 128 == 127 {
                        z = ck * Complex64::from_polar(1.0, -(p0 + dp * (j + 1) as f64) * y);
                    }
                }
            }
            row.iter_mut().for_each(|r| *r *= hy / PI);
            row
        })
        .collect();

    let mut values = Array2::zeros((qgrid.count(), np));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    WignerGrid::new(*qgrid, *pgrid, values)
}

/// Probability density of a rotated quadrature on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDensity {
    pub theta: QuadratureAngle,
    pub ugrid: Grid1D,
    pub values: Vec<f64>,
}

impl QuadratureDensity {
    pub fn integral(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| v * self.ugrid.weight(i)).sum()
    }

    pub fn value_at(&self, u: f64) -> f64 {
        interp::interpolate_real(&self.ugrid, &self.values, u)
    }
}

/// Density of `q_theta` for a pure state, obtained by projecting its Wigner
/// function along the orthogonal direction.
pub fn quadrature_density(state: &SystemState, theta: QuadratureAngle, ugrid: &Grid1D) -> Result<QuadratureDensity> {
    let projector = WignerProjector::new(state)?;
    Ok(projector.density(theta, ugrid))
}

/// Wigner function of a state on its own grid, kept for repeated projection.
#[derive(Debug, Clone)]
pub struct WignerProjector {
    wigner: WignerGrid,
}

impl WignerProjector {
    pub fn new(state: &SystemState) -> Result<Self> {
        let g = *state.grid();
        Ok(Self { wigner: exact_wigner(state, &g, &g)? })
    }

    pub fn wigner(&self) -> &WignerGrid {
        &self.wigner
    }

    pub fn density(&self, theta: QuadratureAngle, ugrid: &Grid1D) -> QuadratureDensity {
        let w = &self.wigner;
        let values = if theta.radians() == 0.0 && ugrid.approx_eq(&w.qgrid) {
            w.position_marginal()
        } else {
            w.project(theta, ugrid)
        };
        QuadratureDensity { theta, ugrid: *ugrid, values }
    }
}

/// Convolution with a normalized Gaussian of standard deviation `sigma`,
/// applied spectrally on a zero-padded copy of the samples.
pub fn gaussian_convolve(density: &QuadratureDensity, sigma: f64) -> Result<QuadratureDensity> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(TomoError::InvalidParameter(format!("smearing width {sigma} must be positive")));
    }
    let values = gaussian_smooth(&density.values, density.ugrid.spacing(), sigma);
    let n = values.len();
    let edge = (n / 20).max(1);
    let edge_mass: f64 = (values[..edge].iter().chain(&values[n - edge..]))
        .map(|v| v.abs())
        .sum::<f64>()
        * density.ugrid.spacing();
    if edge_mass > 1e-9 {
        log::warn!("smeared density carries {edge_mass:.2e} of its mass near the grid edges");
    }
    Ok(QuadratureDensity { theta: density.theta, ugrid: density.ugrid, values })
}

/// Spectral Gaussian smoothing of uniformly spaced samples.
pub(crate) fn gaussian_smooth(values: &[f64], spacing: f64, sigma: f64) -> Vec<f64> {
    let n = values.len();
    let pad = n + (24.0 * sigma / spacing).ceil() as usize;
    let m = (2 * pad).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    fwd.process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        let omega = 2.0 * PI * kk / (m as f64 * spacing);
        *b *= (-0.5 * omega * omega * sigma * sigma).exp() / m as f64;
    }
    inv.process(&mut buf);
    buf[..n].iter().map(|c| c.re).collect()
}
