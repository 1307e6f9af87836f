//! Sinograms of rotated-quadrature densities and their inversion to the
//! Wigner function (filtered backprojection) and to the position-space
//! density matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::grid::{Grid1D, QuadratureAngle};
use crate::interaction::{ApparatusPreparation, TrackingEvaluator};
use crate::interp;
use crate::quadrature::GaussLegendre;
use crate::states::{SystemState, WignerGrid, WignerProjector};

/// Rows must integrate to one within this tolerance.
pub const ROW_NORM_TOLERANCE: f64 = 1e-4;

/// How the rows of a sinogram were produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SinogramSource {
    /// Exact quadrature densities of the system state.
    Exact,
    /// Apparatus expectations at finite `b1`.
    Simulated { b1: f64 },
}

/// Quadrature densities indexed `[angle, u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<QuadratureAngle>,
    ugrid: Grid1D,
    values: Array2<f64>,
    source: SinogramSource,
}

impl Sinogram {
    pub fn new(angles: Vec<QuadratureAngle>, ugrid: Grid1D, values: Array2<f64>, source: SinogramSource) -> Result<Self> {
        if values.dim() != (angles.len(), ugrid.count()) {
            return Err(TomoError::GridMismatch(format!(
                "values {:?} vs {} angles x {} samples",
                values.dim(),
                angles.len(),
                ugrid.count()
            )));
        }
        if angles.windows(2).any(|w| w[1].radians() <= w[0].radians()) {
            return Err(TomoError::AngleCoverage("angles must be strictly increasing".into()));
        }
        for (j, row) in values.rows().into_iter().enumerate() {
            let total: f64 = row.iter().enumerate().map(|(i, v)| v * ugrid.weight(i)).sum();
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            if (total - 1.0).abs() > ROW_NORM_TOLERANCE || min < -1e-6 {
                return Err(TomoError::InvalidParameter(format!(
                    "row {j} (theta = {:.6}) has integral {total:.8} and minimum {min:.3e}",
                    angles[j].radians()
                )));
            }
        }
        Ok(Self { angles, ugrid, values, source })
    }

    pub fn angles(&self) -> &[QuadratureAngle] {
        &self.angles
    }

    pub fn ugrid(&self) -> &Grid1D {
        &self.ugrid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn source(&self) -> SinogramSource {
        self.source
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.values.row(j).to_slice().expect("standard layout")
    }

    /// Angle step and the fraction of a full turn covered: `(d_theta, 1)` for
    /// `[0, pi)` and `(d_theta, 2)` for `[0, 2 pi)`.
    fn uniform_coverage(&self) -> Result<(f64, usize)> {
        let n = self.angles.len();
        if n < 2 {
            return Err(TomoError::AngleCoverage(format!("{n} angles; at least 2 are needed")));
        }
        for turns in [1usize, 2] {
            let step = turns as f64 * PI / n as f64;
            let uniform = self
                .angles
                .iter()
                .enumerate()
                .all(|(j, a)| (a.radians() - self.angles[0].radians() - j as f64 * step).abs() < 1e-9);
            if uniform && self.angles[0].radians() < step {
                return Ok((step, turns));
            }
        }
        Err(TomoError::AngleCoverage(
            "angles must be equally spaced over [0, pi) or [0, 2 pi)".into(),
        ))
    }
}

/// Rows from exact densities or from finite-`b1` apparatus expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinogramMode {
    Exact,
    Simulated(ApparatusPreparation),
}

/// One density row per angle.
pub fn build_sinogram(state: &SystemState, mode: SinogramMode, angles: &[QuadratureAngle], ugrid: &Grid1D) -> Result<Sinogram> {
    let rows: Vec<Vec<f64>> = match mode {
        SinogramMode::Exact => {
            let projector = WignerProjector::new(state)?;
            angles.par_iter().map(|&a| projector.density(a, ugrid).values).collect()
        }
        SinogramMode::Simulated(prep) => {
            prep.require_symmetric()?;
            let eval = TrackingEvaluator::new(state, prep);
            angles.par_iter().map(|&a| eval.y_theta_row(a, ugrid)).collect::<Result<_>>()?
        }
    };
    let source = match mode {
        SinogramMode::Exact => SinogramSource::Exact,
        SinogramMode::Simulated(p) => SinogramSource::Simulated { b1: p.b1() },
    };
    Sinogram::new(angles.to_vec(), *ugrid, stack(&rows, ugrid.count()), source)
}

pub(crate) fn stack(rows: &[Vec<f64>], width: usize) -> Array2<f64> {
    let mut values = Array2::zeros((rows.len(), width));
    for (j, row) in rows.iter().enumerate() {
        values.row_mut(j).iter_mut().zip(row).for_each(|(v, r)| *v = *r);
    }
    values
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Apodization {
    None,
    /// `cos(pi eta / (2 eta_max))` taper.
    Cosine,
}

/// Ramp filter for filtered backprojection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadonFilterConfig {
    pub eta_max: f64,
    pub apodization: Apodization,
    pub angle_count: usize,
}

impl RadonFilterConfig {
    /// Nyquist cutoff for `ugrid`, no apodization, 180 angles.
    pub fn for_grid(ugrid: &Grid1D) -> Self {
        Self { eta_max: PI / ugrid.spacing(), apodization: Apodization::None, angle_count: 180 }
    }

    pub fn validate(&self, ugrid: &Grid1D) -> Result<()> {
        let limit = PI / ugrid.spacing();
        if !(self.eta_max > 0.0) {
            return Err(TomoError::InvalidParameter(format!("eta_max = {} must be positive", self.eta_max)));
        }
        if self.eta_max > limit * (1.0 + 1e-12) {
            return Err(TomoError::NyquistViolation { eta_max: self.eta_max, limit });
        }
        if self.angle_count < 2 {
            return Err(TomoError::AngleCoverage(format!("angle_count {} below 2", self.angle_count)));
        }
        Ok(())
    }
}

/// Ramp-filtered rows, `Q_theta = du (h * P_theta)` with the band-limited
/// ramp kernel `h[0] = 1/(4 du^2)`, `h[odd k] = -1/(pi^2 k^2 du^2)`, then
/// cut at `eta_max` and optionally tapered.
///
/// The projections vanish outside `ugrid` but their filtered versions do not,
/// so the output is sampled on `ugrid` widened by `ext` samples at each end.
fn filtered_rows(sino: &Sinogram, filter: &RadonFilterConfig, ext: usize) -> (Grid1D, Vec<Vec<f64>>) {
    let n = sino.ugrid.count();
    let du = sino.ugrid.spacing();
    let len = n + 2 * ext;
    let m = (2 * len).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);

    let mut kernel = vec![Complex64::new(0.0, 0.0); m];
    kernel[0] = Complex64::new(0.25 / (du * du), 0.0);
    for k in (1..len).step_by(2) {
        let v = -1.0 / (PI * PI * (k * k) as f64 * du * du);
        kernel[k] = Complex64::new(v, 0.0);
        kernel[m - k] = Complex64::new(v, 0.0);
    }
    fwd.process(&mut kernel);
    let response: Vec<f64> = (0..m)
        .map(|k| {
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let eta = (2.0 * PI * kk / (m as f64 * du)).abs();
            let window = if eta > filter.eta_max {
                0.0
            } else {
                match filter.apodization {
                    Apodization::None => 1.0,
                    Apodization::Cosine => (0.5 * PI * eta / filter.eta_max).cos(),
                }
            };
            kernel[k].re * window * du / m as f64
        })
        .collect();

    let rows = sino
        .values
        .rows()
        .into_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| {
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            buf[ext..ext + n].iter_mut().zip(row.iter()).for_each(|(b, &v)| *b = Complex64::new(v, 0.0));
            fwd.process(&mut buf);
            buf.iter_mut().zip(&response).for_each(|(b, r)| *b *= r);
            inv.process(&mut buf);
            buf[..len].iter().map(|c| c.re).collect()
        })
        .collect();
    let wide = Grid1D::new(sino.ugrid.min() - ext as f64 * du, sino.ugrid.max() + ext as f64 * du, len)
        .expect("widened grid");
    (wide, rows)
}

/// Filtered backprojection
/// `W(q, p) = (2 pi)^-2 int_0^inf eta d eta int_0^{2 pi} d theta int du exp(i eta (u - q_theta)) P_theta(u)`.
///
/// Rows over `[0, pi)` stand for the full turn through `P_{theta + pi}(u) = P_theta(-u)`.
pub fn inverse_radon_wigner(sino: &Sinogram, qgrid: &Grid1D, pgrid: &Grid1D, filter: &RadonFilterConfig) -> Result<WignerGrid> {
    filter.validate(&sino.ugrid)?;
    let (step, turns) = sino.uniform_coverage()?;
    let reach = |g: &Grid1D| g.min().abs().max(g.max().abs());
    let radius = reach(qgrid).hypot(reach(pgrid));
    let ug = sino.ugrid;
    let short = (radius - ug.min().abs().min(ug.max().abs())).max(0.0);
    let ext = (short / ug.spacing()).ceil() as usize + 4;
    let (ug, filtered) = filtered_rows(sino, filter, ext);
    let weight = step / turns as f64;
    let trig: Vec<(f64, f64)> = sino.angles.iter().map(|a| a.cos_sin()).collect();
    let np = pgrid.count();
    let rows: Vec<Vec<f64>> = qgrid
        .to_vec()
        .par_iter()
        .map(|&q| {
            let mut out = vec![0.0; np];
            for (j, o) in out.iter_mut().enumerate() {
                let p = pgrid.point(j);
                let mut acc = 0.0;
                for (row, &(c, s)) in filtered.iter().zip(&trig) {
                    acc += interp::interpolate_cubic(&ug, row, q * c + p * s);
                }
                *o = acc * weight;
            }
            out
        })
        .collect();
    WignerGrid::new(*qgrid, *pgrid, stack(&rows, np))
}

/// `<q|rho|q'>` on a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixGrid {
    pub qgrid: Grid1D,
    pub values: Array2<Complex64>,
}

impl DensityMatrixGrid {
    pub fn new(qgrid: Grid1D, values: Array2<Complex64>) -> Result<Self> {
        let n = qgrid.count();
        if values.dim() != (n, n) {
            return Err(TomoError::GridMismatch(format!("values {:?} vs {n}x{n} grid", values.dim())));
        }
        Ok(Self { qgrid, values })
    }

    /// Default grid for reconstructions: `[-8, 8]` with 129 points.
    pub fn default_grid() -> Grid1D {
        Grid1D::new(-8.0, 8.0, 129).expect("valid grid")
    }

    pub fn trace(&self) -> f64 {
        (0..self.qgrid.count()).map(|i| self.values[[i, i]].re * self.qgrid.weight(i)).sum()
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.qgrid.count();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// `<phi|rho|phi>` for a state sampled on (or interpolated to) the grid.
    pub fn fidelity(&self, state: &SystemState) -> f64 {
        let phi: Vec<Complex64> = self
            .qgrid
            .points()
            .enumerate()
            .map(|(i, q)| state.amplitude_at(q) * self.qgrid.weight(i))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in phi.iter().enumerate() {
            for (j, b) in phi.iter().enumerate() {
                acc += a.conj() * self.values[[i, j]] * b;
            }
        }
        acc.re
    }

    /// Eigenvalues of the operator `rho` (matrix elements times `dq`), ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.qgrid.count();
        let h = self.qgrid.spacing();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let v = self.values[[i, j]];
            // Symmetrize so that round-off does not leak into the spectrum.
            0.5 * (v + self.values[[j, i]].conj()) * h
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn check_invariants(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > 1e-8 {
            return Err(TomoError::InvalidParameter(format!("density matrix not Hermitian ({defect:.3e})")));
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > 1e-3 {
            return Err(TomoError::InvalidParameter(format!("density matrix trace {trace}")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-3 {
            return Err(TomoError::InvalidParameter(format!("density matrix eigenvalue {min}")));
        }
        Ok(())
    }
}

/// `P~_j(k) = int du exp(i k u) P_j(u)` on a uniform `k >= 0` grid, one row per
/// angle of a half turn.
struct ProjectionTransform {
    dk: f64,
    kmax: f64,
    /// Indexed `[angle, k]`.
    table: Array2<Complex64>,
    d_theta: f64,
}

const TRANSFORM_DK: f64 = 0.02;
const TRANSFORM_FLOOR: f64 = 1e-12;

impl ProjectionTransform {
    fn new(sino: &Sinogram, rows: &[usize], d_theta: f64) -> Self {
        let ug = sino.ugrid;
        let cap = PI / ug.spacing();
        let chunk = 50;
        let mut columns: Vec<Vec<Complex64>> = Vec::new();
        let mut k_index = 0usize;
        loop {
            let block: Vec<Vec<Complex64>> = (k_index..k_index + chunk)
                .into_par_iter()
                .map(|ik| {
                    let k = ik as f64 * TRANSFORM_DK;
                    rows.iter()
                        .map(|&j| {
                            let row = sino.row(j);
                            let step = Complex64::from_polar(1.0, k * ug.spacing());
                            let mut z = Complex64::from_polar(1.0, k * ug.min());
                            let mut acc = Complex64::new(0.0, 0.0);
                            for (i, v) in row.iter().enumerate() {
                                if i % 64 == 0 {
                                    z = Complex64::from_polar(1.0, k * ug.point(i));
                                }
                                acc += z * (v * ug.weight(i));
                                z *= step;
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            let quiet = block.iter().all(|col| col.iter().all(|v| v.norm() < TRANSFORM_FLOOR));
            columns.extend(block);
            k_index += chunk;
            if quiet || k_index as f64 * TRANSFORM_DK > cap {
                break;
            }
        }
        let nk = columns.len();
        let mut table = Array2::zeros((rows.len(), nk));
        for (ik, col) in columns.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                table[[j, ik]] = *v;
            }
        }
        let kmax = ((nk - 1) as f64 * TRANSFORM_DK).min(cap);
        Self { dk: TRANSFORM_DK, kmax, table, d_theta }
    }

    /// Row `j` of the periodic extension: `P~_{theta + pi}(k) = conj P~_theta(k)`.
    #[inline]
    fn row_value(&self, j: isize, ik: usize) -> Complex64 {
        let n = self.table.nrows() as isize;
        let turns = j.div_euclid(n);
        let v = self.table[[j.rem_euclid(n) as usize, ik]];
        if turns % 2 == 0 {
            v
        } else {
            v.conj()
        }
    }

    /// `P~_theta(k)` by 6-point Lagrange interpolation in `theta` and `k`;
    /// zero beyond the tabulated band.
    fn value(&self, theta: f64, k: f64) -> Complex64 {
        if k < 0.0 {
            return self.value(theta, -k).conj();
        }
        if k > self.kmax {
            return Complex64::new(0.0, 0.0);
        }
        let nk = self.table.ncols();
        let kgrid = Grid1D::new(0.0, (nk - 1) as f64 * self.dk, nk).expect("k grid");
        let (k0, wk) = interp::stencil_n::<6>(&kgrid, k).expect("k inside table");
        let pos = theta / self.d_theta;
        let base = pos.floor() as isize - 2;
        let s = pos - base as f64;
        let wt = lagrange6(s);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, wa) in wt.iter().enumerate() {
            if *wa == 0.0 {
                continue;
            }
            let mut r = Complex64::new(0.0, 0.0);
            for (b, wb) in wk.iter().enumerate() {
                r += self.row_value(base + a as isize, k0 + b) * wb;
            }
            acc += r * wa;
        }
        acc
    }
}

/// Lagrange weights on nodes `0..6` at offset `s`.
fn lagrange6(s: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        for m in 0..6 {
            if m != j {
                v *= (s - m as f64) / (j as f64 - m as f64);
            }
        }
        *wj = v;
    }
    w
}

/// Density matrix from the quadrature densities,
///
/// ```text
/// <q|rho|q'> = (2 pi)^-1 int_0^pi |q - q'| d theta / sin^2 theta
///              exp(-i (q^2 - q'^2) cot theta / 2) int du exp(i u (q - q') / sin theta) P_theta(u).
/// ```
///
/// With `s = |q - q'| cot theta` the `theta` integral becomes
/// `(2 pi)^-1 int ds exp(-i sgn(q - q') Q s) P~_theta(s)(sgn(q - q') sqrt((q - q')^2 + s^2))`
/// with `Q = (q + q')/2` and `theta(s) = atan2(|q - q'|, s)`, which has no
/// endpoint singularity. The diagonal is the `theta = 0` row.
pub fn reconstruct_density_matrix(sino: &Sinogram, qgrid: &Grid1D) -> Result<DensityMatrixGrid> {
    let (step, turns) = sino.uniform_coverage()?;
    if sino.angles[0].radians().abs() > 1e-12 {
        return Err(TomoError::AngleCoverage("density matrix needs a row at theta = 0".into()));
    }
    let half = sino.angles.len() / turns;
    let rows: Vec<usize> = (0..half).collect();
    let transform = ProjectionTransform::new(sino, &rows, step);
    let diag_row = sino.row(0);
    let n = qgrid.count();
    let rule = GaussLegendre::ten();

    let upper: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let q = qgrid.point(i);
            let mut out = vec![Complex64::new(0.0, 0.0); n - i];
            out[0] = Complex64::new(interp::interpolate_real(&sino.ugrid, diag_row, q), 0.0);
            for (o, j) in out.iter_mut().zip(i..n).skip(1) {
                let qp = qgrid.point(j);
                let delta = q - qp;
                let ad = delta.abs();
                let sign = delta.signum();
                let centre = 0.5 * (q + qp);
                let kmax = transform.kmax;
                let inner = (4.0 * ad).min(kmax);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut panel = |a: f64, b: f64, count: usize| {
                    for (s, w) in rule.composite(a, b, count) {
                        let theta = ad.atan2(s);
                        let k = sign * (ad * ad + s * s).sqrt();
                        acc += transform.value(theta, k) * Complex64::from_polar(w, -sign * centre * s);
                    }
                };
                panel(-inner, inner, 16);
                if kmax > inner {
                    let outer = ((kmax - inner) / 0.25).ceil() as usize;
                    panel(inner, kmax, outer);
                    panel(-kmax, -inner, outer);
                }
                *o = acc / (2.0 * PI);
            }
            out
        })
        .collect();

    let mut values = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let j = i + off;
            values[[i, j]] = *v;
            values[[j, i]] = v.conj();
        }
    }
    DensityMatrixGrid::new(*qgrid, values)
}

/// One radial bin of a Wigner comparison, `d = q^2 + p^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    pub d: f64,
    pub reference: f64,
    pub reconstructed: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub l2: f64,
    pub radial_profile: Vec<RadialBin>,
}

pub const RADIAL_BINS: usize = 200;
pub const RADIAL_MAX: f64 = 16.0;

/// Reconstructions that can be compared pointwise on a shared grid.
pub trait Comparable {
    /// `(q grid, second grid)`; the second axis is `p` or `q'`.
    fn axes(&self) -> (Grid1D, Grid1D);
    fn value(&self, i: usize, j: usize) -> Complex64;
    /// Whether the second axis is momentum, in which case a radial profile is produced.
    fn is_phase_space(&self) -> bool;
}

impl Comparable for WignerGrid {
    fn axes(&self) -> (Grid1D, Grid1D) {
        (self.qgrid, self.pgrid)
    }

    fn value(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.values[[i, j]], 0.0)
    }

    fn is_phase_space(&self) -> bool {
        true
    }
}

impl Comparable for DensityMatrixGrid {
    fn axes(&self) -> (Grid1D, Grid1D) {
        (self.qgrid, self.qgrid)
    }

    fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[[i, j]]
    }

    fn is_phase_space(&self) -> bool {
        false
    }
}

/// Max-abs and L2 differences, plus the radial profile for Wigner inputs.
pub fn error_report<T: Comparable>(reference: &T, reconstructed: &T) -> Result<ErrorReport> {
    let (a0, a1) = reference.axes();
    let (b0, b1) = reconstructed.axes();
    if !(a0.approx_eq(&b0) && a1.approx_eq(&b1)) {
        return Err(TomoError::GridMismatch(format!("{a0:?} x {a1:?} vs {b0:?} x {b1:?}")));
    }
    let mut max_abs: f64 = 0.0;
    let mut l2 = 0.0;
    let mut sums = vec![(0usize, 0.0, 0.0); RADIAL_BINS];
    let width = RADIAL_MAX / RADIAL_BINS as f64;
    for i in 0..a0.count() {
        for j in 0..a1.count() {
            let r = reference.value(i, j);
            let c = reconstructed.value(i, j);
            let d = (c - r).norm();
            max_abs = max_abs.max(d);
            l2 += d * d * a0.weight(i) * a1.weight(j);
            if reference.is_phase_space() {
                let (q, p) = (a0.point(i), a1.point(j));
                let rad = q * q + p * p;
                let bin = (rad / width).floor() as usize;
                if bin < RADIAL_BINS {
                    sums[bin].0 += 1;
                    sums[bin].1 += r.re;
                    sums[bin].2 += c.re;
                }
            }
        }
    }
    let radial_profile = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| s.0 > 0)
        .map(|(b, &(count, r, c))| {
            let (reference, reconstructed) = (r / count as f64, c / count as f64);
            RadialBin { d: (b as f64 + 0.5) * width, reference, reconstructed, difference: reconstructed - reference }
        })
        .collect();
    Ok(ErrorReport { max_abs, l2: l2.sqrt(), radial_profile })
}
