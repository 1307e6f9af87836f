//! Uniform sampling axes and quadrature angles.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};

/// A uniformly sampled closed interval `[min, max]` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    min: f64,
    max: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(TomoError::InvalidGrid(format!("non-finite bounds [{min}, {max}]")));
        }
        if min >= max {
            return Err(TomoError::InvalidGrid(format!("min {min} must be below max {max}")));
        }
        if count < 2 {
            return Err(TomoError::InvalidGrid(format!("count {count} must be at least 2")));
        }
        Ok(Self { min, max, count })
    }

    /// `[-8, 8]` with 513 points.
    pub fn default_phase_space() -> Self {
        Self { min: -8.0, max: 8.0, count: 513 }
    }

    /// `[-10, 10]` with 641 points: the `[-8, 8]` spacing, wide enough that
    /// oscillator levels up to 5 decay below the edge threshold.
    pub fn default_state() -> Self {
        Self { min: -10.0, max: 10.0, count: 641 }
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        // Endpoint evaluated exactly so that symmetric grids stay symmetric.
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Trapezoid weight of sample `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    /// Same interval sampled `factor` times more densely.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self { min: self.min, max: self.max, count: (self.count - 1) * factor + 1 }
    }

    pub fn approx_eq(&self, other: &Grid1D) -> bool {
        let tol = 1e-12 * (self.max - self.min).abs().max(1.0);
        self.count == other.count
            && (self.min - other.min).abs() < tol
            && (self.max - other.max).abs() < tol
    }
}

/// Rotation angle of a phase-space quadrature `q cos(theta) + p sin(theta)`,
/// normalized into `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct QuadratureAngle(f64);

impl QuadratureAngle {
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        Self(t)
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn cos_sin(&self) -> (f64, f64) {
        (self.0.cos(), self.0.sin())
    }

    /// The conjugate quadrature, `p_theta = q_{theta + pi/2}`.
    pub fn conjugate(&self) -> Self {
        Self::new(self.0 + 0.5 * PI)
    }

    /// Rotation matrix `[[c, s], [-s, c]]` acting on `(q, p)`.
    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (c, s) = self.cos_sin();
        [[c, s], [-s, c]]
    }

    /// `count` equally spaced angles covering `[0, pi)`.
    pub fn half_turn(count: usize) -> Vec<Self> {
        (0..count).map(|k| Self::new(PI * k as f64 / count as f64)).collect()
    }
}
