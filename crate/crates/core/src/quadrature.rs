//! Gauss-Legendre rules and an adaptive panel integrator.
//!
//! The adaptive integrator bisects panels until the `n`-point rule on a panel
//! agrees with the sum of the same rule on its two halves. Oscillatory
//! integrands declare their phase rate so that the initial panel partition
//! never spans more than about half a period per panel.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Result, TomoError};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared 10-point rule.
    pub fn ten() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrate over `[a, b]` with a single panel.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Composite rule: `panels` equal panels on `[a, b]`, returned as
    /// absolute (node, weight) pairs.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.order());
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive composite Gauss-Legendre integrator.
#[derive(Debug, Clone)]
pub struct AdaptiveQuadrature {
    rule: &'static GaussLegendre,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_panels: usize,
    /// Largest expected phase rate (radians per unit) of the integrand.
    pub oscillation: f64,
    pub max_depth: u32,
    pub max_evaluations: usize,
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        Self {
            rule: GaussLegendre::ten(),
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            initial_panels: 8,
            oscillation: 0.0,
            max_depth: 30,
            max_evaluations: 2_000_000,
        }
    }
}

impl AdaptiveQuadrature {
    pub fn with_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_initial_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }

    pub fn with_oscillation(mut self, rate: f64) -> Self {
        self.oscillation = rate.abs();
        self
    }

    pub fn with_budget(mut self, max_evaluations: usize) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    /// Integrate a complex-valued function over `[a, b]`.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<Complex64>
    where
        F: FnMut(f64) -> Complex64,
    {
        if a == b {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let width = (b - a).abs();
        let by_phase = (width * self.oscillation / PI).ceil() as usize;
        let panels = self.initial_panels.max(by_phase).max(1);
        let h = (b - a) / panels as f64;

        let mut evals = 0usize;
        let mut coarse: Vec<(f64, f64, Complex64)> = Vec::with_capacity(panels);
        let mut scale = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            let v = self.rule.integrate(lo, hi, &mut f);
            evals += self.rule.order();
            scale += v.norm();
            coarse.push((lo, hi, v));
        }
        let panel_tol = self.abs_tol.max(self.rel_tol * scale) / panels as f64;

        let mut total = Complex64::new(0.0, 0.0);
        for (lo, hi, v) in coarse {
            total += self.refine(lo, hi, v, panel_tol, 0, &mut f, &mut evals)?;
        }
        Ok(total)
    }

    /// Integrate a real-valued function over `[a, b]`.
    pub fn integrate_real<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate(a, b, |x| Complex64::new(f(x), 0.0)).map(|c| c.re)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F>(
        &self,
        lo: f64,
        hi: f64,
        whole: Complex64,
        tol: f64,
        depth: u32,
        f: &mut F,
        evals: &mut usize,
    ) -> Result<Complex64>
    where
        F: FnMut(f64) -> Complex64,
    {
        let mid = 0.5 * (lo + hi);
        let left = self.rule.integrate(lo, mid, &mut *f);
        let right = self.rule.integrate(mid, hi, &mut *f);
        *evals += 2 * self.rule.order();
        let halves = left + right;
        if (halves - whole).norm() <= tol {
            return Ok(halves);
        }
        if depth >= self.max_depth {
            return Err(TomoError::QuadratureNonConvergence(format!(
                "panel [{lo:.6}, {hi:.6}] still off by {:.3e} at depth {depth}",
                (halves - whole).norm()
            )));
        }
        if *evals > self.max_evaluations {
            return Err(TomoError::QuadratureNonConvergence(format!(
                "exceeded {} integrand evaluations",
                self.max_evaluations
            )));
        }
        let l = self.refine(lo, mid, left, 0.5 * tol, depth + 1, f, evals)?;
        let r = self.refine(mid, hi, right, 0.5 * tol, depth + 1, f, evals)?;
        Ok(l + r)
    }
}

/// Trapezoid sum of uniformly spaced samples.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            spacing * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let rule = GaussLegendre::new(7);
        // degree 13 polynomial
        let v = rule.integrate(-1.0, 2.0, |x| Complex64::new(x.powi(13) - 3.0 * x.powi(6), 0.0));
        let exact = (2f64.powi(14) - 1.0) / 14.0 - 3.0 * (2f64.powi(7) + 1.0) / 7.0;
        assert!((v.re - exact).abs() < 1e-9 * exact.abs());
        let wsum: f64 = rule.weights().iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian_and_oscillatory() {
        let q = AdaptiveQuadrature::default().with_oscillation(40.0);
        // int exp(-x^2) cos(40 x) over R = sqrt(pi) exp(-400)
        let v = q.integrate_real(-10.0, 10.0, |x| (-x * x).exp() * (40.0 * x).cos()).unwrap();
        assert!(v.abs() < 1e-12);
        let g = q.integrate_real(-10.0, 10.0, |x| (-x * x).exp()).unwrap();
        assert!((g - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_budget() {
        let q = AdaptiveQuadrature::default().with_budget(50).with_tolerance(0.0, 0.0);
        let r = q.integrate_real(0.0, 1.0, |x| x.sqrt());
        assert!(matches!(r, Err(TomoError::QuadratureNonConvergence(_))));
    }

    #[test]
    fn trapezoid_linear() {
        let v: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        assert!((trapezoid(&v, 0.1) - 0.5).abs() < 1e-14);
    }
}
