//! Local Lagrange interpolation on uniform grids.

use crate::grid::Grid1D;

/// Number of points in the interpolation stencil.
pub const STENCIL: usize = 8;

/// Index of the first stencil point and the Lagrange weights for evaluating
/// grid samples at `x`. `None` when `x` lies outside the grid.
#[inline]
pub fn stencil(grid: &Grid1D, x: f64) -> Option<(usize, [f64; STENCIL])> {
    stencil_n::<STENCIL>(grid, x)
}

/// Stencil of `N` points (N even, N <= grid.count()).
#[inline]
pub fn stencil_n<const N: usize>(grid: &Grid1D, x: f64) -> Option<(usize, [f64; N])> {
    if !grid.contains(x) {
        return None;
    }
    let h = grid.spacing();
    let pos = (x - grid.min()) / h;
    let n = grid.count();
    let base = pos.floor() as isize - (N as isize / 2 - 1);
    let start = base.clamp(0, n as isize - N as isize) as usize;
    let s = pos - start as f64;

    let mut w = [0.0; N];
    let nearest = s.round();
    if (s - nearest).abs() < 1e-13 {
        let j = nearest as usize;
        if j < N {
            w[j] = 1.0;
            return Some((start, w));
        }
    }
    let mut full = 1.0;
    for m in 0..N {
        full *= s - m as f64;
    }
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = full / ((s - j as f64) * denominators::<N>()[j]);
    }
    Some((start, w))
}

#[inline]
fn denominators<const N: usize>() -> [f64; N] {
    let mut d = [1.0; N];
    for (j, dj) in d.iter_mut().enumerate() {
        for m in 0..N {
            if m != j {
                *dj *= j as f64 - m as f64;
            }
        }
    }
    d
}

/// Interpolate real samples at `x`; zero outside the grid.
pub fn interpolate_real(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    match stencil(grid, x) {
        Some((start, w)) => w.iter().zip(&values[start..start + STENCIL]).map(|(a, b)| a * b).sum(),
        None => 0.0,
    }
}

/// Cubic (4-point) interpolation; zero outside the grid.
pub fn interpolate_cubic(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    match stencil_n::<4>(grid, x) {
        Some((start, w)) => w.iter().zip(&values[start..start + 4]).map(|(a, b)| a * b).sum(),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let g = Grid1D::new(-8.0, 8.0, 513).unwrap();
        let v: Vec<f64> = g.points().map(|x| (-x * x / 2.0).exp() * (3.0 * x).cos()).collect();
        for &x in &[0.013, -2.71, 5.5001, 7.99, -7.999] {
            let exact = (-x * x / 2.0f64).exp() * (3.0 * x).cos();
            assert!((interpolate_real(&g, &v, x) - exact).abs() < 1e-10, "x={x}");
        }
        assert_eq!(interpolate_real(&g, &v, 9.0), 0.0);
        assert_eq!(interpolate_real(&g, &v, g.point(100)), v[100]);
    }
}
