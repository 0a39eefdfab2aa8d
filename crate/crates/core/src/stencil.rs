//! Second-order finite-difference stencils on a [`Grid`].
//!
//! Central differences in the interior; on the line the two edge cells use
//! one-sided second-order formulas, on the torus indices wrap.

use crate::grid::Grid;

pub fn first_derivative(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let h = grid.dx();
    debug_assert_eq!(f.len(), n);
    let mut out = vec![0.0; n];
    if grid.is_periodic() {
        for i in 0..n {
            let ip = if i + 1 == n { 0 } else { i + 1 };
            let im = if i == 0 { n - 1 } else { i - 1 };
            out[i] = (f[ip] - f[im]) / (2.0 * h);
        }
    } else {
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    }
    out
}

pub fn second_derivative(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = grid.n_cells();
    let h2 = grid.dx() * grid.dx();
    debug_assert_eq!(f.len(), n);
    let mut out = vec![0.0; n];
    if grid.is_periodic() {
        for i in 0..n {
            let ip = if i + 1 == n { 0 } else { i + 1 };
            let im = if i == 0 { n - 1 } else { i - 1 };
            out[i] = (f[ip] - 2.0 * f[i] + f[im]) / h2;
        }
    } else {
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
        }
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    }
    out
}
