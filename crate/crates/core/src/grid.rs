//! Uniform 1D meshes on the torus or on a truncated line, plus the
//! piecewise-linear interpolation shared by every post-processing step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// The torus `[0, period)`.
    Periodic { period: f64 },
    /// The box `[xmin, xmax]` standing in for the real line.
    Line { xmin: f64, xmax: f64 },
}

impl Topology {
    pub fn extent(&self) -> f64 {
        match *self {
            Topology::Periodic { period } => period,
            Topology::Line { xmin, xmax } => xmax - xmin,
        }
    }

    pub fn xmin(&self) -> f64 {
        match *self {
            Topology::Periodic { .. } => 0.0,
            Topology::Line { xmin, .. } => xmin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    topology: Topology,
    n_cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(topology: Topology, n_cells: usize) -> Result<Self> {
        let extent = topology.extent();
        if !extent.is_finite() || extent <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        if !topology.xmin().is_finite() {
            return Err(Error::InvalidGrid("domain origin must be finite".into()));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        Ok(Grid {
            topology,
            n_cells,
            dx: extent / n_cells as f64,
        })
    }

    pub fn periodic(period: f64, n_cells: usize) -> Result<Self> {
        Grid::new(Topology::Periodic { period }, n_cells)
    }

    pub fn line(xmin: f64, xmax: f64, n_cells: usize) -> Result<Self> {
        Grid::new(Topology::Line { xmin, xmax }, n_cells)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.topology, Topology::Periodic { .. })
    }

    pub fn xmin(&self) -> f64 {
        self.topology.xmin()
    }

    pub fn xmax(&self) -> f64 {
        self.topology.xmin() + self.topology.extent()
    }

    pub fn extent(&self) -> f64 {
        self.topology.extent()
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.xmin() + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Index arithmetic modulo `n_cells`; only meaningful on the torus.
    pub fn wrap_index(&self, i: isize) -> usize {
        i.rem_euclid(self.n_cells as isize) as usize
    }

    /// Maps `x` into `[xmin, xmax)` on the torus; identity on the line.
    pub fn wrap_position(&self, x: f64) -> f64 {
        match self.topology {
            Topology::Periodic { period } => x.rem_euclid(period),
            Topology::Line { .. } => x,
        }
    }

    /// Displacement reduced to the minimum image `[-P/2, P/2)` on the torus.
    pub fn min_image(&self, d: f64) -> f64 {
        match self.topology {
            Topology::Periodic { period } => {
                let r = d.rem_euclid(period);
                if r >= 0.5 * period {
                    r - period
                } else {
                    r
                }
            }
            Topology::Line { .. } => d,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self.topology {
            Topology::Periodic { .. } => x.is_finite(),
            Topology::Line { xmin, xmax } => x >= xmin && x <= xmax,
        }
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Two bracketing cells and the weight of the right one for a query at `x`.
    pub fn bracket(&self, x: f64) -> Result<(usize, usize, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain {
                x,
                xmin: self.xmin(),
                xmax: self.xmax(),
            });
        }
        let n = self.n_cells;
        let s = (self.wrap_position(x) - self.xmin()) / self.dx - 0.5;
        match self.topology {
            Topology::Periodic { .. } => {
                let base = s.floor();
                let w = s - base;
                let i = self.wrap_index(base as isize);
                Ok((i, self.wrap_index(i as isize + 1), w))
            }
            Topology::Line { .. } => {
                if s <= 0.0 {
                    Ok((0, 0, 0.0))
                } else if s >= (n - 1) as f64 {
                    Ok((n - 1, n - 1, 0.0))
                } else {
                    let base = s.floor();
                    let i = base as usize;
                    Ok((i, i + 1, s - base))
                }
            }
        }
    }
}

/// Piecewise-linear interpolation of cell samples at `x`.
///
/// On the line the boundary value is held constant in the outer half cells.
pub fn interpolate(grid: &Grid, values: &[f64], x: f64) -> Result<f64> {
    if values.len() != grid.n_cells() {
        return Err(Error::GridMismatch(format!(
            "{} samples on a {}-cell grid",
            values.len(),
            grid.n_cells()
        )));
    }
    let (i, j, w) = grid.bracket(x)?;
    Ok((1.0 - w) * values[i] + w * values[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn make_grid_examples() {
        let g = Grid::periodic(1.0, 256).unwrap();
        assert_eq!(g.dx(), 1.0 / 256.0);
        let g = Grid::line(-4.0, 4.0, 800).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert!(matches!(
            Grid::line(4.0, -4.0, 100),
            Err(Error::InvalidGrid(_))
        ));
        assert!(Grid::periodic(1.0, 7).is_err());
        assert!(Grid::periodic(0.0, 64).is_err());
    }

    #[test]
    fn periodic_cell_width_times_count_is_period() {
        for n in [8, 100, 256, 1000, 4096] {
            let g = Grid::periodic(1.0, n).unwrap();
            let total = g.dx() * n as f64;
            assert!((total - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn centers_strictly_inside() {
        let g = Grid::line(-1.0, 2.0, 9).unwrap();
        for x in g.centers() {
            assert!(x > -1.0 && x < 2.0);
        }
    }

    #[test]
    fn interpolate_constant() {
        let g = Grid::line(0.0, 1.0, 16).unwrap();
        let v = vec![5.0; 16];
        for x in [0.0, 0.01, 0.5, 0.97, 1.0] {
            assert_eq!(interpolate(&g, &v, x).unwrap(), 5.0);
        }
    }

    #[test]
    fn interpolate_linear_on_line() {
        let g = Grid::line(0.0, 1.0, 50).unwrap();
        let v = g.centers();
        let y = interpolate(&g, &v, 0.5).unwrap();
        assert!((y - 0.5).abs() <= g.dx());
        // exact between interior centers
        for x in [0.1, 0.237, 0.6, 0.95] {
            assert!((interpolate(&g, &v, x).unwrap() - x).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolate_sine_on_torus_within_bound() {
        let g = Grid::periodic(1.0, 256).unwrap();
        let v: Vec<f64> = g.centers().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let y = interpolate(&g, &v, 0.1).unwrap();
        let bound = g.dx().powi(2) * (2.0 * PI).powi(2);
        assert!((y - (0.2 * PI).sin()).abs() <= bound);
        // wrap-around queries
        let a = interpolate(&g, &v, 1.1).unwrap();
        let b = interpolate(&g, &v, -0.9).unwrap();
        assert!((a - y).abs() < 1e-12 && (b - y).abs() < 1e-12);
        // across the seam
        let seam = interpolate(&g, &v, 0.0).unwrap();
        assert!(seam.abs() < 1e-12);
    }

    #[test]
    fn interpolate_outside_line_is_error() {
        let g = Grid::line(0.0, 1.0, 16).unwrap();
        let v = vec![1.0; 16];
        assert!(matches!(
            interpolate(&g, &v, 1.5),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn min_image_is_centered() {
        let g = Grid::periodic(2.0, 16).unwrap();
        assert_eq!(g.min_image(1.5), -0.5);
        assert_eq!(g.min_image(-1.5), 0.5);
        assert_eq!(g.min_image(0.25), 0.25);
    }

    proptest::proptest! {
        #[test]
        fn interpolation_exact_at_centers(vals in proptest::collection::vec(-10.0f64..10.0, 8..64)) {
            let g = Grid::line(-3.0, 5.0, vals.len()).unwrap();
            for (i, v) in vals.iter().enumerate() {
                let y = interpolate(&g, &vals, g.center(i)).unwrap();
                proptest::prop_assert!((y - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
            let gp = Grid::periodic(1.0, vals.len()).unwrap();
            for (i, v) in vals.iter().enumerate() {
                let y = interpolate(&gp, &vals, gp.center(i)).unwrap();
                proptest::prop_assert!((y - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }
}
