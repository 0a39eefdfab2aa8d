//! Drift assembly `B = -(V + W * rho)` and its spatial derivative.
//!
//! The convolution is midpoint quadrature over cell centers. Direct
//! summation defines the result; on the torus an FFT path computes the same
//! circular sum and is used automatically for larger grids.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::grid::Grid;
use crate::oracles::stationary::bump_potential;
use crate::stencil;

/// Closed-form fields. Periodic forms have unit period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticField {
    Constant { value: f64 },
    /// `a x`
    Linear { a: f64 },
    /// `-a cos(2πx)`
    CosinePotential { a: f64 },
    /// `2πa sin(2πx)`, the derivative of `CosinePotential`.
    CosineGradient { a: f64 },
    /// `Ψ'` for the bump `Ψ = -exp(-1/(1-y²))`, `y = (x - center) / half_width`.
    BumpGradient { center: f64, half_width: f64 },
    /// `amplitude exp(-(x - center)² / (2σ²))`
    Gaussian {
        amplitude: f64,
        sigma: f64,
        center: f64,
    },
}

impl AnalyticField {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            AnalyticField::Constant { value } => value,
            AnalyticField::Linear { a } => a * x,
            AnalyticField::CosinePotential { a } => -a * (2.0 * PI * x).cos(),
            AnalyticField::CosineGradient { a } => 2.0 * PI * a * (2.0 * PI * x).sin(),
            AnalyticField::BumpGradient { center, half_width } => {
                bump_potential(x, center, half_width).1
            }
            AnalyticField::Gaussian {
                amplitude,
                sigma,
                center,
            } => {
                let z = (x - center) / sigma;
                amplitude * (-0.5 * z * z).exp()
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            AnalyticField::Constant { .. } => 0.0,
            AnalyticField::Linear { a } => a,
            AnalyticField::CosinePotential { a } => 2.0 * PI * a * (2.0 * PI * x).sin(),
            AnalyticField::CosineGradient { a } => 4.0 * PI * PI * a * (2.0 * PI * x).cos(),
            AnalyticField::BumpGradient { center, half_width } => {
                bump_potential(x, center, half_width).2
            }
            AnalyticField::Gaussian {
                amplitude,
                sigma,
                center,
            } => {
                let z = (x - center) / sigma;
                -amplitude * z / sigma * (-0.5 * z * z).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            AnalyticField::BumpGradient { half_width, .. } => half_width > 0.0,
            AnalyticField::Gaussian { sigma, .. } => sigma > 0.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "degenerate analytic field {self:?}"
            )))
        }
    }
}

/// Uniformly spaced samples, linearly interpolated and zero outside their range.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedField {
    pub x0: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl TabulatedField {
    pub fn new(x0: f64, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0) || values.len() < 3 {
            return Err(Error::InvalidParameter(
                "tabulated field needs positive spacing and at least 3 samples".into(),
            ));
        }
        Ok(TabulatedField {
            x0,
            spacing,
            values,
        })
    }

    /// Reads a two-column `(displacement, value)` CSV; spacing must be uniform.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "{}: row {} column {} is not a number",
                            path.display(),
                            line + 1,
                            k + 1
                        ))
                    })
            };
            // tolerate a header row
            if line == 0 && record.get(0).is_some_and(|s| s.parse::<f64>().is_err()) {
                continue;
            }
            xs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        Self::from_samples(&xs, vs)
    }

    pub fn from_samples(xs: &[f64], values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 3 {
            return Err(Error::InvalidParameter(
                "tabulated field needs at least 3 (x, value) pairs".into(),
            ));
        }
        let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        for (k, w) in xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated displacements must be uniformly spaced (row {})",
                    k + 2
                )));
            }
        }
        TabulatedField::new(xs[0], spacing, values)
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.spacing;
        let last = (self.values.len() - 1) as f64;
        if !(s >= 0.0 && s <= last) {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    /// Central differences of the samples, interpolated the same way.
    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.spacing;
        let d = |i: usize| -> f64 {
            if i == 0 {
                (self.values[1] - self.values[0]) / h
            } else if i == n - 1 {
                (self.values[n - 1] - self.values[n - 2]) / h
            } else {
                (self.values[i + 1] - self.values[i - 1]) / (2.0 * h)
            }
        };
        let s = (x - self.x0) / h;
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        (1.0 - w) * d(i) + w * d(i + 1)
    }

    /// Largest second difference `|f(i+1) - 2f(i) + f(i-1)| / h²`; a smoothness probe.
    pub fn max_second_difference(&self) -> f64 {
        let h2 = self.spacing * self.spacing;
        self.values
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / h2)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorFieldSpec {
    Zero,
    Analytic(AnalyticField),
    Tabulated(TabulatedField),
}

impl VectorFieldSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, VectorFieldSpec::Zero)
    }

    /// Field value at `(x, t)`. Supported kinds are time independent.
    pub fn value(&self, x: f64, _t: f64) -> f64 {
        match self {
            VectorFieldSpec::Zero => 0.0,
            VectorFieldSpec::Analytic(f) => f.value(x),
            VectorFieldSpec::Tabulated(f) => f.value(x),
        }
    }

    pub fn derivative(&self, x: f64, _t: f64) -> f64 {
        match self {
            VectorFieldSpec::Zero => 0.0,
            VectorFieldSpec::Analytic(f) => f.derivative(x),
            VectorFieldSpec::Tabulated(f) => f.derivative(x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VectorFieldSpec::Analytic(f) => f.validate(),
            _ => Ok(()),
        }
    }
}

/// Drift samples `B` and `B_x` at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftField {
    pub grid: Grid,
    pub b_values: Vec<f64>,
    pub bx_values: Vec<f64>,
    pub time: f64,
}

impl DriftField {
    pub fn zeros(grid: Grid, time: f64) -> Self {
        DriftField {
            grid,
            b_values: vec![0.0; grid.n_cells()],
            bx_values: vec![0.0; grid.n_cells()],
            time,
        }
    }

    pub fn b_at(&self, x: f64) -> Result<f64> {
        crate::grid::interpolate(&self.grid, &self.b_values, x)
    }

    pub fn bx_at(&self, x: f64) -> Result<f64> {
        crate::grid::interpolate(&self.grid, &self.bx_values, x)
    }

    pub fn max_abs_b(&self) -> f64 {
        self.b_values.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn max_abs_bx(&self) -> f64 {
        self.bx_values.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

fn check_kernel_grid(kernel: &VectorFieldSpec, grid: &Grid) -> Result<()> {
    if let VectorFieldSpec::Tabulated(t) = kernel {
        let rel = (t.spacing - grid.dx()).abs() / grid.dx();
        if rel > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "kernel tabulated at spacing {} but the grid has dx = {}",
                t.spacing,
                grid.dx()
            )));
        }
    }
    kernel.validate()
}

/// Reference midpoint-rule convolution `(W * rho)(x_i) = Σ_j W(x_i - x_j) rho_j dx`
/// by direct summation, with displacements wrapped to the minimum image on the torus.
pub fn convolve(kernel: &VectorFieldSpec, rho: &DensityField) -> Result<Vec<f64>> {
    let grid = rho.grid;
    check_kernel_grid(kernel, &grid)?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            if grid.is_periodic() {
                // summed by displacement index so that shifts commute exactly
                for k in 0..n {
                    let d = grid.min_image(k as f64 * dx);
                    acc += kernel.value(d, rho.time) * rho.values[(i + n - k) % n];
                }
            } else {
                for (j, r) in rho.values.iter().enumerate() {
                    acc += kernel.value((i as f64 - j as f64) * dx, rho.time) * r;
                }
            }
            acc * dx
        })
        .collect();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    /// Direct summation against a precomputed kernel table.
    Direct,
    /// Circular convolution by FFT; torus only.
    Fft,
    /// FFT on the torus from 64 cells up, direct otherwise.
    #[default]
    Auto,
}

/// Smallest periodic grid routed to the FFT path by [`ConvolutionMethod::Auto`].
pub const FFT_MIN_CELLS: usize = 64;

struct FftPath {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Spectrum of `w + i w'`.
    spectrum: Vec<Complex<f64>>,
}

/// Convolution against a fixed kernel on a fixed grid, returning `W * rho`
/// and, when the kernel derivative is available, `W' * rho`.
pub struct Convolver {
    grid: Grid,
    /// Kernel at displacements `k dx`: `k = 0..n` wrapped on the torus,
    /// `k = -(n-1)..n` (offset by `n - 1`) on the line.
    table: Vec<f64>,
    deriv_table: Option<Vec<f64>>,
    fft: Option<FftPath>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("grid", &self.grid)
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

impl Convolver {
    pub fn new(kernel: &VectorFieldSpec, grid: Grid, method: ConvolutionMethod) -> Result<Self> {
        check_kernel_grid(kernel, &grid)?;
        let n = grid.n_cells();
        let dx = grid.dx();
        let displacements: Vec<f64> = if grid.is_periodic() {
            (0..n).map(|k| grid.min_image(k as f64 * dx)).collect()
        } else {
            (0..2 * n - 1)
                .map(|k| (k as f64 - (n - 1) as f64) * dx)
                .collect()
        };
        let table: Vec<f64> = displacements.iter().map(|&d| kernel.value(d, 0.0)).collect();
        let deriv_table = match kernel {
            VectorFieldSpec::Tabulated(_) => None,
            _ => Some(
                displacements
                    .iter()
                    .map(|&d| kernel.derivative(d, 0.0))
                    .collect::<Vec<_>>(),
            ),
        };
        let use_fft = match method {
            ConvolutionMethod::Direct => false,
            ConvolutionMethod::Fft => {
                if !grid.is_periodic() {
                    return Err(Error::InvalidParameter(
                        "the FFT convolution path needs a periodic grid".into(),
                    ));
                }
                true
            }
            ConvolutionMethod::Auto => grid.is_periodic() && n >= FFT_MIN_CELLS,
        };
        let fft = if use_fft {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let mut spectrum: Vec<Complex<f64>> = (0..n)
                .map(|k| {
                    let im = deriv_table.as_ref().map_or(0.0, |d| d[k]);
                    Complex::new(table[k], im)
                })
                .collect();
            forward.process(&mut spectrum);
            Some(FftPath {
                forward,
                inverse,
                spectrum,
            })
        } else {
            None
        };
        Ok(Convolver {
            grid,
            table,
            deriv_table,
            fft,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv_table.is_some()
    }

    /// `(W * rho, W' * rho)`; the second entry is `None` for tabulated kernels.
    pub fn apply(&self, rho: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
        let n = self.grid.n_cells();
        let dx = self.grid.dx();
        if let Some(fft) = &self.fft {
            let mut buf: Vec<Complex<f64>> = rho.iter().map(|&r| Complex::new(r, 0.0)).collect();
            fft.forward.process(&mut buf);
            for (b, s) in buf.iter_mut().zip(&fft.spectrum) {
                *b *= s;
            }
            fft.inverse.process(&mut buf);
            let scale = dx / n as f64;
            let conv = buf.iter().map(|c| c.re * scale).collect();
            let deriv = self
                .deriv_table
                .as_ref()
                .map(|_| buf.iter().map(|c| c.im * scale).collect());
            return (conv, deriv);
        }
        let conv = self.direct(&self.table, rho);
        let deriv = self.deriv_table.as_ref().map(|t| self.direct(t, rho));
        (conv, deriv)
    }

    fn direct(&self, table: &[f64], rho: &[f64]) -> Vec<f64> {
        let n = self.grid.n_cells();
        let dx = self.grid.dx();
        let periodic = self.grid.is_periodic();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                if periodic {
                    for (k, w) in table.iter().enumerate() {
                        acc += w * rho[(i + n - k) % n];
                    }
                } else {
                    for (j, r) in rho.iter().enumerate() {
                        acc += table[i + n - 1 - j] * r;
                    }
                }
                acc * dx
            })
            .collect()
    }
}

/// `V` and `W` prepared for repeated drift assembly on one grid.
#[derive(Debug)]
pub struct DriftModel {
    grid: Grid,
    v: VectorFieldSpec,
    w: VectorFieldSpec,
    v_values: Vec<f64>,
    v_derivs: Vec<f64>,
    convolver: Option<Convolver>,
}

impl DriftModel {
    pub fn new(
        grid: Grid,
        v: VectorFieldSpec,
        w: VectorFieldSpec,
        method: ConvolutionMethod,
    ) -> Result<Self> {
        v.validate()?;
        let centers = grid.centers();
        let v_values = centers.iter().map(|&x| v.value(x, 0.0)).collect();
        let v_derivs = centers.iter().map(|&x| v.derivative(x, 0.0)).collect();
        let convolver = if w.is_zero() {
            None
        } else {
            Some(Convolver::new(&w, grid, method)?)
        };
        Ok(DriftModel {
            grid,
            v,
            w,
            v_values,
            v_derivs,
            convolver,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v(&self) -> &VectorFieldSpec {
        &self.v
    }

    pub fn w(&self) -> &VectorFieldSpec {
        &self.w
    }

    pub fn is_local(&self) -> bool {
        self.w.is_zero()
    }

    pub fn assemble(&self, rho: &DensityField) -> Result<DriftField> {
        self.grid.ensure_same(&rho.grid)?;
        let n = self.grid.n_cells();
        let mut b: Vec<f64> = self.v_values.iter().map(|v| -v).collect();
        let mut bx: Vec<f64> = self.v_derivs.iter().map(|v| -v).collect();
        if let Some(conv) = &self.convolver {
            let (c, dc) = conv.apply(&rho.values);
            for i in 0..n {
                b[i] -= c[i];
            }
            match dc {
                Some(dc) => {
                    for i in 0..n {
                        bx[i] -= dc[i];
                    }
                }
                None => bx = stencil::first_derivative(&self.grid, &b),
            }
        }
        Ok(DriftField {
            grid: self.grid,
            b_values: b,
            bx_values: bx,
            time: rho.time,
        })
    }
}

/// One-shot drift assembly; prefer [`DriftModel`] inside time loops.
pub fn assemble_drift(
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    rho: &DensityField,
    t: f64,
) -> Result<DriftField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "drift time must be non-negative, got {t}"
        )));
    }
    let model = DriftModel::new(rho.grid, v.clone(), w.clone(), ConvolutionMethod::Auto)?;
    let mut field = model.assemble(rho)?;
    field.time = t;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_density(n: usize) -> DensityField {
        let g = Grid::periodic(1.0, n).unwrap();
        DensityField::from_fn(g, 0.0, |x| (2.0 * PI * x).sin() + 1.0).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn cosine_potential_convolution_is_minus_two_sine() {
        let rho = torus_density(256);
        let phi = VectorFieldSpec::Analytic(AnalyticField::CosinePotential { a: 4.0 });
        let c = convolve(&phi, &rho).unwrap();
        for (x, v) in rho.grid.centers().iter().zip(&c) {
            assert!((v + 2.0 * (2.0 * PI * x).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let g = Grid::line(-2.0, 2.0, 40).unwrap();
        let rho = DensityField::zeros(g, 0.0);
        let k = VectorFieldSpec::Analytic(AnalyticField::Gaussian {
            amplitude: 1.0,
            sigma: 0.5,
            center: 0.0,
        });
        assert!(convolve(&k, &rho).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn point_mass_recovers_kernel_samples() {
        let g = Grid::line(-3.0, 3.0, 120).unwrap();
        let j0 = 50;
        let x0 = g.center(j0);
        let mut vals = vec![0.0; 120];
        vals[j0] = 1.0 / g.dx();
        let rho = DensityField::new(g, vals, 0.0).unwrap();
        let gauss = AnalyticField::Gaussian {
            amplitude: 1.0,
            sigma: 0.5,
            center: 0.0,
        };
        let c = convolve(&VectorFieldSpec::Analytic(gauss), &rho).unwrap();
        for (i, x) in g.centers().iter().enumerate() {
            assert!((c[i] - gauss.value(x - x0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct() {
        for n in [64, 256, 512] {
            let rho = torus_density(n);
            for kernel in [
                AnalyticField::CosineGradient { a: 4.0 },
                AnalyticField::Gaussian {
                    amplitude: 2.0,
                    sigma: 0.1,
                    center: 0.0,
                },
            ] {
                let spec = VectorFieldSpec::Analytic(kernel);
                let reference = convolve(&spec, &rho).unwrap();
                let fft = Convolver::new(&spec, rho.grid, ConvolutionMethod::Fft).unwrap();
                let direct = Convolver::new(&spec, rho.grid, ConvolutionMethod::Direct).unwrap();
                let (a, da) = fft.apply(&rho.values);
                let (b, db) = direct.apply(&rho.values);
                let scale = reference.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
                assert!(max_abs_diff(&a, &reference) <= 1e-12 * scale);
                assert!(max_abs_diff(&b, &reference) <= 1e-12 * scale);
                let (da, db) = (da.unwrap(), db.unwrap());
                let dscale = db.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
                assert!(max_abs_diff(&da, &db) <= 1e-12 * dscale);
            }
        }
    }

    #[test]
    fn torus_drift_is_four_pi_cosine() {
        let rho = torus_density(256);
        let w = VectorFieldSpec::Analytic(AnalyticField::CosineGradient { a: 4.0 });
        let d = assemble_drift(&VectorFieldSpec::Zero, &w, &rho, 0.0).unwrap();
        for (i, x) in rho.grid.centers().iter().enumerate() {
            assert!((d.b_values[i] - 4.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-11);
            assert!((d.bx_values[i] + 8.0 * PI * PI * (2.0 * PI * x).sin()).abs() < 1e-10);
        }
        assert!(d.b_at(0.75).unwrap().abs() < 1e-3);
    }

    #[test]
    fn linear_v_gives_minus_x() {
        let g = Grid::line(-2.0, 2.0, 32).unwrap();
        let rho = DensityField::from_fn(g, 0.0, |x| (1.0 - x * x).max(0.0)).unwrap();
        let v = VectorFieldSpec::Analytic(AnalyticField::Linear { a: 1.0 });
        let d = assemble_drift(&v, &VectorFieldSpec::Zero, &rho, 0.3).unwrap();
        for (i, x) in g.centers().iter().enumerate() {
            assert_eq!(d.b_values[i], -x);
            assert_eq!(d.bx_values[i], -1.0);
        }
        assert_eq!(d.time, 0.3);
        let z = assemble_drift(&VectorFieldSpec::Zero, &VectorFieldSpec::Zero, &rho, 0.0).unwrap();
        assert!(z.b_values.iter().chain(&z.bx_values).all(|v| *v == 0.0));
    }

    #[test]
    fn constant_kernel_weights_total_mass() {
        let g = Grid::line(-1.0, 1.0, 64).unwrap();
        let rho = DensityField::from_fn(g, 0.0, |x| (1.0 - x * x).max(0.0)).unwrap();
        let k = VectorFieldSpec::Analytic(AnalyticField::Constant { value: 2.5 });
        let c = convolve(&k, &rho).unwrap();
        let expect = 2.5 * rho.total_mass();
        for v in c {
            assert!((v - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn derivative_consistency_for_analytic_kernel() {
        // W' * rho against central differences of W * rho: second order in dx.
        let mut errs = Vec::new();
        for n in [128, 256] {
            let g = Grid::line(-3.0, 3.0, n).unwrap();
            let rho = DensityField::from_fn(g, 0.0, |x| (-4.0 * x * x).exp()).unwrap();
            let w = VectorFieldSpec::Analytic(AnalyticField::Gaussian {
                amplitude: 1.0,
                sigma: 0.4,
                center: 0.3,
            });
            let conv = Convolver::new(&w, g, ConvolutionMethod::Direct).unwrap();
            let (c, dc) = conv.apply(&rho.values);
            let fd = stencil::first_derivative(&g, &c);
            let dc = dc.unwrap();
            errs.push(max_abs_diff(&fd[1..n - 1], &dc[1..n - 1]));
        }
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn tabulated_kernel_spacing_must_match_grid() {
        let g = Grid::periodic(1.0, 16).unwrap();
        let t = TabulatedField::new(-0.5, 0.1, vec![1.0; 11]).unwrap();
        let rho = DensityField::zeros(g, 0.0);
        assert!(matches!(
            convolve(&VectorFieldSpec::Tabulated(t), &rho),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn tabulated_kernel_uses_central_differences_for_bx() {
        let g = Grid::periodic(1.0, 64).unwrap();
        let xs: Vec<f64> = (0..65).map(|k| -0.5 + k as f64 / 64.0).collect();
        let vals: Vec<f64> = xs.iter().map(|x| 8.0 * PI * (2.0 * PI * x).sin()).collect();
        let t = TabulatedField::from_samples(&xs, vals).unwrap();
        let rho = DensityField::from_fn(g, 0.0, |x| (2.0 * PI * x).sin() + 1.0).unwrap();
        let d = assemble_drift(&VectorFieldSpec::Zero, &VectorFieldSpec::Tabulated(t), &rho, 0.0)
            .unwrap();
        for (i, x) in g.centers().iter().enumerate() {
            assert!((d.b_values[i] - 4.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-9);
            assert!((d.bx_values[i] + 8.0 * PI * PI * (2.0 * PI * x).sin()).abs() < 0.2);
        }
    }

    #[test]
    fn tabulated_rejects_uneven_spacing() {
        assert!(TabulatedField::from_samples(&[0.0, 0.1, 0.25], vec![1.0; 3]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn convolution_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            r1 in proptest::collection::vec(0.0f64..2.0, 32),
            r2 in proptest::collection::vec(0.0f64..2.0, 32),
        ) {
            let g = Grid::periodic(1.0, 32).unwrap();
            let k = VectorFieldSpec::Analytic(AnalyticField::Gaussian { amplitude: 1.0, sigma: 0.2, center: 0.05 });
            let f1 = DensityField::new(g, r1.clone(), 0.0).unwrap();
            let f2 = DensityField::new(g, r2.clone(), 0.0).unwrap();
            let c1 = convolve(&k, &f1).unwrap();
            let c2 = convolve(&k, &f2).unwrap();
            // the combination may be negative, so sum directly
            let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
            let dx = g.dx();
            let scale = c1.iter().chain(&c2).fold(1e-12f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs() + 1.0);
            for i in 0..32 {
                let mut direct = 0.0;
                for j in 0..32 {
                    direct += k.value(g.min_image(((i + 32 - j) % 32) as f64 * dx), 0.0) * mix[j];
                }
                direct *= dx;
                proptest::prop_assert!((direct - (a * c1[i] + b * c2[i])).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn convolution_is_translation_equivariant(
            r in proptest::collection::vec(0.0f64..2.0, 48),
            shift in 0usize..48,
        ) {
            let g = Grid::periodic(1.0, 48).unwrap();
            let k = VectorFieldSpec::Analytic(AnalyticField::CosineGradient { a: 1.0 });
            let base = convolve(&k, &DensityField::new(g, r.clone(), 0.0).unwrap()).unwrap();
            let shifted: Vec<f64> = (0..48).map(|i| r[(i + 48 - shift) % 48]).collect();
            let moved = convolve(&k, &DensityField::new(g, shifted, 0.0).unwrap()).unwrap();
            for i in 0..48 {
                proptest::prop_assert_eq!(moved[i], base[(i + 48 - shift) % 48]);
            }
        }
    }
}
