//! Explicit stationary states and traveling-wave pressures.

use std::f64::consts::PI;

use crate::drift::{convolve, AnalyticField, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::fields::DensityField;
use crate::grid::Grid;

/// Right-moving front `u = c (ct - x)_+`.
pub fn traveling_wave_pressure(x: f64, t: f64, c: f64) -> f64 {
    c * (c * t - x).max(0.0)
}

/// Left-moving mirror image `u = c (ct + x)_+`.
pub fn traveling_wave_pressure_reflected(x: f64, t: f64, c: f64) -> f64 {
    c * (c * t + x).max(0.0)
}

/// Stationary pair on the unit torus: `rho = sin(2πx) + 1`, `W = Φ'`,
/// `Φ = -4 cos(2πx)`, `m = 2`, `V = 0`. The density vanishes at `x = 3/4`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TorusStationary;

impl TorusStationary {
    pub const M: f64 = 2.0;
    pub const ZERO: f64 = 0.75;

    pub fn density(x: f64) -> f64 {
        (2.0 * PI * x).sin() + 1.0
    }

    /// `Φ = -4 cos(2πx)`.
    pub fn potential() -> VectorFieldSpec {
        VectorFieldSpec::Analytic(AnalyticField::CosinePotential { a: 4.0 })
    }

    /// `W = Φ' = 8π sin(2πx)`.
    pub fn kernel() -> VectorFieldSpec {
        VectorFieldSpec::Analytic(AnalyticField::CosineGradient { a: 4.0 })
    }

    /// Closed-form drift `B = -(Φ * rho)' = 4π cos(2πx)`.
    pub fn drift(x: f64) -> f64 {
        4.0 * PI * (2.0 * PI * x).cos()
    }

    pub fn initial(n_cells: usize) -> Result<DensityField> {
        DensityField::from_fn(Grid::periodic(1.0, n_cells)?, 0.0, Self::density)
    }

    /// `2 rho + Φ * rho`, constant (= 2) for the stationary density.
    pub fn certificate(rho: &DensityField) -> Result<Vec<f64>> {
        let conv = convolve(&Self::potential(), rho)?;
        Ok(rho
            .values
            .iter()
            .zip(conv)
            .map(|(r, c)| 2.0 * r + c)
            .collect())
    }
}

/// `(density, kernel W, m)` of the torus example on an `n_cells` grid.
pub fn torus_stationary(n_cells: usize) -> Result<(DensityField, VectorFieldSpec, f64)> {
    Ok((
        TorusStationary::initial(n_cells)?,
        TorusStationary::kernel(),
        TorusStationary::M,
    ))
}

/// Bump `Ψ = -exp(-1/(1-y²))`, `y = (x - center)/half_width`, zero outside
/// the interval. Returns `(Ψ, Ψ', Ψ'')` in `x`.
pub fn bump_potential(x: f64, center: f64, half_width: f64) -> (f64, f64, f64) {
    let y = (x - center) / half_width;
    let s = 1.0 - y * y;
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = (-1.0 / s).exp();
    if e == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    // g = -1/s, Ψ = -e^g
    let g1 = -2.0 * y / (s * s);
    let g2 = -2.0 * (1.0 + 3.0 * y * y) / (s * s * s);
    let psi = -e;
    let psi_y = -e * g1;
    let psi_yy = -e * (g2 + g1 * g1);
    (psi, psi_y / half_width, psi_yy / (half_width * half_width))
}

/// Stationary density for the local drift `V = Ψ'` on the interval
/// `(center - half_width, center + half_width)`:
/// `rho = ((m-1)/m · (-Ψ))^{1/(m-1)}`, so the pressure equals `-Ψ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpStationary {
    pub m: f64,
    pub center: f64,
    pub half_width: f64,
}

impl BumpStationary {
    pub fn new(m: f64, center: f64, half_width: f64) -> Result<Self> {
        if !(m > 1.0) {
            return Err(Error::InvalidParameter(format!("m must exceed 1, got {m}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter(
                "bump interval must be non-empty".into(),
            ));
        }
        Ok(BumpStationary {
            m,
            center,
            half_width,
        })
    }

    /// From an interval `(a, b)`.
    pub fn on_interval(m: f64, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter(format!(
                "empty interval ({a}, {b})"
            )));
        }
        Self::new(m, 0.5 * (a + b), 0.5 * (b - a))
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn psi(&self, x: f64) -> f64 {
        bump_potential(x, self.center, self.half_width).0
    }

    pub fn density(&self, x: f64) -> f64 {
        let p = -self.psi(x);
        if p <= 0.0 {
            return 0.0;
        }
        ((self.m - 1.0) / self.m * p).powf(1.0 / (self.m - 1.0))
    }

    pub fn pressure(&self, x: f64) -> f64 {
        -self.psi(x)
    }

    /// `V = Ψ'`.
    pub fn velocity(&self) -> VectorFieldSpec {
        VectorFieldSpec::Analytic(AnalyticField::BumpGradient {
            center: self.center,
            half_width: self.half_width,
        })
    }

    /// `(m/(m-1)) rho^{m-1} + Ψ`, identically zero.
    pub fn certificate(&self, x: f64) -> f64 {
        self.m / (self.m - 1.0) * self.density(x).powf(self.m - 1.0) + self.psi(x)
    }
}

/// C¹ tent: linear flanks `slope (half_width - |x - center|)_+` joined by a
/// parabolic cap of half-width `rounding`. The flanks are traveling-wave
/// pressure profiles of speed `slope`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundedTent {
    pub slope: f64,
    pub center: f64,
    pub half_width: f64,
    pub rounding: f64,
}

impl RoundedTent {
    pub fn pressure(&self, x: f64) -> f64 {
        let y = (x - self.center).abs();
        let d = self.rounding.min(self.half_width);
        if y < d {
            self.slope * (self.half_width - 0.5 * d - y * y / (2.0 * d))
        } else {
            self.slope * (self.half_width - y).max(0.0)
        }
    }

    pub fn density(&self, x: f64, m: f64) -> f64 {
        ((m - 1.0) / m * self.pressure(x)).powf(1.0 / (m - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_certificate_is_two() {
        let rho = TorusStationary::initial(256).unwrap();
        for c in TorusStationary::certificate(&rho).unwrap() {
            assert!((c - 2.0).abs() < 1e-12);
        }
        assert!(TorusStationary::density(0.75).abs() < 1e-15);
        let (_, w, m) = torus_stationary(64).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(w, TorusStationary::kernel());
    }

    #[test]
    fn torus_flux_vanishes() {
        // rho (2 rho + Φ*rho)' = 0 because the certificate is constant
        let rho = TorusStationary::initial(128).unwrap();
        let cert = TorusStationary::certificate(&rho).unwrap();
        let d = crate::stencil::first_derivative(&rho.grid, &cert);
        for (r, dc) in rho.values.iter().zip(d) {
            assert!((r * dc).abs() < 1e-9);
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let h = 1e-6;
        for x in [-0.9, -0.3, 0.0, 0.45, 0.8] {
            let (p, p1, p2) = bump_potential(x, 0.1, 1.2);
            let fd1 = (bump_potential(x + h, 0.1, 1.2).0 - bump_potential(x - h, 0.1, 1.2).0) / (2.0 * h);
            let fd2 = (bump_potential(x + h, 0.1, 1.2).0 - 2.0 * p + bump_potential(x - h, 0.1, 1.2).0)
                / (h * h);
            assert!((fd1 - p1).abs() < 1e-7, "x = {x}");
            assert!((fd2 - p2).abs() < 1e-3, "x = {x}");
        }
    }

    #[test]
    fn bump_certificate_and_support() {
        for m in [1.5, 2.0, 3.0] {
            let b = BumpStationary::on_interval(m, -1.0, 3.0).unwrap();
            for k in 0..=200 {
                let x = -1.5 + 5.0 * k as f64 / 200.0;
                assert!(b.certificate(x).abs() < 1e-14);
                let inside = x > -1.0 && x < 3.0;
                if !inside {
                    assert_eq!(b.density(x), 0.0);
                }
            }
            assert!(b.density(1.0) > 0.0);
            assert_eq!(b.density(-1.0), 0.0);
            assert_eq!(b.density(3.0), 0.0);
        }
        assert!(BumpStationary::on_interval(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn traveling_wave_front() {
        let c = 1.3;
        assert_eq!(traveling_wave_pressure(c * 0.7, 0.7, c), 0.0);
        assert!((traveling_wave_pressure(0.0, 0.7, c) - c * c * 0.7).abs() < 1e-15);
        assert_eq!(traveling_wave_pressure_reflected(-c * 0.7, 0.7, c), 0.0);
    }

    #[test]
    fn rounded_tent_is_c1() {
        let tent = RoundedTent {
            slope: 1.0,
            center: 0.0,
            half_width: 1.0,
            rounding: 0.4,
        };
        let h = 1e-7;
        for y in [0.4 - 1e-3, 0.4 + 1e-3, 0.7, 0.99] {
            let d = (tent.pressure(y + h) - tent.pressure(y - h)) / (2.0 * h);
            let expect = if y < 0.4 { -y / 0.4 } else { -1.0 };
            assert!((d - expect).abs() < 1e-6);
        }
        assert_eq!(tent.pressure(1.0), 0.0);
        assert!((tent.pressure(0.0) - 0.8).abs() < 1e-15);
    }
}
