//! The 1D source-type self-similar solution of `rho_t = (rho^m)_xx`:
//!
//! `rho(x, t) = t^{-a} (C - k x² t^{-2a})_+^{1/(m-1)}`, `a = 1/(m+1)`,
//! `k = a (m-1) / (2m)`, with `C` fixed by the total mass.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub mass: f64,
    pub center: f64,
    /// Self-similarity exponent `1/(m+1)`.
    pub alpha: f64,
    /// Profile curvature coefficient `alpha (m-1) / (2m)`.
    pub k: f64,
    /// Height constant fixed by the mass.
    pub c: f64,
}

impl Barenblatt {
    pub fn new(m: f64, mass: f64) -> Result<Self> {
        if !(m > 1.0) {
            return Err(Error::InvalidParameter(format!("m must exceed 1, got {m}")));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        let alpha = 1.0 / (m + 1.0);
        let k = alpha * (m - 1.0) / (2.0 * m);
        let p = 1.0 / (m - 1.0);
        // ∫(C - k y²)_+^p dy = C^{p+1/2} k^{-1/2} B(1/2, p+1)
        let ln_beta = ln_gamma(0.5) + ln_gamma(p + 1.0) - ln_gamma(p + 1.5);
        let c = ((mass.ln() + 0.5 * k.ln() - ln_beta) / (p + 0.5)).exp();
        Ok(Barenblatt {
            m,
            mass,
            center: 0.0,
            alpha,
            k,
            c,
        })
    }

    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    fn check_time(t: f64) -> Result<()> {
        if t > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Barenblatt profile needs t > 0, got {t}"
            )))
        }
    }

    /// `C - k x² t^{-2a}` without the positive part.
    fn bracket(&self, x: f64, t: f64) -> f64 {
        let y = x - self.center;
        self.c - self.k * y * y * t.powf(-2.0 * self.alpha)
    }

    pub fn density(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let b = self.bracket(x, t);
        if b <= 0.0 {
            return Ok(0.0);
        }
        Ok(t.powf(-self.alpha) * b.powf(1.0 / (self.m - 1.0)))
    }

    pub fn pressure(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let b = self.bracket(x, t).max(0.0);
        Ok(self.m / (self.m - 1.0) * t.powf(-self.alpha * (self.m - 1.0)) * b)
    }

    /// `u_x`, zero outside the support.
    pub fn pressure_x(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        if self.bracket(x, t) <= 0.0 {
            return Ok(0.0);
        }
        let y = x - self.center;
        Ok(-self.m / (self.m - 1.0)
            * t.powf(-self.alpha * (self.m - 1.0) - 2.0 * self.alpha)
            * 2.0
            * self.k
            * y)
    }

    /// `u_t`, zero outside the support.
    pub fn pressure_t(&self, x: f64, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        let b = self.bracket(x, t);
        if b <= 0.0 {
            return Ok(0.0);
        }
        let y = x - self.center;
        let e = self.alpha * (self.m - 1.0);
        let pref = self.m / (self.m - 1.0);
        Ok(pref
            * (-e * t.powf(-e - 1.0) * b
                + t.powf(-e) * 2.0 * self.alpha * self.k * y * y * t.powf(-2.0 * self.alpha - 1.0)))
    }

    /// Interior pressure curvature, `-1/((m+1) t)`.
    pub fn pressure_xx(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(-1.0 / ((self.m + 1.0) * t))
    }

    /// Half-width of the support; the edges sit at `center ± front(t)`.
    pub fn front(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok((self.c / self.k).sqrt() * t.powf(self.alpha))
    }

    pub fn peak_density(&self, t: f64) -> Result<f64> {
        self.density(self.center, t)
    }

    pub fn peak_pressure(&self, t: f64) -> Result<f64> {
        self.pressure(self.center, t)
    }
}

/// Density of the centered profile carrying `total_mass`.
pub fn barenblatt(x: f64, t: f64, m: f64, total_mass: f64) -> Result<f64> {
    Barenblatt::new(m, total_mass)?.density(x, t)
}
