//! Field containers, model parameters and initial-data descriptions.

use crate::error::{Error, Result};
use crate::grid::{interpolate, Grid};
use crate::oracles::{Barenblatt, BumpStationary, RoundedTent, TorusStationary};

pub const DEFAULT_FB_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_CFL_SAFETY: f64 = 0.4;
pub const DEFAULT_DT_MAX: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Diffusion exponent, strictly above one.
    pub m: f64,
    /// Support cutoff, relative to the peak density.
    pub fb_threshold: f64,
    pub cfl_safety: f64,
    pub dt_max: f64,
}

impl ModelParams {
    pub fn new(m: f64) -> Result<Self> {
        let p = ModelParams {
            m,
            fb_threshold: DEFAULT_FB_THRESHOLD,
            cfl_safety: DEFAULT_CFL_SAFETY,
            dt_max: DEFAULT_DT_MAX,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_threshold(mut self, fb_threshold: f64) -> Result<Self> {
        self.fb_threshold = fb_threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "m must exceed 1, got {}",
                self.m
            )));
        }
        if !(self.fb_threshold > 0.0 && self.fb_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fb_threshold must lie in (0, 1), got {}",
                self.fb_threshold
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_safety must lie in (0, 1), got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        Ok(())
    }

    /// `m / (m - 1)`, the prefactor of the pressure transform.
    pub fn pressure_factor(&self) -> f64 {
        self.m / (self.m - 1.0)
    }
}

/// Non-negative density samples, one per cell, at a single time.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} density samples on a {}-cell grid",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "density must be finite and non-negative, cell {i} holds {v}"
            )));
        }
        Ok(DensityField { grid, values, time })
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        DensityField {
            grid,
            values: vec![0.0; grid.n_cells()],
            time,
        }
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().into_iter().map(f).collect();
        DensityField::new(grid, values, time)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn interpolate(&self, x: f64) -> Result<f64> {
        interpolate(&self.grid, &self.values, x)
    }
}

/// Shape of the initial density.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialProfile {
    /// Source-type self-similar solution evaluated at the start time.
    Barenblatt { mass: f64, center: f64 },
    /// Rounded tent whose flanks are traveling-wave pressure profiles of slope `speed`.
    TravelingWave {
        speed: f64,
        center: f64,
        half_width: f64,
        rounding: f64,
    },
    /// `sin(2πx) + 1` on the unit torus.
    TorusStationary,
    /// Stationary density balancing a bump potential on `(center - half_width, center + half_width)`.
    BumpStationary { center: f64, half_width: f64 },
    /// Tabulated `(x, rho)` samples, linearly interpolated, zero outside their range.
    Custom { x: Vec<f64>, rho: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub profile: InitialProfile,
    /// Exponent of the pressure growth `u0 >= c (r0 - x)^gamma` at the right edge, when known.
    pub growth_exponent: Option<f64>,
    pub growth_constant: Option<f64>,
}

impl InitialDataSpec {
    pub fn new(profile: InitialProfile) -> Self {
        InitialDataSpec {
            profile,
            growth_exponent: None,
            growth_constant: None,
        }
    }

    pub fn with_growth(mut self, exponent: f64, constant: f64) -> Self {
        self.growth_exponent = Some(exponent);
        self.growth_constant = Some(constant);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.growth_exponent {
            if !(g > 0.0 && g <= 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "growth exponent must lie in (0, 2], got {g}"
                )));
            }
        }
        if let Some(c) = self.growth_constant {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "growth constant must be positive, got {c}"
                )));
            }
        }
        match &self.profile {
            InitialProfile::Barenblatt { mass, .. } if !(*mass > 0.0) => Err(
                Error::InvalidParameter(format!("Barenblatt mass must be positive, got {mass}")),
            ),
            InitialProfile::TravelingWave {
                speed,
                half_width,
                rounding,
                ..
            } if !(*speed > 0.0 && *half_width > 0.0 && *rounding >= 0.0) => {
                Err(Error::InvalidParameter(
                    "traveling-wave profile needs speed > 0, half_width > 0, rounding >= 0".into(),
                ))
            }
            InitialProfile::BumpStationary { half_width, .. } if !(*half_width > 0.0) => Err(
                Error::InvalidParameter("bump interval must be non-empty".into()),
            ),
            InitialProfile::Custom { x, rho } => {
                if x.len() != rho.len() || x.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "custom profile needs at least two (x, rho) pairs".into(),
                    ));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "custom profile abscissae must increase".into(),
                    ));
                }
                if rho.iter().any(|r| !(*r >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "custom profile densities must be non-negative".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Samples the profile at cell centers at time `t`.
    pub fn sample(&self, grid: &Grid, m: f64, t: f64) -> Result<DensityField> {
        self.validate()?;
        match &self.profile {
            InitialProfile::Barenblatt { mass, center } => {
                if !(t > 0.0) {
                    return Err(Error::InvalidParameter(
                        "Barenblatt data needs a positive start time".into(),
                    ));
                }
                let b = Barenblatt::new(m, *mass)?.centered_at(*center);
                let values = grid
                    .centers()
                    .iter()
                    .map(|&x| b.density(x, t))
                    .collect::<Result<Vec<_>>>()?;
                DensityField::new(*grid, values, t)
            }
            InitialProfile::TravelingWave {
                speed,
                center,
                half_width,
                rounding,
            } => {
                let tent = RoundedTent {
                    slope: *speed,
                    center: *center,
                    half_width: *half_width,
                    rounding: *rounding,
                };
                DensityField::from_fn(*grid, t, |x| tent.density(x, m))
            }
            InitialProfile::TorusStationary => {
                if !grid.is_periodic() {
                    return Err(Error::InvalidParameter(
                        "the torus stationary profile needs a periodic grid".into(),
                    ));
                }
                DensityField::from_fn(*grid, t, TorusStationary::density)
            }
            InitialProfile::BumpStationary { center, half_width } => {
                let bump = BumpStationary::new(m, *center, *half_width)?;
                DensityField::from_fn(*grid, t, |x| bump.density(x))
            }
            InitialProfile::Custom { x, rho } => {
                let first = x[0];
                let last = x[x.len() - 1];
                DensityField::from_fn(*grid, t, |p| {
                    if p < first || p > last {
                        return 0.0;
                    }
                    let j = x.partition_point(|&v| v <= p).clamp(1, x.len() - 1);
                    let w = (p - x[j - 1]) / (x[j] - x[j - 1]);
                    (1.0 - w) * rho[j - 1] + w * rho[j]
                })
            }
        }
    }
}
