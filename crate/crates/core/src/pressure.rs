//! Pressure transform, discrete derivatives, the pressure-equation operator
//! and the semiconvexity and Lipschitz monitors.

use serde::{Deserialize, Serialize};

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::fields::{DensityField, ModelParams};
use crate::grid::{interpolate, Grid};
use crate::solver::Trajectory;
use crate::stencil;

/// Pressure samples `u = (m/(m-1)) rho^{m-1}`, one per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl PressureField {
    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn interpolate(&self, x: f64) -> Result<f64> {
        interpolate(&self.grid, &self.values, x)
    }
}

fn check_m(m: f64) -> Result<()> {
    if m > 1.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("m must exceed 1, got {m}")))
    }
}

/// `rho^{m-1}` with exact fast paths for the common integer exponents.
pub(crate) fn pow_m1(rho: f64, m: f64) -> f64 {
    let e = m - 1.0;
    if e == 1.0 {
        rho
    } else if e == 2.0 {
        rho * rho
    } else if rho == 0.0 {
        0.0
    } else {
        rho.powf(e)
    }
}

pub fn to_pressure(rho: &DensityField, m: f64) -> Result<PressureField> {
    check_m(m)?;
    let f = m / (m - 1.0);
    Ok(PressureField {
        grid: rho.grid,
        values: rho.values.iter().map(|&r| f * pow_m1(r, m)).collect(),
        time: rho.time,
    })
}

/// Inverse transform `rho = ((m-1)/m · u)^{1/(m-1)}`.
pub fn to_density(u: &PressureField, m: f64) -> Result<DensityField> {
    check_m(m)?;
    let f = (m - 1.0) / m;
    let values = u
        .values
        .iter()
        .map(|&p| if p > 0.0 { (f * p).powf(1.0 / (m - 1.0)) } else { 0.0 })
        .collect();
    DensityField::new(u.grid, values, u.time)
}

/// Second-order `(u_x, u_xx)`, one-sided at the edges of a line box.
pub fn discrete_derivatives(u: &PressureField) -> (Vec<f64>, Vec<f64>) {
    (
        stencil::first_derivative(&u.grid, &u.values),
        stencil::second_derivative(&u.grid, &u.values),
    )
}

/// `𝓛(u) = u_t - (m-1) u u_xx - u_x² + u_x B + (m-1) u B_x` at one point.
pub fn operator_at(u: f64, u_t: f64, u_x: f64, u_xx: f64, b: f64, b_x: f64, m: f64) -> f64 {
    u_t - (m - 1.0) * u * u_xx - u_x * u_x + u_x * b + (m - 1.0) * u * b_x
}

/// Cellwise `𝓛(u)` given a caller-supplied `u_t`.
pub fn pme_residual(u: &PressureField, u_t: &[f64], drift: &DriftField, m: f64) -> Result<Vec<f64>> {
    check_m(m)?;
    u.grid.ensure_same(&drift.grid)?;
    if u_t.len() != u.values.len() {
        return Err(Error::GridMismatch(format!(
            "{} time-derivative samples for {} cells",
            u_t.len(),
            u.values.len()
        )));
    }
    if (u.time - drift.time).abs() > 1e-12 * (1.0 + u.time.abs()) {
        return Err(Error::MisalignedTimes(format!(
            "pressure at t = {} but drift at t = {}",
            u.time, drift.time
        )));
    }
    let (ux, uxx) = discrete_derivatives(u);
    Ok((0..u.values.len())
        .map(|i| {
            operator_at(
                u.values[i],
                u_t[i],
                ux[i],
                uxx[i],
                drift.b_values[i],
                drift.bx_values[i],
                m,
            )
        })
        .collect())
}

/// Difference quotient `(next - prev) / (t_next - t_prev)`.
pub fn time_derivative(prev: &PressureField, next: &PressureField) -> Result<Vec<f64>> {
    prev.grid.ensure_same(&next.grid)?;
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(Error::MisalignedTimes(format!(
            "snapshots at t = {} and t = {} are not increasing",
            prev.time, next.time
        )));
    }
    Ok(prev
        .values
        .iter()
        .zip(&next.values)
        .map(|(a, b)| (b - a) / dt)
        .collect())
}

/// Cells whose pressure, and that of every neighbor within `margin` cells,
/// is at least `level_rel` times the peak pressure.
pub fn safe_interior_mask(u: &PressureField, level_rel: f64, margin: usize) -> Vec<bool> {
    let n = u.values.len();
    let level = level_rel * u.peak();
    let above: Vec<bool> = u.values.iter().map(|&v| v > 0.0 && v >= level).collect();
    let m = margin as isize;
    (0..n)
        .map(|i| {
            (-m..=m).all(|d| {
                let j = i as isize + d;
                if u.grid.is_periodic() {
                    above[u.grid.wrap_index(j)]
                } else {
                    j >= 0 && (j as usize) < n && above[j as usize]
                }
            })
        })
        .collect()
}

/// Cells between the support edge and the safe interior: the boundary fit
/// window (offset 2, width 5) plus one.
pub const DEFAULT_MASK_MARGIN: usize = 8;

/// Default safe-interior mask: `u >= 10 · fb_threshold · peak`, at least
/// [`DEFAULT_MASK_MARGIN`] cells away from the support edge.
pub fn default_mask(u: &PressureField, params: &ModelParams) -> Vec<bool> {
    safe_interior_mask(u, 10.0 * params.fb_threshold, DEFAULT_MASK_MARGIN)
}

/// `min (u_xx + 1/t + C)` over the masked cells; `+∞` on an empty mask.
pub fn aronson_benilan_gap(u: &PressureField, t: f64, c: f64, mask: &[bool]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "semiconvexity gap needs t > 0, got {t}"
        )));
    }
    let (_, uxx) = discrete_derivatives(u);
    Ok(uxx
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v + 1.0 / t + c)
        .fold(f64::INFINITY, f64::min))
}

/// Smallest `C >= 0` with `u_xx >= -1/t - C` on every masked cell of every
/// `(u, t)` pair.
pub fn fit_aronson_benilan<'a>(
    samples: impl IntoIterator<Item = (&'a PressureField, f64, &'a [bool])>,
) -> Result<f64> {
    let mut c = 0.0f64;
    for (u, t, mask) in samples {
        let gap = aronson_benilan_gap(u, t, 0.0, mask)?;
        if gap.is_finite() {
            c = c.max(-gap);
        }
    }
    Ok(c)
}

/// `sup (|u_x|² + |u_t|) / (1 + 1/t)`.
pub fn lipschitz_monitor(u: &PressureField, u_t: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz monitor needs t > 0, got {t}"
        )));
    }
    if u_t.len() != u.values.len() {
        return Err(Error::GridMismatch(format!(
            "{} time-derivative samples for {} cells",
            u_t.len(),
            u.values.len()
        )));
    }
    let (ux, _) = discrete_derivatives(u);
    let s = ux
        .iter()
        .zip(u_t)
        .map(|(a, b)| a * a + b.abs())
        .fold(0.0, f64::max);
    Ok(s / (1.0 + 1.0 / t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub min_uxx: f64,
    pub ab_constant_fit: f64,
    pub lipschitz_fit: f64,
    pub max_residual_interior: f64,
}

/// Pressure of every snapshot plus centered snapshot-difference `u_t`.
pub struct PressureHistory {
    pub pressures: Vec<PressureField>,
    pub time_derivatives: Vec<Vec<f64>>,
}

impl PressureHistory {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let m = traj.params.m;
        let pressures = traj
            .snapshots
            .iter()
            .map(|s| to_pressure(&s.rho, m))
            .collect::<Result<Vec<_>>>()?;
        let n = pressures.len();
        let mut time_derivatives = Vec::with_capacity(n);
        for i in 0..n {
            if n < 2 {
                time_derivatives.push(vec![0.0; pressures[i].values.len()]);
                continue;
            }
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            time_derivatives.push(time_derivative(&pressures[a], &pressures[b])?);
        }
        Ok(PressureHistory {
            pressures,
            time_derivatives,
        })
    }
}

/// Runs every pressure monitor over a trajectory. Snapshots at `t <= 0`
/// are skipped by the time-weighted monitors; the residual uses interior
/// snapshots only, where the centered `u_t` is available.
pub fn trajectory_diagnostics(traj: &Trajectory) -> Result<DiagnosticsReport> {
    let hist = PressureHistory::from_trajectory(traj)?;
    let params = &traj.params;
    let n = hist.pressures.len();
    let masks: Vec<Vec<bool>> = hist
        .pressures
        .iter()
        .map(|u| default_mask(u, params))
        .collect();

    let mut min_uxx = f64::INFINITY;
    let mut lipschitz = 0.0f64;
    let mut ab_samples = Vec::new();
    let mut residual = 0.0f64;
    for (i, u) in hist.pressures.iter().enumerate() {
        let (_, uxx) = discrete_derivatives(u);
        for (v, m) in uxx.iter().zip(&masks[i]) {
            if *m {
                min_uxx = min_uxx.min(*v);
            }
        }
        if u.time > 0.0 {
            ab_samples.push((u, u.time, masks[i].as_slice()));
            if n >= 2 {
                lipschitz = lipschitz.max(lipschitz_monitor(u, &hist.time_derivatives[i], u.time)?);
            }
        }
        if i > 0 && i + 1 < n {
            let r = pme_residual(u, &hist.time_derivatives[i], &traj.snapshots[i].drift, params.m)?;
            for (v, m) in r.iter().zip(&masks[i]) {
                if *m {
                    residual = residual.max(v.abs());
                }
            }
        }
    }
    Ok(DiagnosticsReport {
        min_uxx: if min_uxx.is_finite() { min_uxx } else { 0.0 },
        ab_constant_fit: fit_aronson_benilan(ab_samples)?,
        lipschitz_fit: lipschitz,
        max_residual_interior: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{traveling_wave_pressure, Barenblatt};
    use std::f64::consts::PI;

    fn field(grid: Grid, t: f64, f: impl Fn(f64) -> f64) -> PressureField {
        PressureField {
            grid,
            values: grid.centers().into_iter().map(f).collect(),
            time: t,
        }
    }

    #[test]
    fn pressure_transform_examples() {
        let g = Grid::periodic(1.0, 64).unwrap();
        let zero = DensityField::zeros(g, 0.0);
        assert!(to_pressure(&zero, 2.0).unwrap().values.iter().all(|v| *v == 0.0));
        let rho = DensityField::from_fn(g, 0.0, |x| (2.0 * PI * x).sin() + 1.0).unwrap();
        let u = to_pressure(&rho, 2.0).unwrap();
        for (a, b) in u.values.iter().zip(&rho.values) {
            assert_eq!(*a, 2.0 * b);
        }
        let mut one = DensityField::zeros(g, 0.0);
        one.values[3] = 2.0;
        assert_eq!(to_pressure(&one, 3.0).unwrap().values[3], 6.0);
        assert!(to_pressure(&one, 1.0).is_err());
    }

    #[test]
    fn round_trip_on_positive_cells() {
        let g = Grid::line(-1.0, 1.0, 50).unwrap();
        for m in [1.5, 2.0, 3.0, 4.5] {
            let rho = DensityField::from_fn(g, 0.0, |x| 0.1 + x * x).unwrap();
            let back = to_density(&to_pressure(&rho, m).unwrap(), m).unwrap();
            for (a, b) in rho.values.iter().zip(&back.values) {
                assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let g = Grid::line(-1.0, 2.0, 30).unwrap();
        let u = field(g, 0.0, |x| 1.0 + 2.0 * x + 3.0 * x * x);
        let (_, uxx) = discrete_derivatives(&u);
        for v in &uxx[1..29] {
            assert!((v - 6.0).abs() < 1e-9);
        }
        let c = field(g, 0.0, |_| 4.0);
        let (ux, uxx) = discrete_derivatives(&c);
        assert!(ux.iter().chain(&uxx).all(|v| v.abs() < 1e-12));

        let mut errs = Vec::new();
        for n in [64, 128] {
            let g = Grid::periodic(1.0, n).unwrap();
            let u = field(g, 0.0, |x| 2.0 * ((2.0 * PI * x).sin() + 1.0));
            let (_, uxx) = discrete_derivatives(&u);
            let e = g
                .centers()
                .iter()
                .zip(&uxx)
                .map(|(x, v)| (v + 8.0 * PI * PI * (2.0 * PI * x).sin()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.05);
    }

    #[test]
    fn traveling_wave_residual_vanishes_in_positive_set() {
        let c = 1.5;
        let t = 0.8;
        let g = Grid::line(-3.0, 3.0, 120).unwrap();
        let u = field(g, t, |x| traveling_wave_pressure(x, t, c));
        let u_t: Vec<f64> = u.values.iter().map(|v| if *v > 0.0 { c * c } else { 0.0 }).collect();
        let drift = DriftField::zeros(g, t);
        let r = pme_residual(&u, &u_t, &drift, 2.0).unwrap();
        let mask = safe_interior_mask(&u, 1e-12, 1);
        for (i, v) in r.iter().enumerate() {
            if mask[i] && g.center(i) > g.xmin() + 2.0 * g.dx() {
                assert!(v.abs() < 1e-9, "cell {i}: {v}");
            }
        }
        // zero field, arbitrary drift
        let z = field(g, t, |_| 0.0);
        let mut d = DriftField::zeros(g, t);
        d.b_values.iter_mut().for_each(|b| *b = 3.0);
        assert!(pme_residual(&z, &vec![0.0; 120], &d, 2.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn residual_rejects_misaligned_fields() {
        let g = Grid::line(0.0, 1.0, 16).unwrap();
        let u = field(g, 1.0, |_| 1.0);
        assert!(pme_residual(&u, &[0.0; 16], &DriftField::zeros(g, 2.0), 2.0).is_err());
        assert!(pme_residual(&u, &[0.0; 15], &DriftField::zeros(g, 1.0), 2.0).is_err());
        let g2 = Grid::line(0.0, 1.0, 32).unwrap();
        assert!(pme_residual(&u, &[0.0; 16], &DriftField::zeros(g2, 1.0), 2.0).is_err());
    }

    #[test]
    fn barenblatt_residual_decreases_under_refinement() {
        let b = Barenblatt::new(2.0, 1.0).unwrap();
        let t = 1.0;
        let mut errs = Vec::new();
        for n in [200, 400] {
            let g = Grid::line(-4.0, 4.0, n).unwrap();
            let u = field(g, t, |x| b.pressure(x, t).unwrap());
            let u_t: Vec<f64> = g.centers().iter().map(|&x| b.pressure_t(x, t).unwrap()).collect();
            let r = pme_residual(&u, &u_t, &DriftField::zeros(g, t), 2.0).unwrap();
            let mask = safe_interior_mask(&u, 1e-2, 2);
            errs.push(r.iter().zip(&mask).filter(|(_, m)| **m).fold(0.0f64, |a, (v, _)| a.max(v.abs())));
        }
        assert!(errs[1] < errs[0] || errs[1] < 1e-12, "{errs:?}");
    }

    #[test]
    fn semiconvexity_gap_examples() {
        let g = Grid::line(-4.0, 4.0, 400).unwrap();
        for m in [1.5, 2.0, 3.0] {
            let b = Barenblatt::new(m, 1.0).unwrap();
            let t = 1.3;
            let u = field(g, t, |x| b.pressure(x, t).unwrap());
            let mask = safe_interior_mask(&u, 1e-2, 2);
            let gap = aronson_benilan_gap(&u, t, 0.0, &mask).unwrap();
            let expected = (1.0 - 1.0 / (m + 1.0)) / t;
            assert!((gap - expected).abs() < 1e-8, "m = {m}: {gap} vs {expected}");
            // pointwise closed form
            let uxx = b.pressure_xx(t).unwrap();
            assert!(uxx + 1.0 / t >= m / ((m + 1.0) * t) - 1e-15);
        }
        let lin = field(g, 2.0, |x| (1.0 - x).max(0.0) * 0.5);
        let mask = safe_interior_mask(&lin, 1e-2, 2);
        assert!((aronson_benilan_gap(&lin, 2.0, 0.3, &mask).unwrap() - 0.8).abs() < 1e-9);
        assert!(aronson_benilan_gap(&lin, 0.0, 0.0, &mask).is_err());
    }

    #[test]
    fn fitted_constant_is_smallest_admissible() {
        let g = Grid::periodic(1.0, 128).unwrap();
        let u = field(g, 1.0, |x| 2.0 * ((2.0 * PI * x).sin() + 1.0));
        let mask = vec![true; 128];
        let c = fit_aronson_benilan([(&u, 1.0, mask.as_slice())]).unwrap();
        assert!(aronson_benilan_gap(&u, 1.0, c, &mask).unwrap().abs() < 1e-12);
        assert!((c - (8.0 * PI * PI - 1.0)).abs() < 0.05);
    }

    #[test]
    fn lipschitz_monitor_examples() {
        let g = Grid::line(-3.0, 3.0, 300).unwrap();
        let z = field(g, 1.0, |_| 0.0);
        assert_eq!(lipschitz_monitor(&z, &vec![0.0; 300], 1.0).unwrap(), 0.0);
        let c = 1.2;
        for t in [0.1, 1.0, 5.0] {
            let u = field(g, t, |x| traveling_wave_pressure(x, t, c));
            let u_t: Vec<f64> = u.values.iter().map(|v| if *v > 0.0 { c * c } else { 0.0 }).collect();
            let v = lipschitz_monitor(&u, &u_t, t).unwrap();
            // one-sided edge stencils and the kink add at most a cell's worth
            assert!(v <= 2.0 * c * c * t / (t + 1.0) + 1e-9, "t = {t}: {v}");
            assert!(v <= 2.0 * c * c);
        }
    }

    #[test]
    fn mask_excludes_edges() {
        let g = Grid::line(-2.0, 2.0, 40).unwrap();
        let u = field(g, 1.0, |x| (1.0 - x * x).max(0.0));
        let mask = safe_interior_mask(&u, 0.0, 2);
        let first = mask.iter().position(|m| *m).unwrap();
        assert!(u.values[first - 2] > 0.0);
        assert_eq!(u.values[first - 3], 0.0);
    }
}
