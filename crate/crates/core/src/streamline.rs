//! Integral curves `X' = B(X, t)` of the recorded drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeboundary::FreeBoundaryTrace;
use crate::grid::interpolate;
use crate::solver::Trajectory;

/// Drift available at any `(x, t)` inside a recorded horizon.
pub trait DriftHistory {
    fn b(&self, x: f64, t: f64) -> Result<f64>;
    /// Bound on `|B_x|`, used to decide sub-stepping.
    fn max_abs_bx(&self) -> f64;
    fn max_abs_b(&self) -> f64;
    fn horizon(&self) -> (f64, f64);
    /// Natural integration nodes (snapshot times).
    fn sample_times(&self) -> Vec<f64>;
}

/// Drift of a trajectory, linear in `x` between cell centers and linear in
/// `t` between snapshots.
pub struct TrajectoryHistory<'a> {
    traj: &'a Trajectory,
    times: Vec<f64>,
    max_b: f64,
    max_bx: f64,
}

impl<'a> TrajectoryHistory<'a> {
    pub fn new(traj: &'a Trajectory) -> Self {
        let times = traj.times();
        let max_b = traj.snapshots.iter().fold(0.0f64, |a, s| a.max(s.drift.max_abs_b()));
        let max_bx = traj.snapshots.iter().fold(0.0f64, |a, s| a.max(s.drift.max_abs_bx()));
        TrajectoryHistory {
            traj,
            times,
            max_b,
            max_bx,
        }
    }
}

impl DriftHistory for TrajectoryHistory<'_> {
    fn b(&self, x: f64, t: f64) -> Result<f64> {
        let (t0, t1) = self.horizon();
        let tol = 1e-12 * (1.0 + t1.abs());
        if t < t0 - tol || t > t1 + tol {
            return Err(Error::InvalidParameter(format!(
                "t = {t} lies outside the recorded horizon [{t0}, {t1}]"
            )));
        }
        let snaps = &self.traj.snapshots;
        if snaps.len() == 1 {
            return snaps[0].drift.b_at(x);
        }
        let j = self.times.partition_point(|&s| s <= t).clamp(1, snaps.len() - 1);
        let (a, b) = (&snaps[j - 1], &snaps[j]);
        let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        let grid = a.drift.grid;
        let ba = interpolate(&grid, &a.drift.b_values, x)?;
        let bb = interpolate(&grid, &b.drift.b_values, x)?;
        Ok((1.0 - w) * ba + w * bb)
    }

    fn max_abs_bx(&self) -> f64 {
        self.max_bx
    }

    fn max_abs_b(&self) -> f64 {
        self.max_b
    }

    fn horizon(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// Closed-form drift with user-declared bounds, sampled at uniform nodes.
pub struct AnalyticHistory<F> {
    pub f: F,
    pub t_range: (f64, f64),
    pub spacing: f64,
    pub max_b: f64,
    pub max_bx: f64,
    /// Spatial domain, `None` for the whole line.
    pub domain: Option<(f64, f64)>,
}

impl<F: Fn(f64, f64) -> f64> DriftHistory for AnalyticHistory<F> {
    fn b(&self, x: f64, t: f64) -> Result<f64> {
        if let Some((lo, hi)) = self.domain {
            if x < lo || x > hi {
                return Err(Error::OutsideDomain { x, xmin: lo, xmax: hi });
            }
        }
        Ok((self.f)(x, t))
    }

    fn max_abs_bx(&self) -> f64 {
        self.max_bx
    }

    fn max_abs_b(&self) -> f64 {
        self.max_b
    }

    fn horizon(&self) -> (f64, f64) {
        self.t_range
    }

    fn sample_times(&self) -> Vec<f64> {
        let (a, b) = self.t_range;
        let n = ((b - a) / self.spacing).round().max(1.0) as usize;
        (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamlinePath {
    pub origin: (f64, f64),
    /// `(t, X(t))`, ordered along the direction of integration.
    pub samples: Vec<(f64, f64)>,
    /// Per-step error estimates.
    pub step_errors: Vec<f64>,
    /// Accumulated error estimate.
    pub tolerance: f64,
}

impl StreamlinePath {
    pub fn end(&self) -> (f64, f64) {
        *self.samples.last().unwrap_or(&self.origin)
    }

    /// `X` at a sample time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .map(|p| p.1)
    }
}

fn rk4(history: &dyn DriftHistory, x: f64, t: f64, h: f64) -> Result<f64> {
    let k1 = history.b(x, t)?;
    let k2 = history.b(x + 0.5 * h * k1, t + 0.5 * h)?;
    let k3 = history.b(x + 0.5 * h * k2, t + 0.5 * h)?;
    let k4 = history.b(x + h * k3, t + h)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrates from `(x0, t0)` to `t1` (either direction) with one RK4 step
/// per snapshot interval, sub-stepped by 4 while `max|B_x| Δt > 0.1`.
/// Each step is also taken as two half steps; the returned value is the
/// finer one and the difference over 15 is its error estimate.
pub fn integrate_streamline(
    x0: f64,
    t0: f64,
    t1: f64,
    history: &dyn DriftHistory,
) -> Result<StreamlinePath> {
    history.b(x0, t0)?;
    history.b(x0, t1)?;
    let forward = t1 >= t0;
    let (lo, hi) = if forward { (t0, t1) } else { (t1, t0) };
    let mut nodes: Vec<f64> = history
        .sample_times()
        .into_iter()
        .filter(|&s| s > lo && s < hi)
        .collect();
    nodes.insert(0, lo);
    nodes.push(hi);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    if !forward {
        nodes.reverse();
    }
    let mut x = x0;
    let mut samples = vec![(t0, x0)];
    let mut errors = Vec::new();
    let bx = history.max_abs_bx();
    for w in nodes.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let span = tb - ta;
        let mut sub = 1usize;
        while bx * (span / sub as f64).abs() > 0.1 && sub < 1 << 12 {
            sub *= 4;
        }
        let h = span / sub as f64;
        let mut err = 0.0;
        for s in 0..sub {
            let t = ta + s as f64 * h;
            let coarse = rk4(history, x, t, h)?;
            let mid = rk4(history, x, t, 0.5 * h)?;
            let fine = rk4(history, mid, t + 0.5 * h, 0.5 * h)?;
            // rounding allowance keeps the estimate honest when B is tiny
            err += (fine - coarse).abs() / 15.0 + 8.0 * f64::EPSILON * (1.0 + fine.abs());
            x = fine;
        }
        errors.push(err);
        samples.push((tb, x));
    }
    let tolerance = errors.iter().sum();
    Ok(StreamlinePath {
        origin: (x0, t0),
        samples,
        step_errors: errors,
        tolerance,
    })
}

/// Paths backward to the start and forward to the end of the history,
/// merged in increasing time.
pub fn two_sided_streamline(x0: f64, t0: f64, history: &dyn DriftHistory) -> Result<StreamlinePath> {
    let (a, b) = history.horizon();
    let back = integrate_streamline(x0, t0, a, history)?;
    let fwd = integrate_streamline(x0, t0, b, history)?;
    let mut samples: Vec<(f64, f64)> = back.samples.iter().rev().copied().collect();
    samples.pop();
    samples.extend(fwd.samples.iter().copied());
    let mut step_errors = back.step_errors.clone();
    step_errors.extend(&fwd.step_errors);
    Ok(StreamlinePath {
        origin: (x0, t0),
        samples,
        step_errors,
        tolerance: back.tolerance.max(fwd.tolerance),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    /// `|r - X| <= tolerance` throughout.
    NearZero,
    /// Positive and increasing after the origin, negative before it.
    Expanding,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSeries {
    pub times: Vec<f64>,
    pub difference: Vec<f64>,
    pub tolerance: f64,
    pub pattern: SignPattern,
}

/// `r(t) - X(t)` at the path's sample times.
pub fn relative_expansion(trace: &FreeBoundaryTrace, path: &StreamlinePath) -> Result<ExpansionSeries> {
    let (x0, t0) = path.origin;
    let origin = trace
        .samples
        .iter()
        .find(|s| (s.t - t0).abs() <= 1e-9 * (1.0 + t0.abs()))
        .ok_or_else(|| Error::MisalignedTimes(format!("no trace sample at the origin t = {t0}")))?;
    let r0 = origin
        .r
        .ok_or_else(|| Error::NoBoundary(format!("no right endpoint at t = {t0}")))?;
    let tol = 2.0 * trace.dx + path.tolerance;
    if (r0 - x0).abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "path origin {x0} is not the boundary point {r0}"
        )));
    }
    let mut times = Vec::with_capacity(path.samples.len());
    let mut diff = Vec::with_capacity(path.samples.len());
    for &(t, x) in &path.samples {
        let s = trace
            .samples
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or_else(|| Error::MisalignedTimes(format!("no trace sample at t = {t}")))?;
        let r = s
            .r
            .ok_or_else(|| Error::NoBoundary(format!("no right endpoint at t = {t}")))?;
        times.push(t);
        diff.push(r - x);
    }
    let pattern = if diff.iter().all(|d| d.abs() <= tol) {
        SignPattern::NearZero
    } else {
        let after: Vec<f64> = times
            .iter()
            .zip(&diff)
            .filter(|(t, _)| **t > t0)
            .map(|(_, d)| *d)
            .collect();
        let before_ok = times
            .iter()
            .zip(&diff)
            .filter(|(t, _)| **t < t0)
            .all(|(_, d)| *d < tol);
        let after_ok = after.iter().all(|d| *d > -tol)
            && after.windows(2).all(|w| w[1] >= w[0] - tol)
            && after.last().is_some_and(|d| *d > tol);
        if before_ok && after_ok {
            SignPattern::Expanding
        } else {
            SignPattern::Other
        }
    };
    Ok(ExpansionSeries {
        times,
        difference: diff,
        tolerance: tol,
        pattern,
    })
}
