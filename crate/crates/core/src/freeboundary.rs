//! Support endpoints, one-sided boundary slopes and the boundary checks
//! built on them.

use serde::{Deserialize, Serialize};

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::fields::{DensityField, ModelParams};
use crate::pressure::{
    default_mask, discrete_derivatives, pow_m1, to_pressure, PressureField,
};
use crate::solver::{density_rate, Trajectory};
use crate::streamline::{integrate_streamline, DriftHistory, StreamlinePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeFit {
    Linear,
    /// Quadratic least squares, differentiated at the boundary point.
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeOptions {
    pub window: usize,
    /// Cells skipped between the edge cell and the window.
    pub offset: usize,
    pub fit: SlopeFit,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions {
            window: 5,
            offset: 2,
            fit: SlopeFit::Quadratic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Outermost support cells and sub-cell endpoints. On the torus positions
/// are unwrapped so that `l <= r`, with `l` in the fundamental cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub l: f64,
    pub r: f64,
    pub first: usize,
    pub last: usize,
    pub first_center: f64,
    pub last_center: f64,
    pub gaps: Vec<Gap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SupportExtent {
    Empty,
    /// Every cell of the torus is above the cutoff.
    Full,
    Bounded(Support),
}

impl SupportExtent {
    pub fn support(&self) -> Option<&Support> {
        match self {
            SupportExtent::Bounded(s) => Some(s),
            _ => None,
        }
    }
}

/// Support of `rho` at the relative cutoff `params.fb_threshold`, with
/// endpoints refined by extrapolating the pressure of the two outermost
/// cells to zero.
pub fn support_endpoints(rho: &DensityField, params: &ModelParams) -> SupportExtent {
    let grid = rho.grid;
    let n = grid.n_cells();
    let dx = grid.dx();
    let peak = rho.peak();
    if !(peak > 0.0) {
        return SupportExtent::Empty;
    }
    let level = params.fb_threshold * peak;
    let above: Vec<bool> = rho.values.iter().map(|&v| v > level).collect();

    // support as a run of `len` cells starting at `first`, walking right
    let (first, len) = if grid.is_periodic() {
        let Some(z) = above.iter().position(|a| !a) else {
            return SupportExtent::Full;
        };
        // longest run of below-cutoff cells, in coordinates rotated to start at z
        let mut best = (0usize, 0usize);
        let mut k = 0;
        while k < n {
            if !above[(z + k) % n] {
                let start = k;
                while k < n && !above[(z + k) % n] {
                    k += 1;
                }
                if k - start > best.1 {
                    best = (start, k - start);
                }
            } else {
                k += 1;
            }
        }
        // the run ending at rotated index n-1 continues into the one at 0
        let mut tail = 0;
        while tail < n && !above[(z + n - 1 - tail) % n] {
            tail += 1;
        }
        let mut head = 0;
        while head < n && !above[(z + head) % n] {
            head += 1;
        }
        if tail > 0 && tail < n && head + tail > best.1 {
            best = (n - tail, head + tail);
        }
        let (start, glen) = best;
        ((z + start + glen) % n, n - glen)
    } else {
        let Some(first) = above.iter().position(|a| *a) else {
            return SupportExtent::Empty;
        };
        let last = above.iter().rposition(|a| *a).unwrap_or(first);
        (first, last - first + 1)
    };

    let idx = |k: usize| (first + k) % n;
    let last = idx(len - 1);
    let first_center = grid.center(first);
    let last_center = first_center + (len - 1) as f64 * dx;
    let u = |i: usize| pow_m1(rho.values[i], params.m) * params.pressure_factor();

    let mut gaps = Vec::new();
    let mut k = 0;
    while k < len {
        if !above[idx(k)] {
            let start = k;
            while k < len && !above[idx(k)] {
                k += 1;
            }
            gaps.push(Gap {
                start: first_center + (start as f64 - 0.5) * dx,
                end: first_center + (k as f64 - 0.5) * dx,
            });
        } else {
            k += 1;
        }
    }

    let r = if len >= 2 && above[idx(len - 2)] {
        let s = (u(last) - u(idx(len - 2))) / dx;
        if s < 0.0 {
            (last_center - u(last) / s).clamp(last_center, last_center + 2.0 * dx)
        } else {
            last_center + 0.5 * dx
        }
    } else {
        last_center + 0.5 * dx
    };
    let l = if len >= 2 && above[idx(1)] {
        let s = (u(idx(1)) - u(first)) / dx;
        if s > 0.0 {
            (first_center - u(first) / s).clamp(first_center - 2.0 * dx, first_center)
        } else {
            first_center - 0.5 * dx
        }
    } else {
        first_center - 0.5 * dx
    };
    let (l, r) = if grid.is_periodic() {
        (l, r)
    } else {
        (l.max(grid.xmin()), r.min(grid.xmax()))
    };
    SupportExtent::Bounded(Support {
        l,
        r,
        first,
        last,
        first_center,
        last_center,
        gaps,
    })
}

/// Least-squares polynomial of degree 1 or 2 in `s`; returns `[c0, c1, c2]`.
fn polyfit(s: &[f64], y: &[f64], degree: usize, scale: f64) -> [f64; 3] {
    let d = degree + 1;
    let mut a = [[0.0f64; 4]; 3];
    for (&si, &yi) in s.iter().zip(y) {
        let z = si / scale;
        let basis = [1.0, z, z * z];
        for r in 0..d {
            for c in 0..d {
                a[r][c] += basis[r] * basis[c];
            }
            a[r][3] += basis[r] * yi;
        }
    }
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        for row in 0..d {
            if row != col && a[col][col] != 0.0 {
                let f = a[row][col] / a[col][col];
                for c in col..4 {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = a[i][3] / a[i][i];
    }
    [out[0], out[1] / scale, out[2] / (scale * scale)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Window cell indices and their positions relative to the edge point.
fn window_cells(
    u: &PressureField,
    edge: f64,
    side: Side,
    opts: &SlopeOptions,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let grid = u.grid;
    let n = grid.n_cells() as isize;
    let dx = grid.dx();
    let s = (edge - grid.xmin()) / dx - 0.5;
    let base = match side {
        Side::Right => (s - 1e-9).floor() as isize,
        Side::Left => (s + 1e-9).ceil() as isize,
    };
    let base_pos = grid.xmin() + (base as f64 + 0.5) * dx;
    let dir: isize = if side == Side::Right { -1 } else { 1 };
    let needed = opts.offset + opts.window;
    let mut available = 0;
    let mut cells = Vec::with_capacity(opts.window);
    let mut pos = Vec::with_capacity(opts.window);
    for k in 0..needed as isize {
        let j = base + dir * k;
        let idx = if grid.is_periodic() {
            Some(grid.wrap_index(j))
        } else if j >= 0 && j < n {
            Some(j as usize)
        } else {
            None
        };
        match idx {
            Some(i) if u.values[i] > 0.0 => {
                available += 1;
                if k as usize >= opts.offset {
                    cells.push(i);
                    pos.push(base_pos + (dir * k) as f64 * dx - edge);
                }
            }
            _ => break,
        }
    }
    if available < needed {
        return Err(Error::SupportTooNarrow { available, needed });
    }
    Ok((cells, pos))
}

fn slope_at(u: &PressureField, edge: f64, side: Side, opts: &SlopeOptions) -> Result<f64> {
    if opts.window < 3 {
        return Err(Error::InvalidParameter(format!(
            "fit window needs at least 3 cells, got {}",
            opts.window
        )));
    }
    let (cells, pos) = window_cells(u, edge, side, opts)?;
    let vals: Vec<f64> = cells.iter().map(|&i| u.values[i]).collect();
    let degree = match opts.fit {
        SlopeFit::Linear => 1,
        SlopeFit::Quadratic => 2,
    };
    let c = polyfit(&pos, &vals, degree, u.grid.dx());
    Ok(match side {
        Side::Right => -c[1],
        Side::Left => c[1],
    })
}

/// `k = -D_x u` at the right endpoint `r`, from the default fit
/// (quadratic, skipping two edge cells) over `window` cells.
pub fn boundary_slope(u: &PressureField, r: f64, window: usize) -> Result<f64> {
    boundary_slope_with(
        u,
        r,
        &SlopeOptions {
            window,
            ..Default::default()
        },
    )
}

pub fn boundary_slope_with(u: &PressureField, r: f64, opts: &SlopeOptions) -> Result<f64> {
    slope_at(u, r, Side::Right, opts)
}

/// `D_x u` at the left endpoint, positive at a non-degenerate edge.
pub fn left_boundary_slope_with(u: &PressureField, l: f64, opts: &SlopeOptions) -> Result<f64> {
    slope_at(u, l, Side::Left, opts)
}

/// Extrapolates per-cell `values` from the fit window to the right edge.
fn extrapolate_right(
    u: &PressureField,
    values: &[f64],
    r: f64,
    opts: &SlopeOptions,
) -> Result<f64> {
    let (cells, pos) = window_cells(u, r, Side::Right, opts)?;
    let vals: Vec<f64> = cells.iter().map(|&i| values[i]).collect();
    let degree = match opts.fit {
        SlopeFit::Linear => 1,
        SlopeFit::Quadratic => 2,
    };
    Ok(polyfit(&pos, &vals, degree, u.grid.dx())[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub t: f64,
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub k_left: Option<f64>,
    pub k_right: Option<f64>,
    pub b_at_l: Option<f64>,
    pub b_at_r: Option<f64>,
    pub gaps: Vec<Gap>,
    pub full: bool,
    pub max_abs_ux: f64,
    /// Largest `|u_xx|` on the safe interior.
    pub max_abs_uxx: f64,
    pub max_abs_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryTrace {
    pub dx: f64,
    pub options: SlopeOptions,
    pub samples: Vec<BoundarySample>,
}

impl FreeBoundaryTrace {
    pub fn from_trajectory(traj: &Trajectory, opts: SlopeOptions) -> Result<Self> {
        let pairs: Vec<(&DensityField, &DriftField)> =
            traj.snapshots.iter().map(|s| (&s.rho, &s.drift)).collect();
        Self::from_fields(&pairs, &traj.params, opts)
    }

    pub fn from_fields(
        fields: &[(&DensityField, &DriftField)],
        params: &ModelParams,
        opts: SlopeOptions,
    ) -> Result<Self> {
        let Some((rho0, _)) = fields.first() else {
            return Err(Error::InvalidParameter("trace needs at least one snapshot".into()));
        };
        let dx = rho0.grid.dx();
        let mut samples = Vec::with_capacity(fields.len());
        for (rho, drift) in fields {
            rho.grid.ensure_same(&drift.grid)?;
            let u = to_pressure(rho, params.m)?;
            let (ux, uxx) = discrete_derivatives(&u);
            let mask = default_mask(&u, params);
            let max_abs_uxx = uxx
                .iter()
                .zip(&mask)
                .filter(|(_, m)| **m)
                .fold(0.0f64, |a, (v, _)| a.max(v.abs()));
            let mut sample = BoundarySample {
                t: rho.time,
                l: None,
                r: None,
                k_left: None,
                k_right: None,
                b_at_l: None,
                b_at_r: None,
                gaps: Vec::new(),
                full: false,
                max_abs_ux: ux.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                max_abs_uxx,
                max_abs_b: drift.max_abs_b(),
            };
            match support_endpoints(rho, params) {
                SupportExtent::Empty => {}
                SupportExtent::Full => sample.full = true,
                SupportExtent::Bounded(s) => {
                    sample.l = Some(s.l);
                    sample.r = Some(s.r);
                    sample.k_left = left_boundary_slope_with(&u, s.l, &opts).ok();
                    sample.k_right = boundary_slope_with(&u, s.r, &opts).ok();
                    sample.b_at_l = drift.b_at(s.l).ok();
                    sample.b_at_r = drift.b_at(s.r).ok();
                    sample.gaps = s.gaps;
                }
            }
            samples.push(sample);
        }
        Ok(FreeBoundaryTrace {
            dx,
            options: opts,
            samples,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn r_series(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.r).collect()
    }

    /// Slope-resolution floor `2 dx max|u_xx|` over the whole trace.
    pub fn slope_floor(&self) -> f64 {
        2.0 * self.dx * self.samples.iter().fold(0.0f64, |a, s| a.max(s.max_abs_uxx))
    }
}

/// `(r(t_{n+1}) - r(t_{n-1}))/(t_{n+1} - t_{n-1}) - k(t_n) - B(r(t_n), t_n)`;
/// `None` at the ends and wherever an ingredient is missing.
pub fn darcy_residual(trace: &FreeBoundaryTrace) -> Result<Vec<Option<f64>>> {
    let s = &trace.samples;
    if s.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "Darcy residual needs at least 3 snapshots, got {}",
            s.len()
        )));
    }
    let mut out = vec![None; s.len()];
    for n in 1..s.len() - 1 {
        if let (Some(a), Some(b), Some(k), Some(bb)) = (s[n - 1].r, s[n + 1].r, s[n].k_right, s[n].b_at_r) {
            out[n] = Some((b - a) / (s[n + 1].t - s[n - 1].t) - k - bb);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NondegeneracyVerdict {
    NonDegeneratePersistent,
    DegenerateAtStart,
    /// Non-degenerate at the start but the slope later fell to the floor.
    DegenerateLater,
    NoBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub times: Vec<f64>,
    pub k: Vec<Option<f64>>,
    pub t0: f64,
    pub k0: Option<f64>,
    /// Slope-resolution floor.
    pub tol: f64,
    pub min_k: Option<f64>,
    /// Smallest `σ >= 0` with `k(t) >= e^{-σ(t-t0)} k(t0) - tol` on the trace.
    pub sigma_hat: Option<f64>,
    pub verdict: NondegeneracyVerdict,
}

pub fn nondegeneracy_trace(trace: &FreeBoundaryTrace) -> NondegeneracyReport {
    let times = trace.times();
    let k: Vec<Option<f64>> = trace.samples.iter().map(|s| s.k_right).collect();
    let tol = trace.slope_floor();
    let t0 = times.first().copied().unwrap_or(0.0);
    let k0 = k.first().copied().flatten();
    let min_k = k.iter().flatten().copied().reduce(f64::min);
    let mut report = NondegeneracyReport {
        times: times.clone(),
        k: k.clone(),
        t0,
        k0,
        tol,
        min_k,
        sigma_hat: None,
        verdict: NondegeneracyVerdict::NoBoundary,
    };
    let Some(k0) = k0 else {
        return report;
    };
    if k0 <= tol {
        report.verdict = NondegeneracyVerdict::DegenerateAtStart;
        return report;
    }
    let mut sigma = 0.0f64;
    let mut finite = true;
    for (t, kt) in times.iter().zip(&k).skip(1) {
        let Some(kt) = kt else {
            finite = false;
            break;
        };
        let lifted = kt + tol;
        if lifted >= k0 {
            continue;
        }
        if lifted <= 0.0 || *t <= t0 {
            finite = false;
            break;
        }
        sigma = sigma.max(-(lifted / k0).ln() / (t - t0));
    }
    report.sigma_hat = finite.then_some(sigma);
    let all_above = k.iter().all(|v| v.is_some_and(|v| v > tol));
    report.verdict = if finite && all_above {
        NondegeneracyVerdict::NonDegeneratePersistent
    } else {
        NondegeneracyVerdict::DegenerateLater
    };
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub times: Vec<f64>,
    /// `|u_t - (u_x² - u_x B)|` at `r(t)`.
    pub deviation: Vec<f64>,
    /// `|u u_xx|` extrapolated to `r(t)`.
    pub u_uxx: Vec<f64>,
    pub max_deviation: f64,
    pub max_u_uxx: f64,
    /// Largest `k²`, for scale.
    pub max_k_squared: f64,
}

/// Window used by [`boundary_identity_check`] by default. It sits deeper
/// than the slope window because `u_t` and `u u_xx` carry the front kink of
/// the discrete solution for several cells.
pub const IDENTITY_WINDOW: SlopeOptions = SlopeOptions {
    window: 8,
    offset: 8,
    fit: SlopeFit::Quadratic,
};

/// Boundary identities at non-degenerate points. `u_t` is the scheme's own
/// rate of change at each snapshot, so no time differencing across a moving
/// front is involved. `u_t`, `u_x` and `u u_xx` are all extrapolated to
/// `r(t)` from the window `opts`.
pub fn boundary_identity_check(
    traj: &Trajectory,
    trace: &FreeBoundaryTrace,
    opts: &SlopeOptions,
) -> Result<IdentityReport> {
    if trace.samples.iter().all(|s| s.r.is_none()) {
        return Err(Error::NoBoundary("the density vanishes at every snapshot".into()));
    }
    let nd = nondegeneracy_trace(trace);
    if nd.verdict != NondegeneracyVerdict::NonDegeneratePersistent {
        return Err(Error::IdentityNotApplicable(format!(
            "boundary is not non-degenerate throughout ({:?})",
            nd.verdict
        )));
    }
    if trace.samples.len() != traj.snapshots.len() {
        return Err(Error::MisalignedTimes(
            "trace and trajectory have different lengths".into(),
        ));
    }
    let m = traj.params.m;
    let mut rep = IdentityReport {
        times: Vec::new(),
        deviation: Vec::new(),
        u_uxx: Vec::new(),
        max_deviation: 0.0,
        max_u_uxx: 0.0,
        max_k_squared: 0.0,
    };
    for (s, snap) in trace.samples.iter().zip(&traj.snapshots) {
        let (Some(r), Some(b)) = (s.r, s.b_at_r) else {
            continue;
        };
        let u = to_pressure(&snap.rho, m)?;
        let k = boundary_slope_with(&u, r, opts)?;
        let rate = density_rate(&snap.rho, &snap.drift, m)?;
        let u_t: Vec<f64> = snap
            .rho
            .values
            .iter()
            .zip(&rate)
            .map(|(&rho, &rt)| if rho > 0.0 { m * rho.powf(m - 2.0) * rt } else { 0.0 })
            .collect();
        let ut = extrapolate_right(&u, &u_t, r, opts)?;
        let (_, uxx) = discrete_derivatives(&u);
        let prod: Vec<f64> = u.values.iter().zip(&uxx).map(|(a, b)| a * b).collect();
        let uu = extrapolate_right(&u, &prod, r, opts)?;
        let ux = -k;
        let dev = (ut - (ux * ux - ux * b)).abs();
        rep.times.push(s.t);
        rep.deviation.push(dev);
        rep.u_uxx.push(uu.abs());
        rep.max_deviation = rep.max_deviation.max(dev);
        rep.max_u_uxx = rep.max_u_uxx.max(uu.abs());
        rep.max_k_squared = rep.max_k_squared.max(k * k);
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    WaitingTime,
    ExpandingRelative,
    Inconclusive,
}

/// Expected class from the pressure growth exponent of the initial data.
pub fn expected_class(growth_exponent: Option<f64>) -> Option<BoundaryClass> {
    growth_exponent.map(|g| {
        if g < 2.0 {
            BoundaryClass::ExpandingRelative
        } else {
            BoundaryClass::WaitingTime
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: BoundaryClass,
    pub t0: f64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub final_deviation: f64,
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs())
}

/// Compares `r(t)` with the streamline through `(r(t0), t0)` for `t >= t0`.
pub fn classify_boundary(trace: &FreeBoundaryTrace, path: &StreamlinePath) -> Result<Classification> {
    classify_against_band(trace, std::slice::from_ref(path))
}

/// Streamlines from `r(t0) - 2dx`, `r(t0)` and `r(t0) + 2dx`, the range the
/// sub-cell endpoint can occupy. Near a repelling point of `B` a single
/// streamline leaves a stationary boundary within a few e-folds; the band
/// still brackets it.
pub fn boundary_streamline_band(
    trace: &FreeBoundaryTrace,
    history: &dyn DriftHistory,
) -> Result<Vec<StreamlinePath>> {
    let first = trace
        .samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    let last = trace.samples.last().map_or(first.t, |s| s.t);
    let r0 = first
        .r
        .ok_or_else(|| Error::NoBoundary(format!("no right endpoint at t = {}", first.t)))?;
    [-2.0, 0.0, 2.0]
        .iter()
        .map(|c| integrate_streamline(r0 + c * trace.dx, first.t, last, history))
        .collect()
}

/// Classification against the hull of several streamlines sharing an
/// origin time: the deviation is the signed distance of `r(t)` from
/// `[min X(t), max X(t)]`.
pub fn classify_against_band(trace: &FreeBoundaryTrace, paths: &[StreamlinePath]) -> Result<Classification> {
    let Some(first) = paths.first() else {
        return Err(Error::InvalidParameter("no streamlines to classify against".into()));
    };
    let t0 = first.origin.1;
    if paths.iter().any(|p| !same_time(p.origin.1, t0) || p.samples.len() != first.samples.len()) {
        return Err(Error::MisalignedTimes("streamlines do not share a time grid".into()));
    }
    let ode_tol = paths.iter().fold(0.0f64, |a, p| a.max(p.tolerance));
    let tol = 2.0 * trace.dx + ode_tol;
    let mut devs = Vec::new();
    for (j, &(t, _)) in first.samples.iter().enumerate().filter(|(_, (t, _))| *t >= t0) {
        let s = trace
            .samples
            .iter()
            .find(|s| same_time(s.t, t))
            .ok_or_else(|| Error::MisalignedTimes(format!("no trace sample at t = {t}")))?;
        let r = s
            .r
            .ok_or_else(|| Error::NoBoundary(format!("no right endpoint at t = {t}")))?;
        let (lo, hi) = paths
            .iter()
            .map(|p| p.samples[j].1)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        devs.push(if r > hi {
            r - hi
        } else if r < lo {
            r - lo
        } else {
            0.0
        });
    }
    if devs.is_empty() {
        return Err(Error::MisalignedTimes("streamline has no samples after its origin".into()));
    }
    let max_dev = devs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let last = *devs.last().unwrap_or(&0.0);
    let class = if max_dev <= tol {
        BoundaryClass::WaitingTime
    } else if devs.iter().all(|d| *d >= -tol)
        && devs.windows(2).all(|w| w[1] >= w[0] - tol)
        && last > tol
    {
        BoundaryClass::ExpandingRelative
    } else {
        BoundaryClass::Inconclusive
    };
    Ok(Classification {
        class,
        t0,
        tolerance: tol,
        max_deviation: max_dev,
        final_deviation: last,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub violations: usize,
    /// Largest `|Δr| - bound` over consecutive snapshots; negative when all hold.
    pub worst_margin: f64,
}

/// `|r(t_{n+1}) - r(t_n)| <= (max|u_x| + max|B|)(t_{n+1} - t_n) + 2 dx`.
pub fn boundary_lipschitz_check(trace: &FreeBoundaryTrace) -> LipschitzCheck {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for w in trace.samples.windows(2) {
        let (Some(a), Some(b)) = (w[0].r, w[1].r) else {
            continue;
        };
        let speed = w[0].max_abs_ux.max(w[1].max_abs_ux) + w[0].max_abs_b.max(w[1].max_abs_b);
        let bound = speed * (w[1].t - w[0].t) + 2.0 * trace.dx;
        let margin = (b - a).abs() - bound;
        worst = worst.max(margin);
        if margin > 0.0 {
            violations += 1;
        }
    }
    LipschitzCheck {
        violations,
        worst_margin: worst,
    }
}
