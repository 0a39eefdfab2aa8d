//! Explicit conservative finite-volume solver for
//! `rho_t + J_x = 0`, `J = rho (-u_x + B)`.
//!
//! The face velocity is `v = -u_x + B` at the face: fourth-order stencils
//! where the four surrounding cells carry mass, two-point forms next to a
//! free boundary or wall. The face density is a minmod-limited linear
//! reconstruction taken from the upwind side of `v`. Pressure balance is
//! exact to the order of the velocity stencil, so smooth stationary states
//! are kept to `O(dx⁴)`. Outer faces of a line box carry no flux.

use serde::{Deserialize, Serialize};

use crate::drift::{ConvolutionMethod, DriftField, DriftModel, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::fields::{DensityField, InitialDataSpec, ModelParams};
use crate::grid::Grid;
use crate::oracles::SupersolutionEnvelope;
use crate::pressure::pow_m1;

const EPS_DEN: f64 = 1e-30;

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub rho: DensityField,
    pub drift: DriftField,
    pub t: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(rho: DensityField, model: &DriftModel) -> Result<Self> {
        let drift = model.assemble(&rho)?;
        Ok(SimState {
            t: rho.time,
            rho,
            drift,
            step_count: 0,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Mass removed by clamping negative cells.
    pub clamped_mass: f64,
    /// Most negative cell before clamping.
    pub min_before_clamp: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: u64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Largest `|mass(t) - mass(0)| / mass(0)` over all steps.
    pub max_relative_mass_drift: f64,
    pub total_clamped_mass: f64,
    /// Largest single-step clamped mass relative to the mass.
    pub max_step_clamped_relative: f64,
    /// Most negative pre-clamp density relative to the peak.
    pub min_relative_density: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub grid: Grid,
    pub params: ModelParams,
    pub v: VectorFieldSpec,
    pub w: VectorFieldSpec,
    pub initial: InitialDataSpec,
    pub t_start: f64,
    pub t_end: f64,
    /// Time between recorded snapshots.
    pub output_interval: f64,
    pub convolution: ConvolutionMethod,
    /// Reject the run at setup if the propagation envelope leaves the box.
    pub check_envelope: bool,
    pub fingerprint: String,
}

impl RunSpec {
    pub fn new(
        grid: Grid,
        params: ModelParams,
        v: VectorFieldSpec,
        w: VectorFieldSpec,
        initial: InitialDataSpec,
        t_start: f64,
        t_end: f64,
        output_interval: f64,
    ) -> Self {
        RunSpec {
            grid,
            params,
            v,
            w,
            initial,
            t_start,
            t_end,
            output_interval,
            convolution: ConvolutionMethod::Auto,
            check_envelope: true,
            fingerprint: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial.validate()?;
        self.v.validate()?;
        self.w.validate()?;
        if !(self.t_start >= 0.0 && self.t_end >= self.t_start && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= t_start <= t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if !(self.output_interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "output interval must be positive, got {}",
                self.output_interval
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub fingerprint: String,
    pub params: ModelParams,
    pub v: VectorFieldSpec,
    pub w: VectorFieldSpec,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        &self.snapshots[0].rho.grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &SimState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SimState {
        &self.snapshots[self.snapshots.len() - 1]
    }
}

pub fn total_mass(rho: &DensityField) -> f64 {
    rho.total_mass()
}

/// Face velocities `v_{i+1/2}`; the last entry is the wrap face on a torus
/// and zero on a line box. Faces whose four-cell stencil lies inside the
/// support use fourth-order differences and interpolation; the others, next
/// to a free boundary or a wall, use the two-point forms.
fn face_velocities(rho: &[f64], b: &[f64], grid: &Grid, m: f64, out: &mut Vec<f64>, u: &mut Vec<f64>) {
    let n = rho.len();
    let f = m / (m - 1.0);
    u.clear();
    u.extend(rho.iter().map(|&r| f * pow_m1(r, m)));
    out.clear();
    let inv_dx = 1.0 / grid.dx();
    let periodic = grid.is_periodic();
    let faces = if periodic { n } else { n - 1 };
    for i in 0..faces {
        let j = (i + 1) % n;
        let wide = if periodic && n >= 4 {
            Some(((i + n - 1) % n, (i + 2) % n))
        } else if !periodic && i >= 1 && i + 2 < n {
            Some((i - 1, i + 2))
        } else {
            None
        };
        let v = match wide {
            Some((a, d)) if rho[a] > 0.0 && rho[i] > 0.0 && rho[j] > 0.0 && rho[d] > 0.0 => {
                let ux = (27.0 * (u[j] - u[i]) - (u[d] - u[a])) * inv_dx / 24.0;
                -ux + (9.0 * (b[i] + b[j]) - (b[a] + b[d])) / 16.0
            }
            _ => -(u[j] - u[i]) * inv_dx + 0.5 * (b[i] + b[j]),
        };
        out.push(v);
    }
    if !periodic {
        out.push(0.0);
    }
}

fn stability_bound(rho: &[f64], b: &[f64], faces: &[f64], grid: &Grid, params: &ModelParams) -> f64 {
    let dx = grid.dx();
    let peak = rho.iter().copied().fold(0.0, f64::max);
    let diff = dx * dx / (2.0 * params.m * pow_m1(peak, params.m) + EPS_DEN);
    let bmax = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let vmax = faces.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let adv = (dx / (bmax + EPS_DEN)).min(0.5 * dx / (vmax + EPS_DEN));
    (params.cfl_safety * diff.min(adv)).min(params.dt_max)
}

/// Largest admissible step. Beyond the diffusive and drift bounds it also
/// requires `dt <= dx / (2 max|v|)` over the face velocities, which keeps
/// the reconstructed upwind update positive.
pub fn cfl_dt(state: &SimState, params: &ModelParams) -> f64 {
    let mut faces = Vec::new();
    let mut u = Vec::new();
    face_velocities(
        &state.rho.values,
        &state.drift.b_values,
        &state.rho.grid,
        params.m,
        &mut faces,
        &mut u,
    );
    stability_bound(&state.rho.values, &state.drift.b_values, &faces, &state.rho.grid, params)
}

/// Reusable buffers for repeated stepping.
#[derive(Default)]
pub struct Workspace {
    faces: Vec<f64>,
    u: Vec<f64>,
    slopes: Vec<f64>,
    next: Vec<f64>,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Upwind flux through face `i + 1/2` from the reconstructed face densities.
fn face_flux(rho: &[f64], faces: &[f64], slopes: &[f64], i: usize) -> f64 {
    let v = faces[i];
    let j = if i + 1 == rho.len() { 0 } else { i + 1 };
    if v >= 0.0 {
        (rho[i] + 0.5 * slopes[i]) * v
    } else {
        (rho[j] - 0.5 * slopes[j]) * v
    }
}

/// Rate of change `-(J_{i+1/2} - J_{i-1/2}) / dx` the scheme assigns to each
/// cell at the given density and drift.
pub fn density_rate(rho: &DensityField, drift: &DriftField, m: f64) -> Result<Vec<f64>> {
    rho.grid.ensure_same(&drift.grid)?;
    let grid = rho.grid;
    let n = grid.n_cells();
    let (mut faces, mut u, mut slopes) = (Vec::new(), Vec::new(), Vec::new());
    face_velocities(&rho.values, &drift.b_values, &grid, m, &mut faces, &mut u);
    limited_slopes(&rho.values, grid.is_periodic(), &mut slopes);
    let flux = |i: usize| {
        if i + 1 == n && !grid.is_periodic() {
            0.0
        } else {
            face_flux(&rho.values, &faces, &slopes, i)
        }
    };
    let inv_dx = 1.0 / grid.dx();
    Ok((0..n)
        .map(|i| {
            let left = if i > 0 { flux(i - 1) } else if grid.is_periodic() { flux(n - 1) } else { 0.0 };
            -(flux(i) - left) * inv_dx
        })
        .collect())
}

/// Minmod-limited cell increments. Face values `rho ± slope/2` stay within
/// `[0, 2 rho]`, so the update is positive for `dt <= dx / (2 max|v|)`.
fn limited_slopes(rho: &[f64], periodic: bool, out: &mut Vec<f64>) {
    let n = rho.len();
    out.clear();
    out.resize(n, 0.0);
    for i in 1..n - 1 {
        out[i] = minmod(rho[i + 1] - rho[i], rho[i] - rho[i - 1]);
    }
    if periodic {
        out[0] = minmod(rho[1] - rho[0], rho[0] - rho[n - 1]);
        out[n - 1] = minmod(rho[0] - rho[n - 1], rho[n - 1] - rho[n - 2]);
    }
}

fn advance(
    state: &SimState,
    dt: f64,
    model: &DriftModel,
    params: &ModelParams,
    ws: &mut Workspace,
    precomputed: bool,
) -> Result<(SimState, StepInfo)> {
    let grid = state.rho.grid;
    let n = grid.n_cells();
    let rho = &state.rho.values;
    if !precomputed {
        face_velocities(rho, &state.drift.b_values, &grid, params.m, &mut ws.faces, &mut ws.u);
    }
    let bound = stability_bound(rho, &state.drift.b_values, &ws.faces, &grid, params);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, bound });
    }
    limited_slopes(rho, grid.is_periodic(), &mut ws.slopes);
    let c = dt / grid.dx();
    ws.next.clear();
    ws.next.resize(n, 0.0);
    let mut left = if grid.is_periodic() { face_flux(rho, &ws.faces, &ws.slopes, n - 1) } else { 0.0 };
    for i in 0..n {
        let right = if i + 1 == n && !grid.is_periodic() {
            0.0
        } else {
            face_flux(rho, &ws.faces, &ws.slopes, i)
        };
        ws.next[i] = rho[i] - c * (right - left);
        left = right;
    }
    let t = state.t + dt;
    let step = state.step_count + 1;
    let mut info = StepInfo::default();
    for (i, v) in ws.next.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                step,
                t,
                detail: format!("cell {i} at x = {} became {v}", grid.center(i)),
            });
        }
        if *v < 0.0 {
            info.min_before_clamp = info.min_before_clamp.min(*v);
            info.clamped_mass += -*v * grid.dx();
            *v = 0.0;
        }
    }
    let rho_next = DensityField {
        grid,
        values: std::mem::take(&mut ws.next),
        time: t,
    };
    let drift = model.assemble(&rho_next)?;
    Ok((
        SimState {
            rho: rho_next,
            drift,
            t,
            step_count: step,
        },
        info,
    ))
}

/// One explicit step; the drift of the result is reassembled from the new
/// density.
pub fn step(
    state: &SimState,
    dt: f64,
    model: &DriftModel,
    params: &ModelParams,
) -> Result<(SimState, StepInfo)> {
    advance(state, dt, model, params, &mut Workspace::default(), false)
}

/// Cells `(first, last)` with `rho > threshold · peak`.
pub(crate) fn support_cells(rho: &[f64], threshold_rel: f64) -> Option<(usize, usize)> {
    let peak = rho.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let level = threshold_rel * peak;
    let first = rho.iter().position(|&v| v > level)?;
    let last = rho.iter().rposition(|&v| v > level)?;
    Some((first, last))
}

fn check_box(rho: &DensityField, params: &ModelParams, step: u64) -> Result<()> {
    let grid = rho.grid;
    if grid.is_periodic() {
        return Ok(());
    }
    if let Some((first, last)) = support_cells(&rho.values, params.fb_threshold) {
        let n = grid.n_cells();
        if first < 2 || last + 3 > n {
            return Err(Error::EnvelopeViolation(format!(
                "support [{}, {}] reached the box edge [{}, {}] at step {step} (t = {})",
                grid.center(first),
                grid.center(last),
                grid.xmin(),
                grid.xmax(),
                rho.time
            )));
        }
    }
    Ok(())
}

/// Propagation envelope from the data of one state: support edges at the
/// threshold and `M = ‖B‖∞ + ‖B_x‖∞ + ‖u‖∞`.
pub fn envelope_for(state: &SimState, params: &ModelParams) -> Result<Option<SupersolutionEnvelope>> {
    let Some((first, last)) = support_cells(&state.rho.values, params.fb_threshold) else {
        return Ok(None);
    };
    let grid = state.rho.grid;
    let half = 0.5 * grid.dx();
    let u_max = params.pressure_factor() * pow_m1(state.rho.peak(), params.m);
    let norm = state.drift.max_abs_b() + state.drift.max_abs_bx() + u_max;
    SupersolutionEnvelope::two_sided(
        grid.center(first) - half,
        grid.center(last) + half,
        norm,
        params.m,
    )
    .map(Some)
}

fn check_envelope_setup(state: &SimState, spec: &RunSpec) -> Result<()> {
    let grid = spec.grid;
    if grid.is_periodic() {
        return Ok(());
    }
    let Some(env) = envelope_for(state, &spec.params)? else {
        return Ok(());
    };
    let horizon = spec.t_end - spec.t_start;
    let margin = 2.0 * grid.dx();
    let (lo, hi) = (env.left_bound(horizon), env.right_bound(horizon));
    if lo < grid.xmin() + margin || hi > grid.xmax() - margin {
        return Err(Error::EnvelopeViolation(format!(
            "propagation envelope [{lo}, {hi}] over t in [{}, {}] does not fit in the box [{}, {}]",
            spec.t_start,
            spec.t_end,
            grid.xmin(),
            grid.xmax()
        )));
    }
    Ok(())
}

/// Output times `t_start, t_start + h, ...`, ending exactly at `t_end`.
pub fn output_times(t_start: f64, t_end: f64, interval: f64) -> Vec<f64> {
    let mut times = vec![t_start];
    if t_end <= t_start {
        return times;
    }
    let mut k = 1u64;
    loop {
        let t = t_start + k as f64 * interval;
        if t >= t_end - 1e-12 * interval {
            times.push(t_end);
            break;
        }
        times.push(t);
        k += 1;
    }
    times
}

/// Integrates from `t_start` to `t_end`, recording snapshots at the output
/// times. Steps are shortened to land on every output time.
pub fn run(spec: &RunSpec) -> Result<Trajectory> {
    spec.validate()?;
    let params = spec.params;
    let model = DriftModel::new(spec.grid, spec.v.clone(), spec.w.clone(), spec.convolution)?;
    let rho0 = spec.initial.sample(&spec.grid, params.m, spec.t_start)?;
    let mut state = SimState::new(rho0, &model)?;
    if spec.check_envelope {
        check_envelope_setup(&state, spec)?;
    }
    check_box(&state.rho, &params, 0)?;

    let mass0 = state.rho.total_mass();
    let mut stats = RunStats {
        initial_mass: mass0,
        final_mass: mass0,
        min_density: state.rho.values.iter().copied().fold(f64::INFINITY, f64::min),
        max_density: state.rho.peak(),
        dt_min: f64::INFINITY,
        ..Default::default()
    };
    let times = output_times(spec.t_start, spec.t_end, spec.output_interval);
    let mut snapshots = Vec::with_capacity(times.len());
    snapshots.push(state.clone());
    let mut ws = Workspace::default();

    for &target in &times[1..] {
        while state.t < target {
            face_velocities(
                &state.rho.values,
                &state.drift.b_values,
                &spec.grid,
                params.m,
                &mut ws.faces,
                &mut ws.u,
            );
            let bound = stability_bound(
                &state.rho.values,
                &state.drift.b_values,
                &ws.faces,
                &spec.grid,
                &params,
            );
            let remaining = target - state.t;
            let landing = remaining <= bound * (1.0 + 1e-12);
            let dt = if landing { remaining } else { bound };
            let (mut next, info) = advance(&state, dt, &model, &params, &mut ws, true)?;
            if landing {
                next.t = target;
                next.rho.time = target;
                next.drift.time = target;
            }
            let recycled = std::mem::replace(&mut state, next);
            ws.next = recycled.rho.values;

            let mass = state.rho.total_mass();
            let peak = state.rho.peak();
            stats.steps += 1;
            stats.dt_min = stats.dt_min.min(dt);
            stats.dt_max = stats.dt_max.max(dt);
            if mass0 > 0.0 {
                stats.max_relative_mass_drift = stats
                    .max_relative_mass_drift
                    .max((mass - mass0).abs() / mass0);
                stats.max_step_clamped_relative =
                    stats.max_step_clamped_relative.max(info.clamped_mass / mass0);
            }
            stats.total_clamped_mass += info.clamped_mass;
            if peak > 0.0 {
                stats.min_relative_density =
                    stats.min_relative_density.min(info.min_before_clamp / peak);
            }
            stats.max_density = stats.max_density.max(peak);
            check_box(&state.rho, &params, state.step_count)?;
        }
        snapshots.push(state.clone());
    }
    stats.final_mass = state.rho.total_mass();
    stats.min_density = snapshots
        .iter()
        .flat_map(|s| s.rho.values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    if stats.steps == 0 {
        stats.dt_min = 0.0;
    }
    Ok(Trajectory {
        snapshots,
        fingerprint: spec.fingerprint.clone(),
        params,
        v: spec.v.clone(),
        w: spec.w.clone(),
        stats,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub norm: f64,
    pub alpha: f64,
    pub tau: f64,
    pub c1: f64,
    pub initial_left: f64,
    pub initial_right: f64,
    /// Snapshots whose threshold support escaped the bound.
    pub violations: usize,
    /// Smallest distance between the support and the bound over the run.
    pub min_clearance: f64,
}

/// Checks every snapshot's support against the envelope built from the
/// initial support and the norms measured over the whole run.
pub fn envelope_report(traj: &Trajectory) -> Result<Option<EnvelopeReport>> {
    let params = &traj.params;
    let first = traj.first();
    let Some((f0, l0)) = support_cells(&first.rho.values, params.fb_threshold) else {
        return Ok(None);
    };
    let grid = *traj.grid();
    let half = 0.5 * grid.dx();
    let (left0, right0) = (grid.center(f0) - half, grid.center(l0) + half);
    let mut norm_b = 0.0f64;
    let mut norm_bx = 0.0f64;
    let mut norm_u = 0.0f64;
    for s in &traj.snapshots {
        norm_b = norm_b.max(s.drift.max_abs_b());
        norm_bx = norm_bx.max(s.drift.max_abs_bx());
        norm_u = norm_u.max(params.pressure_factor() * pow_m1(s.rho.peak(), params.m));
    }
    let norm = norm_b + norm_bx + norm_u;
    if !(norm > 0.0) {
        return Ok(None);
    }
    let env = SupersolutionEnvelope::two_sided(left0, right0, norm, params.m)?;
    let mut violations = 0;
    let mut clearance = f64::INFINITY;
    for s in &traj.snapshots {
        let Some((f, l)) = support_cells(&s.rho.values, params.fb_threshold) else {
            continue;
        };
        let elapsed = s.t - first.t;
        let (lo, hi) = (grid.center(f) - half, grid.center(l) + half);
        let c = (env.right_bound(elapsed) - hi).min(lo - env.left_bound(elapsed));
        clearance = clearance.min(c);
        if c < 0.0 {
            violations += 1;
        }
    }
    Ok(Some(EnvelopeReport {
        norm,
        alpha: env.alpha(),
        tau: env.tau(),
        c1: env.c1(),
        initial_left: left0,
        initial_right: right0,
        violations,
        min_clearance: clearance,
    }))
}
