//! The `run` subcommand: simulate, evaluate the configured checks and
//! write every artifact to the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeboundary::{
    boundary_identity_check, boundary_lipschitz_check, boundary_streamline_band,
    classify_against_band, darcy_residual, nondegeneracy_trace, BoundaryClass, FreeBoundaryTrace,
    NondegeneracyVerdict,
};
use crate::oracles::CertificateReport;
use crate::pressure::{to_pressure, trajectory_diagnostics, DiagnosticsReport};
use crate::solver::{envelope_report, run, RunStats, Trajectory};
use crate::streamline::{StreamlinePath, TrajectoryHistory};

use super::certify::certify;
use super::config::{CheckName, ExpectedVerdict, SimConfig};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const INDEX_FILE: &str = "index.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PATH_FILE: &str = "path.csv";
pub const CERTIFICATES_FILE: &str = "certificates.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub passed: bool,
    /// The check could not be evaluated; `summary` holds the reason.
    #[serde(default)]
    pub errored: bool,
    pub summary: String,
    /// Finite scalar results only; non-finite values are described in
    /// `summary` instead.
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// Check name, or `run` when the simulation itself stopped.
    pub check: String,
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// A check ran and its result is outside tolerance.
    Tolerance,
    /// A check could not be evaluated.
    Error,
    EnvelopeViolation,
    SolverError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub fingerprint: String,
    pub completed: bool,
    pub stats: Option<RunStats>,
    pub classification: Option<BoundaryClass>,
    pub checks: Vec<CheckRecord>,
    pub failures: Vec<FailureRecord>,
}

impl Diagnostics {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunIndex {
    pub fingerprint: String,
    pub m: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub periodic: bool,
    pub snapshots: Vec<SnapshotEntry>,
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub diagnostics: Diagnostics,
    /// Absent when the simulation stopped early.
    pub trajectory: Option<Trajectory>,
}

fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn errored(name: CheckName, e: &Error) -> CheckRecord {
    CheckRecord {
        name,
        passed: false,
        errored: true,
        summary: e.to_string(),
        metrics: BTreeMap::new(),
    }
}

/// Intermediate results shared between checks.
struct Context<'a> {
    cfg: &'a SimConfig,
    traj: &'a Trajectory,
    trace: Option<FreeBoundaryTrace>,
    diag: Option<DiagnosticsReport>,
    band: Option<Vec<StreamlinePath>>,
    certificates: Option<Vec<CertificateReport>>,
    classification: Option<BoundaryClass>,
}

impl<'a> Context<'a> {
    fn trace(&mut self) -> Result<&FreeBoundaryTrace> {
        if self.trace.is_none() {
            self.trace = Some(FreeBoundaryTrace::from_trajectory(
                self.traj,
                self.cfg.checks.slope_options(),
            )?);
        }
        Ok(self.trace.as_ref().expect("trace was just built"))
    }

    fn diag(&mut self) -> Result<&DiagnosticsReport> {
        if self.diag.is_none() {
            self.diag = Some(trajectory_diagnostics(self.traj)?);
        }
        Ok(self.diag.as_ref().expect("diagnostics were just built"))
    }

    fn evaluate(&mut self, name: CheckName) -> CheckRecord {
        let out = match name {
            CheckName::Mass => Ok(self.mass()),
            CheckName::Stationarity => Ok(self.stationarity()),
            CheckName::Darcy => self.darcy(),
            CheckName::AronsonBenilan => self.aronson_benilan(),
            CheckName::Lipschitz => self.lipschitz(),
            CheckName::Envelope => self.envelope(),
            CheckName::Classify => self.classify(),
            CheckName::Nondegeneracy => self.nondegeneracy(),
            CheckName::BoundaryIdentity => self.identity(),
            CheckName::BarrierCertificates => self.barriers(),
        };
        out.unwrap_or_else(|e| errored(name, &e))
    }

    fn mass(&self) -> CheckRecord {
        let drift = self.traj.stats.max_relative_mass_drift;
        let tol = self.cfg.checks.mass_tolerance;
        CheckRecord {
            name: CheckName::Mass,
            passed: drift <= tol,
            errored: false,
            summary: format!("relative mass drift {drift:e} (tolerance {tol:e})"),
            metrics: metrics([
                ("max_relative_drift", drift),
                ("tolerance", tol),
                ("steps", self.traj.stats.steps as f64),
            ]),
        }
    }

    fn stationarity(&self) -> CheckRecord {
        let first = &self.traj.first().rho.values;
        let dev = self
            .traj
            .snapshots
            .iter()
            .flat_map(|s| s.rho.values.iter().zip(first).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let tol = self.cfg.checks.stationarity_tolerance;
        CheckRecord {
            name: CheckName::Stationarity,
            passed: dev <= tol,
            errored: false,
            summary: format!("sup-norm drift from the initial density {dev:e} (tolerance {tol:e})"),
            metrics: metrics([("max_sup_drift", dev), ("tolerance", tol)]),
        }
    }

    fn darcy(&mut self) -> Result<CheckRecord> {
        let tol = self.cfg.checks.darcy_tolerance;
        let trace = self.trace()?;
        let res = darcy_residual(trace)?;
        let max_res = res.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let max_k = trace
            .samples
            .iter()
            .filter_map(|s| s.k_right)
            .fold(0.0f64, f64::max);
        if res.iter().all(Option::is_none) || !(max_k > 0.0) {
            return Err(Error::NoBoundary("no interior Darcy residual could be formed".into()));
        }
        let ratio = max_res / max_k;
        Ok(CheckRecord {
            name: CheckName::Darcy,
            passed: ratio <= tol,
            errored: false,
            summary: format!(
                "max |r' - k - B(r)| = {max_res:e}, {ratio:.4} of max k = {max_k:e} (tolerance {tol})"
            ),
            metrics: metrics([
                ("max_residual", max_res),
                ("max_k", max_k),
                ("ratio", ratio),
                ("tolerance", tol),
            ]),
        })
    }

    fn aronson_benilan(&mut self) -> Result<CheckRecord> {
        let bound = self.cfg.checks.aronson_benilan_max;
        let d = self.diag()?;
        let c = d.ab_constant_fit;
        let passed = c.is_finite() && bound.map_or(true, |b| c <= b);
        let mut summary = format!("fitted C_AB = {c}, min u_xx = {}", d.min_uxx);
        if let Some(b) = bound {
            summary.push_str(&format!(" (bound {b})"));
        }
        let mut m = metrics([
            ("c_ab", c),
            ("min_uxx", d.min_uxx),
            ("max_residual_interior", d.max_residual_interior),
        ]);
        if let Some(b) = bound {
            m.insert("bound".into(), b);
        }
        Ok(CheckRecord {
            name: CheckName::AronsonBenilan,
            passed,
            errored: false,
            summary,
            metrics: m,
        })
    }

    fn lipschitz(&mut self) -> Result<CheckRecord> {
        let c_lip = self.diag()?.lipschitz_fit;
        let lip = boundary_lipschitz_check(self.trace()?);
        let passed = c_lip.is_finite() && lip.violations == 0;
        Ok(CheckRecord {
            name: CheckName::Lipschitz,
            passed,
            errored: false,
            summary: format!(
                "fitted C_Lip = {c_lip}, {} endpoint speed violations (worst margin {:e})",
                lip.violations, lip.worst_margin
            ),
            metrics: metrics([
                ("c_lip", c_lip),
                ("violations", lip.violations as f64),
                ("worst_margin", lip.worst_margin),
            ]),
        })
    }

    fn envelope(&self) -> Result<CheckRecord> {
        let Some(rep) = envelope_report(self.traj)? else {
            return Ok(CheckRecord {
                name: CheckName::Envelope,
                passed: true,
                errored: false,
                summary: "no support or vanishing norms; the envelope is trivial".into(),
                metrics: BTreeMap::new(),
            });
        };
        Ok(CheckRecord {
            name: CheckName::Envelope,
            passed: rep.violations == 0,
            errored: false,
            summary: format!(
                "{} snapshots outside R + C1 ceil(t/tau) (M = {}, tau = {}, C1 = {})",
                rep.violations, rep.norm, rep.tau, rep.c1
            ),
            metrics: metrics([
                ("violations", rep.violations as f64),
                ("min_clearance", rep.min_clearance),
                ("norm", rep.norm),
                ("alpha", rep.alpha),
                ("tau", rep.tau),
                ("c1", rep.c1),
            ]),
        })
    }

    fn classify(&mut self) -> Result<CheckRecord> {
        let expected = self.cfg.expected_class();
        let traj = self.traj;
        let history = TrajectoryHistory::new(traj);
        let trace = self.trace()?;
        let band = boundary_streamline_band(trace, &history)?;
        let c = classify_against_band(trace, &band)?;
        self.band = Some(band);
        self.classification = Some(c.class);
        let passed = match expected {
            Some(e) => c.class == e,
            None => c.class != BoundaryClass::Inconclusive,
        };
        let expected_txt = expected.map_or("not inconclusive".to_string(), |e| format!("{e:?}"));
        Ok(CheckRecord {
            name: CheckName::Classify,
            passed,
            errored: false,
            summary: format!(
                "{:?} (expected {expected_txt}); max deviation from the streamline band {:e}, tolerance {:e}",
                c.class, c.max_deviation, c.tolerance
            ),
            metrics: metrics([
                ("max_deviation", c.max_deviation),
                ("final_deviation", c.final_deviation),
                ("tolerance", c.tolerance),
            ]),
        })
    }

    fn nondegeneracy(&mut self) -> Result<CheckRecord> {
        let expected = self.cfg.checks.expected_nondegeneracy.or_else(|| {
            self.cfg.expected_class().map(|c| match c {
                BoundaryClass::WaitingTime => ExpectedVerdict::Degenerate,
                _ => ExpectedVerdict::NonDegenerate,
            })
        });
        let rep = nondegeneracy_trace(self.trace()?);
        let passed = match (expected, rep.verdict) {
            (_, NondegeneracyVerdict::NoBoundary) => false,
            (Some(ExpectedVerdict::NonDegenerate), v) => v == NondegeneracyVerdict::NonDegeneratePersistent,
            (Some(ExpectedVerdict::Degenerate), v) => v != NondegeneracyVerdict::NonDegeneratePersistent,
            (None, _) => true,
        };
        let sigma = rep.sigma_hat.map_or("none".to_string(), |s| s.to_string());
        Ok(CheckRecord {
            name: CheckName::Nondegeneracy,
            passed,
            errored: false,
            summary: format!(
                "{:?} (expected {}); k0 = {:?}, min k = {:?}, floor {:e}, sigma_hat = {sigma}",
                rep.verdict,
                expected.map_or("any".to_string(), |e| format!("{e:?}")),
                rep.k0,
                rep.min_k,
                rep.tol
            ),
            metrics: metrics([
                ("k0", rep.k0.unwrap_or(f64::NAN)),
                ("min_k", rep.min_k.unwrap_or(f64::NAN)),
                ("floor", rep.tol),
                ("sigma_hat", rep.sigma_hat.unwrap_or(f64::NAN)),
            ]),
        })
    }

    fn identity(&mut self) -> Result<CheckRecord> {
        let opts = self.cfg.checks.identity_options();
        let scale = self.cfg.checks.identity_tolerance;
        let traj = self.traj;
        let trace = self.trace()?;
        let rep = boundary_identity_check(traj, trace, &opts)?;
        let bound = scale * trace.dx * rep.max_k_squared;
        Ok(CheckRecord {
            name: CheckName::BoundaryIdentity,
            passed: rep.max_deviation <= bound,
            errored: false,
            summary: format!(
                "max |u_t - (u_x² - u_x B)| = {:e} (bound {bound:e}), max |u u_xx| = {:e}",
                rep.max_deviation, rep.max_u_uxx
            ),
            metrics: metrics([
                ("max_deviation", rep.max_deviation),
                ("max_u_uxx", rep.max_u_uxx),
                ("bound", bound),
            ]),
        })
    }

    fn barriers(&mut self) -> Result<CheckRecord> {
        let reports = certify(&self.cfg.certify)?;
        let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        let summary = if failed.is_empty() {
            format!("{} certificates hold at every sample", reports.len())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        let rec = CheckRecord {
            name: CheckName::BarrierCertificates,
            passed: failed.is_empty(),
            errored: false,
            summary,
            metrics: metrics([("certificates", reports.len() as f64), ("failed", failed.len() as f64)]),
        };
        self.certificates = Some(reports);
        Ok(rec)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn write_snapshots(dir: &Path, traj: &Trajectory) -> Result<Vec<SnapshotEntry>> {
    let sdir = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&sdir)?;
    let m = traj.params.m;
    let mut entries = Vec::with_capacity(traj.snapshots.len());
    for (i, s) in traj.snapshots.iter().enumerate() {
        let file = format!("{SNAPSHOT_DIR}/{i:05}.csv");
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        w.write_record(["x", "rho", "u", "B"])?;
        let u = to_pressure(&s.rho, m)?;
        for j in 0..s.rho.values.len() {
            w.write_record([
                s.rho.grid.center(j).to_string(),
                s.rho.values[j].to_string(),
                u.values[j].to_string(),
                s.drift.b_values[j].to_string(),
            ])?;
        }
        w.flush()?;
        entries.push(SnapshotEntry { index: i, t: s.t, file });
    }
    Ok(entries)
}

fn write_trace(dir: &Path, trace: &FreeBoundaryTrace) -> Result<()> {
    let res = darcy_residual(trace).unwrap_or_else(|_| vec![None; trace.samples.len()]);
    let mut w = csv::Writer::from_path(dir.join(TRACE_FILE))?;
    w.write_record(["t", "l", "r", "k_left", "k_right", "b_at_r", "darcy_residual", "gap_count"])?;
    for (s, d) in trace.samples.iter().zip(res) {
        w.write_record([
            s.t.to_string(),
            opt(s.l),
            opt(s.r),
            opt(s.k_left),
            opt(s.k_right),
            opt(s.b_at_r),
            opt(d),
            s.gaps.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_band(dir: &Path, band: &[StreamlinePath]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(PATH_FILE))?;
    w.write_record(["t", "x_lower", "x", "x_upper"])?;
    if let [lo, mid, hi] = band {
        for ((a, b), c) in lo.samples.iter().zip(&mid.samples).zip(&hi.samples) {
            w.write_record([b.0.to_string(), a.1.to_string(), b.1.to_string(), c.1.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn abort(dir: &Path, fingerprint: String, e: Error) -> Result<RunOutcome> {
    let kind = match e {
        Error::EnvelopeViolation(_) => FailureKind::EnvelopeViolation,
        _ => FailureKind::SolverError,
    };
    let diagnostics = Diagnostics {
        fingerprint,
        completed: false,
        stats: None,
        classification: None,
        checks: Vec::new(),
        failures: vec![FailureRecord {
            check: "run".into(),
            kind,
            message: e.to_string(),
        }],
    };
    write_json(&dir.join(DIAGNOSTICS_FILE), &diagnostics)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        diagnostics,
        trajectory: None,
    })
}

/// Runs `cfg`, writing artifacts under [`SimConfig::output_dir`]. Relative
/// tabulated-field paths resolve against `base`. Check failures and solver
/// aborts are reported in the returned diagnostics; `Err` is reserved for
/// configuration and I/O problems.
pub fn run_command(cfg: &SimConfig, base: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let spec = cfg.run_spec(base)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    for stale in [DIAGNOSTICS_FILE, INDEX_FILE, TRACE_FILE, PATH_FILE, CERTIFICATES_FILE] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    if dir.join(SNAPSHOT_DIR).exists() {
        fs::remove_dir_all(dir.join(SNAPSHOT_DIR))?;
    }
    fs::write(dir.join(CONFIG_FILE), cfg.to_toml()?)?;

    let traj = match run(&spec) {
        Ok(t) => t,
        Err(e @ (Error::EnvelopeViolation(_) | Error::NonFinite { .. } | Error::CflViolation { .. })) => {
            return abort(&dir, spec.fingerprint.clone(), e);
        }
        Err(e) => return Err(e),
    };

    let snapshots = write_snapshots(&dir, &traj)?;
    let grid = traj.grid();
    write_json(
        &dir.join(INDEX_FILE),
        &RunIndex {
            fingerprint: traj.fingerprint.clone(),
            m: traj.params.m,
            n_cells: grid.n_cells(),
            dx: grid.dx(),
            periodic: grid.is_periodic(),
            snapshots,
        },
    )?;

    let mut ctx = Context {
        cfg,
        traj: &traj,
        trace: None,
        diag: None,
        band: None,
        certificates: None,
        classification: None,
    };
    let mut checks = Vec::new();
    let mut seen = Vec::new();
    for &name in &cfg.checks.enabled {
        if seen.contains(&name) {
            continue;
        }
        seen.push(name);
        checks.push(ctx.evaluate(name));
    }
    let failures = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| FailureRecord {
            check: c.name.as_str().to_string(),
            kind: if c.errored {
                FailureKind::Error
            } else {
                FailureKind::Tolerance
            },
            message: c.summary.clone(),
        })
        .collect();

    if let Ok(trace) = ctx.trace() {
        write_trace(&dir, trace)?;
    }
    if let Some(band) = &ctx.band {
        write_band(&dir, band)?;
    }
    if let Some(certs) = &ctx.certificates {
        write_json(&dir.join(CERTIFICATES_FILE), certs)?;
    }
    let diagnostics = Diagnostics {
        fingerprint: traj.fingerprint.clone(),
        completed: true,
        stats: Some(traj.stats.clone()),
        classification: ctx.classification,
        checks,
        failures,
    };
    write_json(&dir.join(DIAGNOSTICS_FILE), &diagnostics)?;
    Ok(RunOutcome {
        dir,
        diagnostics,
        trajectory: Some(traj),
    })
}
