//! The `report` subcommand: a human-readable summary of a run directory.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::CheckName;
use super::run::{Diagnostics, DIAGNOSTICS_FILE, INDEX_FILE};

/// Loads the diagnostics of a run directory. Aborted runs carry only a
/// diagnostics file; completed runs must also have their index.
pub fn load_diagnostics(dir: &Path) -> Result<Diagnostics> {
    let path = dir.join(DIAGNOSTICS_FILE);
    if !path.is_file() {
        return Err(Error::IncompleteRun(format!(
            "{} has no {DIAGNOSTICS_FILE}",
            dir.display()
        )));
    }
    let diag: Diagnostics = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    if diag.completed && !dir.join(INDEX_FILE).is_file() {
        return Err(Error::IncompleteRun(format!(
            "{} has no {INDEX_FILE}",
            dir.display()
        )));
    }
    Ok(diag)
}

fn fmt_metric(d: &Diagnostics, check: CheckName, key: &str) -> Option<String> {
    d.check(check)
        .and_then(|c| c.metrics.get(key))
        .map(|v| format!("{v:.6e}"))
}

/// Renders the summary; the flag is true when every check passed.
pub fn render_report(d: &Diagnostics) -> (String, bool) {
    let mut out = String::new();
    let _ = writeln!(out, "run {}", d.fingerprint);
    if let Some(s) = &d.stats {
        let _ = writeln!(
            out,
            "  steps {}  dt in [{:e}, {:e}]  relative mass drift {:e}",
            s.steps, s.dt_min, s.dt_max, s.max_relative_mass_drift
        );
    }
    if !d.completed {
        let _ = writeln!(out, "  simulation did not complete");
    }
    for c in &d.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "  {tag} {:<20} {}", c.name.as_str(), c.summary);
    }
    for f in d.failures.iter().filter(|f| f.check == "run") {
        let _ = writeln!(out, "  FAIL {:<20} {:?}: {}", "run", f.kind, f.message);
    }

    let mut constants = Vec::new();
    for (label, check, key) in [
        ("C_AB", CheckName::AronsonBenilan, "c_ab"),
        ("C_Lip", CheckName::Lipschitz, "c_lip"),
        ("sigma_hat", CheckName::Nondegeneracy, "sigma_hat"),
    ] {
        if let Some(v) = fmt_metric(d, check, key) {
            constants.push(format!("{label} = {v}"));
        }
    }
    if !constants.is_empty() {
        let _ = writeln!(out, "  fitted: {}", constants.join(", "));
    }
    if let Some(c) = d.classification {
        let _ = writeln!(out, "  boundary: {c:?}");
    }
    let mut residuals = Vec::new();
    for (label, check, key) in [
        ("darcy", CheckName::Darcy, "max_residual"),
        ("pme interior", CheckName::AronsonBenilan, "max_residual_interior"),
        ("identity", CheckName::BoundaryIdentity, "max_deviation"),
        ("stationarity", CheckName::Stationarity, "max_sup_drift"),
    ] {
        if let Some(v) = fmt_metric(d, check, key) {
            residuals.push(format!("{label} {v}"));
        }
    }
    if !residuals.is_empty() {
        let _ = writeln!(out, "  max residuals: {}", residuals.join(", "));
    }
    let ok = d.passed();
    let _ = writeln!(out, "{}", if ok { "PASS" } else { "FAIL" });
    (out, ok)
}

pub fn report_command(dir: &Path) -> Result<(String, bool)> {
    Ok(render_report(&load_diagnostics(dir)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::run::{CheckRecord, FailureKind, FailureRecord};

    fn diag(passed: bool) -> Diagnostics {
        Diagnostics {
            fingerprint: "abc".into(),
            completed: true,
            stats: None,
            classification: None,
            checks: vec![CheckRecord {
                name: CheckName::Darcy,
                passed,
                errored: false,
                summary: "ratio".into(),
                metrics: [("max_residual".to_string(), 0.25)].into_iter().collect(),
            }],
            failures: if passed {
                Vec::new()
            } else {
                vec![FailureRecord {
                    check: "darcy".into(),
                    kind: FailureKind::Tolerance,
                    message: "ratio".into(),
                }]
            },
        }
    }

    #[test]
    fn empty_directory_is_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(report_command(dir.path()), Err(Error::IncompleteRun(_))));
    }

    #[test]
    fn failures_are_marked() {
        let (text, ok) = render_report(&diag(false));
        assert!(!ok);
        assert!(text.contains("FAIL darcy"));
        assert!(text.contains("darcy 2.5"));
        let (text, ok) = render_report(&diag(true));
        assert!(ok);
        assert!(text.trim_end().ends_with("PASS"));
    }
}
