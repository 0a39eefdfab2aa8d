//! The `certify` subcommand: barrier certificates on sample grids, with no
//! simulation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracles::{certify_linear_barrier, certify_quadratic_barrier, CertificateReport};

use super::config::CertifyConfig;

/// Evaluates every configured barrier certificate. An empty configuration
/// evaluates both shipped defaults.
pub fn certify(cfg: &CertifyConfig) -> Result<Vec<CertificateReport>> {
    let (linear, quadratic) = cfg.resolved();
    let both = cfg.linear.is_none() && cfg.quadratic.is_none();
    let mut out = Vec::new();
    if both || cfg.linear.is_some() {
        out.push(certify_linear_barrier(&linear)?);
    }
    if both || cfg.quadratic.is_some() {
        out.push(certify_quadratic_barrier(&quadratic)?);
    }
    Ok(out)
}

/// Parses a certificate file with optional `[linear]` and `[quadratic]`
/// tables.
pub fn parse_certify_config(text: &str) -> Result<CertifyConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let cfg: CertifyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    cfg.validate("")?;
    Ok(cfg)
}

pub fn render_certificates(reports: &[CertificateReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{} {} on x in [{}, {}], t in [{}, {}], {} samples ({} in the positive set)",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.region.x_min,
            r.region.x_max,
            r.region.t_min,
            r.region.t_max,
            r.samples,
            r.positive_set_samples
        );
        for q in &r.quantities {
            let _ = writeln!(
                out,
                "    {} {}: min {:e}, max {:e}, {} violations",
                q.name, q.requirement, q.min, q.max, q.violations
            );
        }
        if let Some(tau) = r.largest_passing_tau {
            let _ = writeln!(out, "    largest passing tau {tau}");
        }
    }
    out
}

/// Runs the certificates of `path`, or the defaults without one. Returns
/// the reports and whether all passed.
pub fn certify_command(path: Option<&Path>) -> Result<(Vec<CertificateReport>, bool)> {
    let cfg = match path {
        Some(p) => parse_certify_config(&std::fs::read_to_string(p)?)?,
        None => CertifyConfig::default(),
    };
    let reports = certify(&cfg)?;
    let ok = reports.iter().all(|r| r.passed);
    Ok((reports, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_evaluate_both_certificates() {
        let reports = certify(&CertifyConfig::default()).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.passed), "{}", render_certificates(&reports));
    }

    #[test]
    fn single_table_evaluates_one() {
        let cfg = parse_certify_config("[linear]\neps = 0.2\n").unwrap();
        assert_eq!(certify(&cfg).unwrap().len(), 1);
        let err = parse_certify_config("[linear]\nepsilon = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("linear"), "{err}");
    }
}
