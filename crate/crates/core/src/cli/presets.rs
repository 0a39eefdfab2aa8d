//! Shipped example configurations.

use std::path::PathBuf;

use crate::drift::{AnalyticField, DriftModel};
use crate::error::{Error, Result};
use crate::freeboundary::BoundaryClass;
use crate::solver::{envelope_for, SimState};

use super::config::{
    CheckName, ChecksConfig, CertifyConfig, DriftConfig, FieldConfig, GridConfig, InitConfig,
    ModelConfig, OutputConfig, ProfileKind, SimConfig, TimeConfig, TopologyKind,
};

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 6] = [
    "barenblatt",
    "traveling_wave",
    "torus_stationary",
    "bump_stationary_m1.5",
    "bump_stationary_m2",
    "bump_stationary_m3",
];

pub fn preset(name: &str) -> Result<SimConfig> {
    match name {
        "barenblatt" => barenblatt(1024),
        "traveling_wave" => traveling_wave(1024),
        "torus_stationary" => Ok(torus_stationary(256)),
        "bump_stationary_m1.5" => bump_stationary(1.5, 512),
        "bump_stationary_m2" => bump_stationary(2.0, 512),
        "bump_stationary_m3" => bump_stationary(3.0, 512),
        _ => Err(Error::InvalidParameter(format!(
            "unknown preset `{name}`; known: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn base(
    grid: GridConfig,
    m: f64,
    drift: DriftConfig,
    init: InitConfig,
    time: TimeConfig,
    checks: Vec<CheckName>,
    name: &str,
) -> SimConfig {
    SimConfig {
        grid,
        model: ModelConfig {
            m,
            fb_threshold: crate::fields::DEFAULT_FB_THRESHOLD,
            cfl_safety: crate::fields::DEFAULT_CFL_SAFETY,
            dt_max: crate::fields::DEFAULT_DT_MAX,
        },
        drift,
        init,
        time,
        checks: ChecksConfig {
            enabled: checks,
            ..Default::default()
        },
        certify: CertifyConfig::default(),
        output: OutputConfig {
            directory: PathBuf::from(format!("out/{name}")),
        },
    }
}

fn line(half: f64, n_cells: usize) -> GridConfig {
    GridConfig {
        topology: TopologyKind::Line,
        period: None,
        xmin: Some(-half),
        xmax: Some(half),
        n_cells,
    }
}

/// Widens a symmetric line box until the propagation envelope of the
/// initial state, over the configured horizon, stays two cells inside it.
/// The half-width is rounded up to a multiple of `0.5`.
pub fn fit_box(cfg: &mut SimConfig) -> Result<()> {
    if cfg.grid.topology != TopologyKind::Line {
        return Ok(());
    }
    let horizon = cfg.time.t_end - cfg.time.t_start;
    let mut half = cfg.grid.xmax.unwrap_or(1.0).abs().max(1.0);
    for _ in 0..32 {
        cfg.grid.xmin = Some(-half);
        cfg.grid.xmax = Some(half);
        let spec = cfg.run_spec(None)?;
        let model = DriftModel::new(spec.grid, spec.v.clone(), spec.w.clone(), spec.convolution)?;
        let rho = spec.initial.sample(&spec.grid, spec.params.m, spec.t_start)?;
        let state = SimState::new(rho, &model)?;
        let Some(env) = envelope_for(&state, &spec.params)? else {
            return Ok(());
        };
        let reach = env.right_bound(horizon).max(-env.left_bound(horizon));
        let needed = reach + 3.0 * spec.grid.dx();
        if needed <= half {
            return Ok(());
        }
        half = (needed * 2.0).ceil() / 2.0;
    }
    Err(Error::EnvelopeViolation(
        "box fitting did not converge".into(),
    ))
}

/// Source-type solution with `m = 2`, unit mass, on `t ∈ [1, 2]`.
pub fn barenblatt(n_cells: usize) -> Result<SimConfig> {
    let mut cfg = base(
        line(8.0, n_cells),
        2.0,
        DriftConfig::default(),
        InitConfig {
            mass: Some(1.0),
            center: Some(0.0),
            growth_exponent: Some(1.0),
            ..InitConfig::of(ProfileKind::Barenblatt)
        },
        TimeConfig {
            t_start: 1.0,
            t_end: 2.0,
            output_stride: 0.05,
        },
        vec![
            CheckName::Mass,
            CheckName::Darcy,
            CheckName::AronsonBenilan,
            CheckName::Lipschitz,
            CheckName::Envelope,
            CheckName::Classify,
            CheckName::Nondegeneracy,
            CheckName::BoundaryIdentity,
        ],
        "barenblatt",
    );
    cfg.model.fb_threshold = 3e-3;
    fit_box(&mut cfg)?;
    Ok(cfg)
}

/// Rounded tent whose flanks are unit-speed traveling fronts, `m = 2`.
pub fn traveling_wave(n_cells: usize) -> Result<SimConfig> {
    let mut cfg = base(
        line(8.0, n_cells),
        2.0,
        DriftConfig::default(),
        InitConfig {
            speed: Some(1.0),
            center: Some(0.0),
            half_width: Some(1.0),
            rounding: Some(0.25),
            growth_exponent: Some(1.0),
            ..InitConfig::of(ProfileKind::TravelingWave)
        },
        TimeConfig {
            t_start: 0.0,
            t_end: 1.0,
            output_stride: 0.05,
        },
        vec![
            CheckName::Mass,
            CheckName::Darcy,
            CheckName::AronsonBenilan,
            CheckName::Lipschitz,
            CheckName::Envelope,
            CheckName::Classify,
            CheckName::Nondegeneracy,
        ],
        "traveling_wave",
    );
    cfg.model.fb_threshold = 3e-3;
    fit_box(&mut cfg)?;
    Ok(cfg)
}

/// `rho = sin(2πx) + 1` with `W = Φ'`, `Φ = -4 cos(2πx)`, `m = 2` on the
/// unit torus. The cutoff scales with `dx²` so that the quadratic zero at
/// `x = 3/4` is resolved as a gap of a few cells.
pub fn torus_stationary(n_cells: usize) -> SimConfig {
    let dx = 1.0 / n_cells as f64;
    let mut cfg = base(
        GridConfig {
            topology: TopologyKind::Periodic,
            period: Some(1.0),
            xmin: None,
            xmax: None,
            n_cells,
        },
        2.0,
        DriftConfig {
            w: FieldConfig::from_analytic(AnalyticField::CosineGradient { a: 4.0 }),
            ..Default::default()
        },
        InitConfig {
            growth_exponent: Some(2.0),
            ..InitConfig::of(ProfileKind::TorusStationary)
        },
        TimeConfig {
            t_start: 0.0,
            t_end: 1.0,
            output_stride: 0.05,
        },
        vec![
            CheckName::Mass,
            CheckName::Stationarity,
            CheckName::AronsonBenilan,
            CheckName::Lipschitz,
            CheckName::Classify,
            CheckName::Nondegeneracy,
        ],
        "torus_stationary",
    );
    cfg.model.fb_threshold = 25.0 * dx * dx;
    cfg.checks.expected_class = Some(BoundaryClass::WaitingTime);
    cfg
}

/// Stationary density for the local drift `V = Ψ'` of the bump on
/// `(-4, 4)`, `W = 0`.
pub fn bump_stationary(m: f64, n_cells: usize) -> Result<SimConfig> {
    let name = format!("bump_stationary_m{m}");
    let mut cfg = base(
        line(8.0, n_cells),
        m,
        DriftConfig {
            v: FieldConfig::from_analytic(AnalyticField::BumpGradient {
                center: 0.0,
                half_width: 4.0,
            }),
            ..Default::default()
        },
        InitConfig {
            center: Some(0.0),
            half_width: Some(4.0),
            growth_exponent: Some(2.0),
            ..InitConfig::of(ProfileKind::BumpStationary)
        },
        TimeConfig {
            t_start: 0.0,
            t_end: 1.0,
            output_stride: 0.05,
        },
        vec![
            CheckName::Mass,
            CheckName::Stationarity,
            CheckName::AronsonBenilan,
            CheckName::Lipschitz,
            CheckName::Envelope,
            CheckName::Classify,
        ],
        &name,
    );
    fit_box(&mut cfg)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_preset_validates() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(super::super::config::parse_config(&text).unwrap(), cfg);
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn shipped_files_match_presets() {
        let shipped = [
            ("barenblatt", include_str!("../../presets/barenblatt.toml")),
            ("traveling_wave", include_str!("../../presets/traveling_wave.toml")),
            ("torus_stationary", include_str!("../../presets/torus_stationary.toml")),
            ("bump_stationary_m1.5", include_str!("../../presets/bump_stationary_m1.5.toml")),
            ("bump_stationary_m2", include_str!("../../presets/bump_stationary_m2.toml")),
            ("bump_stationary_m3", include_str!("../../presets/bump_stationary_m3.toml")),
        ];
        assert_eq!(shipped.len(), PRESET_NAMES.len());
        for (name, text) in shipped {
            assert_eq!(super::super::config::parse_config(text).unwrap(), preset(name).unwrap(), "{name}");
        }
        let certs = crate::cli::parse_certify_config(include_str!("../../presets/certificates.toml")).unwrap();
        assert_eq!(certs.resolved(), (Default::default(), Default::default()));
        assert!(certs.linear.is_some() && certs.quadratic.is_some());
    }

    #[test]
    fn fitted_box_contains_envelope() {
        let cfg = barenblatt(256).unwrap();
        let half = cfg.grid.xmax.unwrap();
        // front 2.08 plus one window of width e + 2 for unit-order norms
        assert!(half > 6.8 && half <= 10.0, "{half}");
        assert_eq!(cfg.grid.xmin, Some(-half));
    }
}
