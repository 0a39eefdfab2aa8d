//! Run configuration: strict TOML sections, validation with key paths,
//! `--set` overrides and conversion into a [`RunSpec`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::{AnalyticField, ConvolutionMethod, TabulatedField, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::fields::{
    InitialDataSpec, InitialProfile, ModelParams, DEFAULT_CFL_SAFETY, DEFAULT_DT_MAX,
    DEFAULT_FB_THRESHOLD,
};
use crate::freeboundary::{BoundaryClass, SlopeFit, SlopeOptions, IDENTITY_WINDOW};
use crate::grid::{Grid, Topology};
use crate::oracles::{LinearCertificateConfig, QuadraticCertificateConfig};
use crate::solver::RunSpec;

/// Environment variable that replaces `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "PME_DRIFT_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub drift: DriftConfig,
    pub init: InitConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Periodic,
    Line,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub topology: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    pub n_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m: f64,
    #[serde(default = "default_fb_threshold")]
    pub fb_threshold: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
}

fn default_fb_threshold() -> f64 {
    DEFAULT_FB_THRESHOLD
}

fn default_cfl_safety() -> f64 {
    DEFAULT_CFL_SAFETY
}

fn default_dt_max() -> f64 {
    DEFAULT_DT_MAX
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Zero,
    Constant,
    Linear,
    CosinePotential,
    CosineGradient,
    BumpGradient,
    Gaussian,
    Tabulated,
}

/// One of `V`, `W`. Only the parameters of the chosen `kind` may be set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// CSV file with columns `x, value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl FieldConfig {
    pub fn zero() -> Self {
        FieldConfig::of(FieldKind::Zero)
    }

    pub fn of(kind: FieldKind) -> Self {
        FieldConfig {
            kind,
            value: None,
            a: None,
            center: None,
            half_width: None,
            amplitude: None,
            sigma: None,
            path: None,
            x: None,
            values: None,
        }
    }

    pub fn from_analytic(field: AnalyticField) -> Self {
        match field {
            AnalyticField::Constant { value } => FieldConfig {
                value: Some(value),
                ..FieldConfig::of(FieldKind::Constant)
            },
            AnalyticField::Linear { a } => FieldConfig {
                a: Some(a),
                ..FieldConfig::of(FieldKind::Linear)
            },
            AnalyticField::CosinePotential { a } => FieldConfig {
                a: Some(a),
                ..FieldConfig::of(FieldKind::CosinePotential)
            },
            AnalyticField::CosineGradient { a } => FieldConfig {
                a: Some(a),
                ..FieldConfig::of(FieldKind::CosineGradient)
            },
            AnalyticField::BumpGradient { center, half_width } => FieldConfig {
                center: Some(center),
                half_width: Some(half_width),
                ..FieldConfig::of(FieldKind::BumpGradient)
            },
            AnalyticField::Gaussian {
                amplitude,
                sigma,
                center,
            } => FieldConfig {
                amplitude: Some(amplitude),
                sigma: Some(sigma),
                center: Some(center),
                ..FieldConfig::of(FieldKind::Gaussian)
            },
        }
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let flags = [
            ("value", self.value.is_some()),
            ("a", self.a.is_some()),
            ("center", self.center.is_some()),
            ("half_width", self.half_width.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("sigma", self.sigma.is_some()),
            ("path", self.path.is_some()),
            ("x", self.x.is_some()),
            ("values", self.values.is_some()),
        ];
        for (k, set) in flags {
            if set {
                keys.push(k);
            }
        }
        keys
    }

    /// Resolves the field; relative tabulated paths are taken from `base`.
    pub fn to_spec(&self, path: &str, base: Option<&Path>) -> Result<VectorFieldSpec> {
        self.resolve(path, base, true)
    }

    /// Checks keys and parameters without reading tabulated files.
    pub fn check(&self, path: &str) -> Result<()> {
        self.resolve(path, None, false).map(|_| ())
    }

    fn resolve(&self, path: &str, base: Option<&Path>, load: bool) -> Result<VectorFieldSpec> {
        let (allowed, optional): (&[&str], &[&str]) = match self.kind {
            FieldKind::Zero => (&[], &[]),
            FieldKind::Constant => (&["value"], &[]),
            FieldKind::Linear | FieldKind::CosinePotential | FieldKind::CosineGradient => {
                (&["a"], &[])
            }
            FieldKind::BumpGradient => (&["center", "half_width"], &[]),
            FieldKind::Gaussian => (&["amplitude", "sigma"], &["center"]),
            FieldKind::Tabulated => (&[], &["path", "x", "values"]),
        };
        for k in self.set_keys() {
            if !allowed.contains(&k) && !optional.contains(&k) {
                return Err(Error::config(
                    format!("{path}.{k}"),
                    format!("not a parameter of kind {:?}", self.kind),
                ));
            }
        }
        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| Error::config(format!("{path}.{k}"), "missing required key"))
        };
        let field = match self.kind {
            FieldKind::Zero => return Ok(VectorFieldSpec::Zero),
            FieldKind::Constant => AnalyticField::Constant {
                value: need(self.value, "value")?,
            },
            FieldKind::Linear => AnalyticField::Linear {
                a: need(self.a, "a")?,
            },
            FieldKind::CosinePotential => AnalyticField::CosinePotential {
                a: need(self.a, "a")?,
            },
            FieldKind::CosineGradient => AnalyticField::CosineGradient {
                a: need(self.a, "a")?,
            },
            FieldKind::BumpGradient => AnalyticField::BumpGradient {
                center: need(self.center, "center")?,
                half_width: need(self.half_width, "half_width")?,
            },
            FieldKind::Gaussian => AnalyticField::Gaussian {
                amplitude: need(self.amplitude, "amplitude")?,
                sigma: need(self.sigma, "sigma")?,
                center: self.center.unwrap_or(0.0),
            },
            FieldKind::Tabulated => return self.tabulated(path, base, load),
        };
        let spec = VectorFieldSpec::Analytic(field);
        spec.validate()
            .map_err(|e| Error::config(path, e.to_string()))?;
        Ok(spec)
    }

    fn tabulated(&self, path: &str, base: Option<&Path>, load: bool) -> Result<VectorFieldSpec> {
        let table = match (&self.path, &self.x, &self.values) {
            (Some(_), None, None) if !load => return Ok(VectorFieldSpec::Zero),
            (Some(p), None, None) => {
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                TabulatedField::from_csv(&full)
            }
            (None, Some(x), Some(v)) => TabulatedField::from_samples(x, v.clone()),
            _ => {
                return Err(Error::config(
                    path,
                    "tabulated field needs either `path` or both `x` and `values`",
                ))
            }
        };
        table
            .map(VectorFieldSpec::Tabulated)
            .map_err(|e| Error::config(path, e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionChoice {
    Direct,
    Fft,
    #[default]
    Auto,
}

impl From<ConvolutionChoice> for ConvolutionMethod {
    fn from(c: ConvolutionChoice) -> Self {
        match c {
            ConvolutionChoice::Direct => ConvolutionMethod::Direct,
            ConvolutionChoice::Fft => ConvolutionMethod::Fft,
            ConvolutionChoice::Auto => ConvolutionMethod::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    #[serde(default = "FieldConfig::zero")]
    pub v: FieldConfig,
    #[serde(default = "FieldConfig::zero")]
    pub w: FieldConfig,
    #[serde(default)]
    pub convolution: ConvolutionChoice,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            v: FieldConfig::zero(),
            w: FieldConfig::zero(),
            convolution: ConvolutionChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Barenblatt,
    TravelingWave,
    TorusStationary,
    BumpStationary,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub profile: ProfileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    /// Pressure growth exponent at the right edge of the initial data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_constant: Option<f64>,
}

impl InitConfig {
    pub fn of(profile: ProfileKind) -> Self {
        InitConfig {
            profile,
            mass: None,
            center: None,
            speed: None,
            half_width: None,
            rounding: None,
            x: None,
            rho: None,
            growth_exponent: None,
            growth_constant: None,
        }
    }

    pub fn to_spec(&self) -> Result<InitialDataSpec> {
        let set = [
            ("mass", self.mass.is_some()),
            ("center", self.center.is_some()),
            ("speed", self.speed.is_some()),
            ("half_width", self.half_width.is_some()),
            ("rounding", self.rounding.is_some()),
            ("x", self.x.is_some()),
            ("rho", self.rho.is_some()),
        ];
        let allowed: &[&str] = match self.profile {
            ProfileKind::Barenblatt => &["mass", "center"],
            ProfileKind::TravelingWave => &["speed", "center", "half_width", "rounding"],
            ProfileKind::TorusStationary => &[],
            ProfileKind::BumpStationary => &["center", "half_width"],
            ProfileKind::Custom => &["x", "rho"],
        };
        for (k, on) in set {
            if on && !allowed.contains(&k) {
                return Err(Error::config(
                    format!("init.{k}"),
                    format!("not a parameter of profile {:?}", self.profile),
                ));
            }
        }
        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| Error::config(format!("init.{k}"), "missing required key"))
        };
        let profile = match self.profile {
            ProfileKind::Barenblatt => InitialProfile::Barenblatt {
                mass: need(self.mass, "mass")?,
                center: self.center.unwrap_or(0.0),
            },
            ProfileKind::TravelingWave => InitialProfile::TravelingWave {
                speed: need(self.speed, "speed")?,
                center: self.center.unwrap_or(0.0),
                half_width: need(self.half_width, "half_width")?,
                rounding: self.rounding.unwrap_or(0.0),
            },
            ProfileKind::TorusStationary => InitialProfile::TorusStationary,
            ProfileKind::BumpStationary => InitialProfile::BumpStationary {
                center: self.center.unwrap_or(0.0),
                half_width: need(self.half_width, "half_width")?,
            },
            ProfileKind::Custom => InitialProfile::Custom {
                x: self
                    .x
                    .clone()
                    .ok_or_else(|| Error::config("init.x", "missing required key"))?,
                rho: self
                    .rho
                    .clone()
                    .ok_or_else(|| Error::config("init.rho", "missing required key"))?,
            },
        };
        let spec = InitialDataSpec {
            profile,
            growth_exponent: self.growth_exponent,
            growth_constant: self.growth_constant,
        };
        spec.validate().map_err(|e| Error::config("init", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    /// Time between recorded snapshots.
    pub output_stride: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Mass,
    Stationarity,
    Darcy,
    AronsonBenilan,
    Lipschitz,
    Envelope,
    Classify,
    Nondegeneracy,
    BoundaryIdentity,
    BarrierCertificates,
}

impl CheckName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Mass => "mass",
            CheckName::Stationarity => "stationarity",
            CheckName::Darcy => "darcy",
            CheckName::AronsonBenilan => "aronson_benilan",
            CheckName::Lipschitz => "lipschitz",
            CheckName::Envelope => "envelope",
            CheckName::Classify => "classify",
            CheckName::Nondegeneracy => "nondegeneracy",
            CheckName::BoundaryIdentity => "boundary_identity",
            CheckName::BarrierCertificates => "barrier_certificates",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    NonDegenerate,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default)]
    pub enabled: Vec<CheckName>,
    /// Largest `|mass(t) - mass(0)| / mass(0)`.
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    /// Largest sup-norm distance from the initial density.
    #[serde(default = "default_stationarity_tolerance")]
    pub stationarity_tolerance: f64,
    /// Largest Darcy residual as a fraction of the largest slope.
    #[serde(default = "default_darcy_tolerance")]
    pub darcy_tolerance: f64,
    /// Upper bound on the fitted Aronson-Bénilan constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aronson_benilan_max: Option<f64>,
    /// Largest boundary-identity deviation in units of `dx · max k²`.
    #[serde(default = "default_identity_tolerance")]
    pub identity_tolerance: f64,
    /// Overrides the class implied by `init.growth_exponent`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_class: Option<BoundaryClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_nondegeneracy: Option<ExpectedVerdict>,
    #[serde(default = "default_window")]
    pub slope_window: usize,
    #[serde(default = "default_offset")]
    pub slope_offset: usize,
    #[serde(default = "default_fit")]
    pub slope_fit: SlopeFit,
    /// Extrapolation window for the boundary identities.
    #[serde(default = "default_identity_window")]
    pub identity_window: usize,
    #[serde(default = "default_identity_offset")]
    pub identity_offset: usize,
}

fn default_mass_tolerance() -> f64 {
    1e-10
}

fn default_stationarity_tolerance() -> f64 {
    1e-3
}

fn default_darcy_tolerance() -> f64 {
    0.05
}

fn default_identity_tolerance() -> f64 {
    4.0
}

fn default_window() -> usize {
    SlopeOptions::default().window
}

fn default_offset() -> usize {
    SlopeOptions::default().offset
}

fn default_fit() -> SlopeFit {
    SlopeOptions::default().fit
}

fn default_identity_window() -> usize {
    IDENTITY_WINDOW.window
}

fn default_identity_offset() -> usize {
    IDENTITY_WINDOW.offset
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            enabled: Vec::new(),
            mass_tolerance: default_mass_tolerance(),
            stationarity_tolerance: default_stationarity_tolerance(),
            darcy_tolerance: default_darcy_tolerance(),
            aronson_benilan_max: None,
            identity_tolerance: default_identity_tolerance(),
            expected_class: None,
            expected_nondegeneracy: None,
            slope_window: default_window(),
            slope_offset: default_offset(),
            slope_fit: default_fit(),
            identity_window: default_identity_window(),
            identity_offset: default_identity_offset(),
        }
    }
}

impl ChecksConfig {
    pub fn slope_options(&self) -> SlopeOptions {
        SlopeOptions {
            window: self.slope_window,
            offset: self.slope_offset,
            fit: self.slope_fit,
        }
    }

    pub fn identity_options(&self) -> SlopeOptions {
        SlopeOptions {
            window: self.identity_window,
            offset: self.identity_offset,
            fit: self.slope_fit,
        }
    }

    pub fn has(&self, name: CheckName) -> bool {
        self.enabled.contains(&name)
    }
}

/// Barrier certificate configurations; either may be left out.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearCertificateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticCertificateConfig>,
}

impl CertifyConfig {
    /// The configured certificates, or both defaults when none is given.
    /// Range checks; `prefix` is prepended to key paths in errors.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        if let Some(l) = &self.linear {
            if !(l.eps > 0.0 && l.a >= 0.0 && l.m > 1.0 && l.samples > 0) {
                return Err(Error::config(
                    key("linear"),
                    "need eps > 0, a >= 0, m > 1 and at least one sample",
                ));
            }
        }
        if let Some(q) = &self.quadratic {
            if !(q.m > 1.0 && q.k0 > 0.0 && q.samples > 0) {
                return Err(Error::config(
                    key("quadratic"),
                    "need m > 1, k0 > 0 and at least one sample",
                ));
            }
        }
        Ok(())
    }

    pub fn resolved(&self) -> (LinearCertificateConfig, QuadraticCertificateConfig) {
        if self.linear.is_none() && self.quadratic.is_none() {
            return (Default::default(), Default::default());
        }
        (
            self.linear.clone().unwrap_or_default(),
            self.quadratic.clone().unwrap_or_default(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub directory: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("pme-drift-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_output_dir(),
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let cfg: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, applies `key=value` overrides, then parses.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    let text = apply_overrides(&text, overrides)?;
    parse_config(&text)
}

/// Applies `section.key=value` assignments. Values are parsed as TOML
/// (numbers, booleans, arrays); anything else is taken as a string.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item.as_str(), "override must look like section.key=value"))?;
        let key = key.trim();
        let value = parse_value(raw.trim());
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::config(key, "empty key segment"));
        }
        let mut table = &mut doc;
        for p in &parts[..parts.len() - 1] {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| Error::config(key, format!("`{p}` is not a section")))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }
    toml::to_string(&doc).map_err(|e| Error::config("<document>", e.to_string()))
}

fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl SimConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    /// SHA-256 of the canonical serialization.
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params()?;
        self.drift.v.check("drift.v")?;
        self.drift.w.check("drift.w")?;
        self.init.to_spec()?;
        let t = &self.time;
        if !(t.t_start >= 0.0 && t.t_start.is_finite()) {
            return Err(Error::config("time.t_start", "t_start must be non-negative"));
        }
        if !(t.t_end >= t.t_start && t.t_end.is_finite()) {
            return Err(Error::config("time.t_end", "t_end must not precede t_start"));
        }
        if !(t.output_stride > 0.0 && t.output_stride.is_finite()) {
            return Err(Error::config("time.output_stride", "output_stride must be positive"));
        }
        let c = &self.checks;
        let positive = [
            ("checks.mass_tolerance", c.mass_tolerance),
            ("checks.stationarity_tolerance", c.stationarity_tolerance),
            ("checks.darcy_tolerance", c.darcy_tolerance),
            ("checks.identity_tolerance", c.identity_tolerance),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, "tolerance must be positive"));
            }
        }
        if c.slope_window < 3 {
            return Err(Error::config("checks.slope_window", "fit window needs at least 3 cells"));
        }
        if c.identity_window < 3 {
            return Err(Error::config("checks.identity_window", "fit window needs at least 3 cells"));
        }
        self.certify.validate("certify")
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        if g.n_cells < 8 {
            return Err(Error::config("grid.n_cells", "need at least 8 cells"));
        }
        let topology = match g.topology {
            TopologyKind::Periodic => {
                for (k, v) in [("xmin", g.xmin), ("xmax", g.xmax)] {
                    if v.is_some() {
                        return Err(Error::config(format!("grid.{k}"), "not used on a periodic grid"));
                    }
                }
                let period = g.period.unwrap_or(1.0);
                if !(period > 0.0 && period.is_finite()) {
                    return Err(Error::config("grid.period", "period must be positive"));
                }
                Topology::Periodic { period }
            }
            TopologyKind::Line => {
                if g.period.is_some() {
                    return Err(Error::config("grid.period", "not used on a line grid"));
                }
                let xmin = g.xmin.ok_or_else(|| Error::config("grid.xmin", "missing required key"))?;
                let xmax = g.xmax.ok_or_else(|| Error::config("grid.xmax", "missing required key"))?;
                if !(xmax > xmin && xmin.is_finite() && xmax.is_finite()) {
                    return Err(Error::config("grid.xmax", "xmax must exceed xmin"));
                }
                Topology::Line { xmin, xmax }
            }
        };
        Grid::new(topology, g.n_cells).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let p = ModelParams {
            m: m.m,
            fb_threshold: m.fb_threshold,
            cfl_safety: m.cfl_safety,
            dt_max: m.dt_max,
        };
        if !(m.m.is_finite() && m.m > 1.0) {
            return Err(Error::config("model.m", "m must exceed 1"));
        }
        if !(m.fb_threshold > 0.0 && m.fb_threshold < 1.0) {
            return Err(Error::config("model.fb_threshold", "fb_threshold must lie in (0, 1)"));
        }
        if !(m.cfl_safety > 0.0 && m.cfl_safety < 1.0) {
            return Err(Error::config("model.cfl_safety", "cfl_safety must lie in (0, 1)"));
        }
        if !(m.dt_max > 0.0 && m.dt_max.is_finite()) {
            return Err(Error::config("model.dt_max", "dt_max must be positive"));
        }
        Ok(p)
    }

    /// Builds the solver input; tabulated paths are resolved against `base`.
    pub fn run_spec(&self, base: Option<&Path>) -> Result<RunSpec> {
        let mut spec = RunSpec::new(
            self.grid()?,
            self.params()?,
            self.drift.v.to_spec("drift.v", base)?,
            self.drift.w.to_spec("drift.w", base)?,
            self.init.to_spec()?,
            self.time.t_start,
            self.time.t_end,
            self.time.output_stride,
        );
        spec.convolution = self.drift.convolution.into();
        spec.fingerprint = self.fingerprint()?;
        Ok(spec)
    }

    /// Expected boundary class, explicit or implied by the growth exponent.
    pub fn expected_class(&self) -> Option<BoundaryClass> {
        self.checks
            .expected_class
            .or_else(|| crate::freeboundary::expected_class(self.init.growth_exponent))
    }

    /// Output directory, honoring [`OUTPUT_DIR_ENV`].
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.directory.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
topology = "line"
xmin = -8.0
xmax = 8.0
n_cells = 256

[model]
m = 2.0

[init]
profile = "barenblatt"
mass = 1.0

[time]
t_start = 1.0
t_end = 2.0
output_stride = 0.1
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.model.cfl_safety, 0.4);
        assert_eq!(cfg.model.fb_threshold, 1e-6);
        assert_eq!(cfg.model.dt_max, 1e-2);
        assert_eq!(cfg.drift.v, FieldConfig::zero());
        assert_eq!(cfg.checks.mass_tolerance, 1e-10);
        assert!(cfg.checks.enabled.is_empty());
    }

    #[test]
    fn m_one_is_rejected() {
        let text = MINIMAL.replace("m = 2.0", "m = 1.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("m must exceed 1"), "{err}");
        assert!(err.contains("model.m"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("m = 2.0", "m = 2.0\nviscosity = 0.1");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("viscosity"), "{err}");
        assert!(err.contains("model"), "{err}");
    }

    #[test]
    fn missing_required_key_has_path() {
        let text = MINIMAL.replace("mass = 1.0", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("init.mass"), "{err}");
        let text = MINIMAL.replace("n_cells = 256", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("grid") && err.contains("n_cells"), "{err}");
    }

    #[test]
    fn out_of_range_values_have_paths() {
        let text = MINIMAL.replace("t_end = 2.0", "t_end = 0.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("time.t_end"), "{err}");
        let text = MINIMAL.replace("[model]\nm = 2.0", "[model]\nm = 2.0\ncfl_safety = 1.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("model.cfl_safety"), "{err}");
    }

    #[test]
    fn foreign_field_parameter_rejected() {
        let text = format!("{MINIMAL}\n[drift.v]\nkind = \"linear\"\na = 1.0\nsigma = 2.0\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("drift.v.sigma"), "{err}");
    }

    #[test]
    fn full_config_round_trips() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.drift.v = FieldConfig::from_analytic(AnalyticField::Gaussian {
            amplitude: 0.3,
            sigma: 0.7,
            center: -0.25,
        });
        cfg.drift.w = FieldConfig::from_analytic(AnalyticField::CosineGradient { a: 4.0 });
        cfg.init.growth_exponent = Some(1.0);
        cfg.checks.enabled = vec![CheckName::Darcy, CheckName::Classify];
        cfg.checks.expected_class = Some(BoundaryClass::ExpandingRelative);
        cfg.certify.linear = Some(LinearCertificateConfig::default());
        cfg.certify.quadratic = Some(QuadraticCertificateConfig::default());
        cfg.time.output_stride = 0.1 + 1e-17;
        let text = cfg.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml().unwrap(), text);
        assert_eq!(back.fingerprint().unwrap(), cfg.fingerprint().unwrap());
    }

    #[test]
    fn overrides_replace_values() {
        let text = apply_overrides(
            MINIMAL,
            &[
                "grid.n_cells=128".into(),
                "model.m=3".into(),
                "checks.enabled=[\"mass\"]".into(),
                "output.directory=out/x".into(),
            ],
        )
        .unwrap();
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.grid.n_cells, 128);
        assert_eq!(cfg.model.m, 3.0);
        assert_eq!(cfg.checks.enabled, vec![CheckName::Mass]);
        assert_eq!(cfg.output.directory, PathBuf::from("out/x"));
        assert!(apply_overrides(MINIMAL, &["grid".into()]).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = parse_config(MINIMAL).unwrap();
        let mut b = a.clone();
        b.grid.n_cells = 512;
        assert_ne!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        assert_eq!(a.fingerprint().unwrap().len(), 64);
    }

    #[test]
    fn run_spec_matches_sections() {
        let spec = parse_config(MINIMAL).unwrap().run_spec(None).unwrap();
        assert_eq!(spec.grid.n_cells(), 256);
        assert_eq!(spec.t_start, 1.0);
        assert!(spec.v.is_zero() && spec.w.is_zero());
        assert_eq!(spec.fingerprint.len(), 64);
    }
}
