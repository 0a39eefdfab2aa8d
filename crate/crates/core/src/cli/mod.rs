//! Configuration, run orchestration and report generation for the
//! `pme-drift` binary.

pub mod certify;
pub mod config;
pub mod presets;
pub mod report;
pub mod run;

pub use certify::{certify, certify_command, parse_certify_config, render_certificates};
pub use config::{apply_overrides, load_config, parse_config, CheckName, SimConfig, OUTPUT_DIR_ENV};
pub use presets::{preset, PRESET_NAMES};
pub use report::{load_diagnostics, render_report, report_command};
pub use run::{run_command, Diagnostics, RunOutcome};
