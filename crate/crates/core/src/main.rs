use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use pme_drift::cli::{
    apply_overrides, certify_command, load_config, parse_config, preset, render_certificates,
    render_report, report_command, run_command, PRESET_NAMES,
};
use pme_drift::{Error, Result};

#[derive(Parser)]
#[command(name = "pme-drift", version, about = "Porous medium equation with drift: simulate and verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configuration and evaluate its checks.
    Run {
        /// TOML configuration file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Use a shipped preset instead of a file.
        #[arg(long)]
        preset: Option<String>,
        /// `section.key=value` overrides, applied in order.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Summarize a finished run directory.
    Report { dir: PathBuf },
    /// Evaluate barrier certificates without simulating.
    Certify {
        /// TOML file with optional [linear] and [quadratic] tables.
        config: Option<PathBuf>,
        /// Print the full reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a shipped preset as TOML, or list the names.
    Preset { name: Option<String> },
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    check: &'a str,
    kind: &'a str,
    message: String,
}

fn fail(e: &Error) -> ExitCode {
    let kind = match e {
        Error::Config { .. } => "config",
        Error::IncompleteRun(_) => "incomplete_run",
        Error::Io(_) => "io",
        _ => "error",
    };
    let rec = ErrorRecord {
        check: "setup",
        kind,
        message: e.to_string(),
    };
    eprintln!("error: {e}");
    if let Ok(json) = serde_json::to_string(&rec) {
        eprintln!("{json}");
    }
    ExitCode::from(2)
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            preset: name,
            overrides,
        } => {
            let (cfg, base) = match (config, name) {
                (Some(path), _) => {
                    let base = path.parent().map(|p| p.to_path_buf());
                    (load_config(&path, &overrides)?, base)
                }
                (None, Some(name)) => {
                    let text = preset(&name)?.to_toml()?;
                    (parse_config(&apply_overrides(&text, &overrides)?)?, None)
                }
                (None, None) => unreachable!("clap requires a config or a preset"),
            };
            let outcome = run_command(&cfg, base.as_deref())?;
            let (text, ok) = render_report(&outcome.diagnostics);
            print!("{text}");
            println!("artifacts in {}", outcome.dir.display());
            Ok(status(ok))
        }
        Command::Report { dir } => {
            let (text, ok) = report_command(&dir)?;
            print!("{text}");
            Ok(status(ok))
        }
        Command::Certify { config, json } => {
            let (reports, ok) = certify_command(config.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                print!("{}", render_certificates(&reports));
            }
            Ok(status(ok))
        }
        Command::Preset { name: None } => {
            for n in PRESET_NAMES {
                println!("{n}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name: Some(n) } => {
            print!("{}", preset(&n)?.to_toml()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}
