use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pme_drift::cli::run::{Diagnostics, FailureKind, RunIndex};
use pme_drift::cli::OUTPUT_DIR_ENV;
use pme_drift::BoundaryClass;

const BIN: &str = env!("CARGO_BIN_EXE_pme-drift");
const PRESETS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/presets");

fn pme(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env(OUTPUT_DIR_ENV, out)
        .output()
        .expect("binary runs")
}

fn diagnostics(dir: &Path) -> Diagnostics {
    serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.json")).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn barenblatt_run_writes_artifacts_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bb");
    let config = format!("{PRESETS}/barenblatt.toml");
    let o = pme(&out, &["run", &config, "--set", "grid.n_cells=256", "--set", "time.output_stride=0.1", "--set", "checks.darcy_tolerance=0.3"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    for f in ["diagnostics.json", "index.json", "trace.csv", "path.csv", "config.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let index: RunIndex = serde_json::from_str(&fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
    assert_eq!(index.snapshots.len(), 11);
    assert_eq!(index.n_cells, 256);
    let snap = fs::read_to_string(out.join(&index.snapshots[3].file)).unwrap();
    assert_eq!(snap.lines().next(), Some("x,rho,u,B"));
    assert_eq!(snap.lines().count(), 257);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,l,r,k_left,k_right,b_at_r,darcy_residual,gap_count"));

    let d = diagnostics(&out);
    assert!(d.passed() && d.completed);
    assert_eq!(d.classification, Some(BoundaryClass::ExpandingRelative));

    let r = pme(&out, &["report", out.to_str().unwrap()]);
    assert!(r.status.success());
    let text = stdout(&r);
    assert!(text.contains("PASS darcy") && text.contains("sigma_hat"), "{text}");
}

#[test]
fn identical_configs_give_identical_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["run", "--preset", "traveling_wave", "--set", "grid.n_cells=128", "--set", "time.t_end=0.2", "--set", "checks.enabled=[\"mass\"]"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(pme(&a, &args).status.success());
    assert!(pme(&b, &args).status.success());
    let index: RunIndex = serde_json::from_str(&fs::read_to_string(a.join("index.json")).unwrap()).unwrap();
    for s in &index.snapshots {
        assert_eq!(fs::read(a.join(&s.file)).unwrap(), fs::read(b.join(&s.file)).unwrap());
    }
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn torus_classifies_as_waiting_time() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("torus");
    let o = pme(
        &out,
        &["run", "--preset", "torus_stationary", "--set", "grid.n_cells=128", "--set", "checks.enabled=[\"classify\"]"],
    );
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(diagnostics(&out).classification, Some(BoundaryClass::WaitingTime));
}

#[test]
fn narrow_box_aborts_with_envelope_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("narrow");
    let o = pme(
        &out,
        &["run", "--preset", "barenblatt", "--set", "grid.xmin=-2.5", "--set", "grid.xmax=2.5", "--set", "grid.n_cells=128"],
    );
    assert_eq!(o.status.code(), Some(1));
    let d = diagnostics(&out);
    assert!(!d.completed);
    assert_eq!(d.failures[0].kind, FailureKind::EnvelopeViolation);
    let r = pme(&out, &["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("FAIL"));
}

#[test]
fn failed_check_sets_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("strict");
    let o = pme(
        &out,
        &["run", "--preset", "barenblatt", "--set", "grid.n_cells=128", "--set", "checks.enabled=[\"mass\"]", "--set", "checks.mass_tolerance=1e-300"],
    );
    assert_eq!(o.status.code(), Some(1));
    let d = diagnostics(&out);
    assert_eq!(d.failures.len(), 1);
    assert_eq!(d.failures[0].check, "mass");
    let r = pme(&out, &["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("FAIL mass"));
}

#[test]
fn config_errors_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let o = pme(&out, &["run", "--preset", "barenblatt", "--set", "model.m=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m must exceed 1"), "{}", stderr(&o));
    let o = pme(&out, &["run", "--preset", "barenblatt", "--set", "model.viscosity=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("viscosity"), "{}", stderr(&o));
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let r = pme(&out, &["report", empty.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("incomplete run"));
}

#[test]
fn certify_needs_no_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pme(tmp.path(), &["certify", &format!("{PRESETS}/certificates.toml")]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS linear_barrier") && text.contains("PASS quadratic_barrier"));
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn presets_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pme(tmp.path(), &["preset"]);
    assert!(stdout(&o).lines().any(|l| l == "bump_stationary_m1.5"));
}
