use std::path::Path;
use std::process::{Command, Output};

fn memthermo(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_memthermo"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cycle_writes_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(&["cycle", "--out", path(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("cycle.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("t_s,t_set_K,t_air_K,t_dev_K,r_ohm,phase")
    );
    assert!(!csv.contains('\r'));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("run.experiment = cycle\n"));
    assert!(manifest.contains("run.seed = 0\n"));
    assert!(manifest.contains(&format!("run.version = {}\n", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "plant.tau_air = 100\nplant.warp_factor = 9\n").unwrap();
    let out = memthermo(
        &["cycle", "--config", path(&cfg), "--out", path(dir.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=config"), "{err}");
    assert!(err.contains("plant.warp_factor"), "{err}");
}

#[test]
fn unknown_env_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(
        &["iv", "--out", path(dir.path())],
        &[("MEMTHERMO_PLANT__NOPE", "1")],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("MEMTHERMO_PLANT__NOPE"));
}

#[test]
fn env_override_lands_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(
        &["iv", "--out", path(dir.path())],
        &[("MEMTHERMO_IV__STEPS", "3")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("iv.steps = 3\n"));
    let csv = std::fs::read_to_string(dir.path().join("iv.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 6);
}

#[test]
fn unsettled_holds_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.cfg");
    std::fs::write(&cfg, "schedule.hold = 600\n").unwrap();
    let out = memthermo(
        &["cycle", "--config", path(&cfg), "--out", path(dir.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error kind=protocol"));
}

#[test]
fn switching_iv_sweep_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(
        &["iv", "--out", path(dir.path())],
        &[("MEMTHERMO_IV__V_MAX", "0.8")],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = memthermo(&["iv", "--out", path(&blocker.join("sub"))], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error kind=io"));
}

#[test]
fn bad_arguments_exit_one() {
    let out = memthermo(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = memthermo(&["cycle", "--preset", "cryogenic"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--preset"));
}

#[test]
fn preset_selects_plant_or_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(&["iv", "--preset", "L3", "--out", path(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("device.level = L3\n"));
    let out = memthermo(
        &["iv", "--preset", "on-wafer", "--out", path(dir.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("plant.preset = on-wafer\n"));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let out = memthermo(
        &["thermometer", "--seed", "11", "--out", path(&first)],
        &[("MEMTHERMO_THERMOMETER__TRIALS", "25")],
    );
    assert_eq!(out.status.code(), Some(0));
    let manifest = first.join("manifest.txt");
    let out = memthermo(
        &[
            "thermometer",
            "--config",
            path(&manifest),
            "--out",
            path(&second),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["thermometer.csv", "thermometer_summary.csv", "manifest.txt"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn signature_reads_an_iv_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = memthermo(&["iv", "--out", path(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
    let iv = dir.path().join("iv.csv");
    let out = memthermo(
        &["signature", "--out", path(dir.path())],
        &[("MEMTHERMO_SIGNATURE__INPUT", path(&iv))],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let sig = std::fs::read_to_string(dir.path().join("signature.csv")).unwrap();
    assert!(sig.contains("alpha_neg,0.05\n"), "{sig}");
}

#[test]
fn homeostasis_reads_a_pattern_file() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = dir.path().join("pattern.csv");
    let mut text = String::from("step,load\n");
    for step in 0..200 {
        text.push_str(&format!("{step},{}\n", if step < 100 { 0.2 } else { 0.3 }));
    }
    std::fs::write(&pattern, text).unwrap();
    let out = memthermo(
        &["homeostasis", "--out", path(dir.path())],
        &[
            ("MEMTHERMO_HOMEOSTASIS__PATTERN_FILE", path(&pattern)),
            ("MEMTHERMO_FEEDFORWARD__MODE", "affine"),
            ("MEMTHERMO_FEEDFORWARD__KAPPA", "100"),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let steps = std::fs::read_to_string(dir.path().join("homeostasis_steps.csv")).unwrap();
    assert_eq!(steps.lines().count(), 201);
    let windows = std::fs::read_to_string(dir.path().join("homeostasis_windows.csv")).unwrap();
    assert_eq!(windows.lines().count(), 1 + 8);
}

#[test]
fn in_process_entry_point_matches_binary_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = memthermo_cli::run_with_env(["memthermo", "iv", "--out", path(dir.path())], &[]);
    assert_eq!(code, memthermo_cli::EXIT_OK);
    let code = memthermo_cli::run_with_env(["memthermo", "--help"], &[]);
    assert_eq!(code, memthermo_cli::EXIT_OK);
}
