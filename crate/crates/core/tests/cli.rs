use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridgrid"))
}

fn t1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/t1.json")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_writes_artifacts_in_every_mode() {
    for mode in ["primary", "dual-droop", "secondary"] {
        let dir = tempfile::tempdir().unwrap();
        let o = bin().arg("run").arg(t1()).args(["--mode", mode, "--out"]).arg(dir.path()).output().unwrap();
        assert_eq!(code(&o), 0, "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains("overall: PASS"), "{stdout}");
        for f in ["trajectory.csv", "certificate.csv", "certificate.txt", "summary.txt"] {
            assert!(dir.path().join(f).exists(), "{mode}: {f}");
        }
    }
}

#[test]
fn certificate_violation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("run")
        .arg(t1())
        .args(["--mode", "secondary", "--t-end", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL terminal_convergence"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"schema\": ").unwrap();
    let o = bin().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error:"));

    let o = bin().arg("run").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(code(&o), 2);

    let o = bin().arg("sweep").arg(t1()).args(["--param", "colour", "--values", "1"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn infeasible_equilibrium_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(t1()).unwrap().replace("\"delta_pu\": 0.2", "\"delta_pu\": 50.0");
    let path = dir.path().join("heavy.json");
    std::fs::write(&path, text).unwrap();
    let o = bin().arg("run").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn preset_matches_the_bundled_fixture() {
    let o = bin().args(["preset", "case-study"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let fixture =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/case_study.json")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), fixture);

    let o = bin().args(["preset", "case-study", "--mode", "secondary", "--delayed"]).output().unwrap();
    let s = hybridgrid::scenario::parse_scenario_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(s.mode(), hybridgrid::ControlMode::Secondary);
    assert!((s.controllers.comm_delay - 0.2).abs() < 1e-15);
}

#[test]
fn sweep_writes_a_table_and_point_directories() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("sweep")
        .arg(t1())
        .args(["--param", "dc_resistance_scale", "--values", "1,0.1", "--t-end", "20", "--jobs", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(dir.path().join("point-0/trajectory.csv").exists());
    assert!(dir.path().join("point-1/summary.txt").exists());
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = bin().arg("run").arg(t1()).args(["--t-end", "3", "--out"]).arg(d.path()).output().unwrap();
        assert!(code(&o) <= 1);
    }
    for f in ["trajectory.csv", "certificate.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
