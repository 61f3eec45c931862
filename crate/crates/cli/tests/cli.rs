use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spinshape-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinshape"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_jm_passes_with_deviation() {
    let dir = scratch("jm");
    let o = run(&dir, &["verify-jm", "--n", "5", "--k", "2"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("PASS trace-formula"), "{text}");
    assert!(text.contains("max deviation"), "{text}");
    assert!(dir.join("verify-jm.csv").exists());
}

#[test]
fn pde_check_and_gcheck_pass() {
    let dir = scratch("pde");
    let o = run(&dir, &["pde-check", "--order", "10"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("PASS evolution-equation"));
    let o = run(&dir, &["gcheck", "--nmax", "10"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("PASS hook-formula"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("cfg");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "nonsense=3\n").unwrap();
    let o = run(&dir, &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&dir, &["tmeasure", "--lambda", "2,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&dir, &["afactor", "--psi-family", "cauchy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_feeds_simulate() {
    let dir = scratch("sim");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "# small run\nn=20\nreplicas=30\npsi.family=gamma\npsi.params=3\nseed=4\n").unwrap();
    let o = run(&dir, &["--config", cfg.to_str().unwrap(), "simulate", "--t", "0.5"]);
    assert!(o.status.success(), "{o:?}");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("simulate.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["args"]["simulate"]["n"], 20);
    assert_eq!(manifest["args"]["simulate"]["t"], 0.5);
    assert_eq!(manifest["args"]["simulate"]["pausing"]["psi_family"], "gamma");
    let records = fs::read_to_string(dir.join("simulate.csv")).unwrap();
    assert_eq!(records.lines().count(), 31);
}

#[test]
fn reruns_are_byte_identical() {
    let a = scratch("rerun-a");
    let b = scratch("rerun-b");
    for (cmd, name, files) in [
        (vec!["--seed", "3", "simulate", "--n", "30", "--replicas", "40"], "simulate", vec!["simulate.csv", "simulate.summary.json"]),
        (vec!["--format", "json", "--seed", "5", "pde-check", "--order", "8"], "pde-check", vec!["pde-check.json"]),
        (vec!["chartable", "--n", "4"], "chartable", vec!["chartable.csv", "chartable-classes.csv"]),
    ] {
        assert!(run(&a, &cmd).status.success());
        assert!(run(&b, &cmd).status.success());
        for f in files.into_iter().chain([format!("{name}.manifest.json")].iter().map(String::as_str)) {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn failing_check_exits_with_one() {
    let dir = scratch("fail");
    let o = run(&dir, &["afactor", "--psi-family", "gamma", "--psi-params", "2", "--n", "50", "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    assert!(stdout(&o).contains("FAIL a-factor"));
    let manifest = fs::read_to_string(dir.join("afactor.manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"FAIL\""));
}
