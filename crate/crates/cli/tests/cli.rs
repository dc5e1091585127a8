use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsalpha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsalpha"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn zero_modes_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsalpha(&["eigen", "--domain", "torus", "--modes", "0", "--out", s(&dir.path().join("b.nsab"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn torus_eigen_passes_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.nsab");
    let o = nsalpha(&["eigen", "--domain", "torus", "--modes", "64", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(!text.contains("FAIL"), "{text}");
    assert!(out.exists());
}

#[test]
fn missing_basis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsalpha(&["run", "--basis", s(&dir.path().join("nope.nsab")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn conflicting_flags_print_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsalpha(&["run", "--basis", "b.nsab", "--torus", "16", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = nsalpha(&[
        "sweep", "--torus", "64", "--kind", "alpha", "--list", "0.2,0.1,0.05", "--n-list", "4,8,16", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsalpha(&[
        "run", "--torus", "16", "--set", "n=16", "--set", "nu=1e-4", "--set", "dt=0.5", "--set", "t_end=200",
        "--set", "init=spectral", "--set", "init_amplitude=1e3", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_and_resume_from_file_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 16\ndt = 0.001\nt_end = 0.5\ninit = taylor_green\noutput_cadence = 100\n").unwrap();
    let first = dir.path().join("first");
    let o = nsalpha(&["run", "--torus", "16", "--config", s(&cfg), "--out", s(&first)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let energy = fs::read_to_string(first.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,E0,E_alpha,D_alpha,balance_residual"));
    let last: Vec<f64> = energy.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let e0_initial: f64 = energy.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last[1] / (e0_initial * (-2.0f64).exp()) - 1.0).abs() < 1e-6);

    let m = fs::read_to_string(first.join("manifest.txt")).unwrap();
    assert!(m.contains("config.init = taylor_green"));

    let second = dir.path().join("second");
    let o = nsalpha(&[
        "run", "--torus", "16", "--config", s(&cfg), "--set", "t_end=1", "--resume", s(&first.join("final.nsa1")),
        "--out", s(&second),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resumed = fs::read_to_string(second.join("energy.csv")).unwrap();
    let t_last: f64 = resumed.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((t_last - 1.0).abs() < 1e-9);
}

#[test]
fn sweep_then_report_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nsweep");
    let o = nsalpha(&[
        "--jobs", "2", "sweep", "--torus", "128", "--kind", "n", "--n-list", "4,8,16", "--n-ref", "64", "--set", "n=16",
        "--set", "dt=0.01", "--set", "t_end=0.5", "--set", "init=spectral", "--set", "seed=3", "--set", "output_cadence=5",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let before = summary(&out);
    assert!(before["slope"].as_f64().unwrap() < 0.0);
    for key in ["slope", "intercept", "residual", "K_hat", "secular_growth_flag", "fitted_M", "fitted_B"] {
        assert!(before.get(key).is_some(), "{key}");
    }
    fs::remove_file(out.join("summary.json")).unwrap();
    let o = nsalpha(&["report", "--dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out), before);
}

#[test]
fn perturb_then_report_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = nsalpha(&[
        "perturb", "--torus", "16", "--t0", "0.2", "--burn", "0.3", "--set", "n=16", "--set", "dt=0.005", "--set",
        "t_end=2", "--set", "init=spectral", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let before = summary(&out);
    assert!(before["fitted_M"].as_f64().unwrap() > 0.0);
    let o = nsalpha(&["report", "--dir", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(summary(&out), before);
}

#[test]
fn report_without_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&nsalpha(&["report", "--dir", s(dir.path())])), 2);
}
