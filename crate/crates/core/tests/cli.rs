use std::path::Path;
use std::process::Command;

fn muskat(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_muskat")).args(args).output().expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn constants_writes_threshold_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let (code, _) = muskat(&["constants", "--model", "3d", "--samples", "21", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a_mu,threshold,sigma_at_half_threshold"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert!((rows[0][1] - 0.362606).abs() < 1e-5);
    assert!(rows.iter().all(|r| r[2] > 0.0));
}

#[test]
fn simulate_writes_schema_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# smoke run\nmodel=2d\nn=32\na_mu=0.5\na_rho=1.0\nt_end=0.1\n");
    let out = dir.path().join("out");
    let (code, text) = muskat(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,f11,f21,f11_nu,f21_nu,l2,h_half,energy_E,strip_nu_hat,omega1_f01,omega3_f01,flags"
    );
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    for key in ["name", "pass", "measured", "bound", "tolerance"] {
        assert!(verdict.get(key).is_some(), "verdict lacks {key}");
    }
    let echoed = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echoed.contains("cfl_c = 0.25"));
    assert!(echoed.contains("a_mu = 0.5"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "model=2d\nn=32\na_mu=1.5\na_rho=1\n");
    let (code, text) = muskat(&["simulate", "--config", &bad]);
    assert_eq!(code, 3);
    assert!(text.contains("outside [-1,1]"));

    let unknown = write(dir.path(), "unknown.cfg", "model=2d\nn=32\na_mu=0\na_rho=1\nviscosity=3\n");
    assert_eq!(muskat(&["simulate", "--config", &unknown]).0, 3);
    assert_eq!(muskat(&["simulate", "--config", "/nonexistent/run.cfg"]).0, 3);
    assert_eq!(muskat(&["frobnicate"]).0, 3);

    // Shells decaying too slowly to meet the tail criterion: verdict fail.
    let stair = write(dir.path(), "stair.cfg", "n_shells=10000\ntail_start=100\n");
    let out = dir.path().join("stair");
    let (code, _) = muskat(&["staircase", "--config", &stair, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.join("staircase.csv").exists());
}

#[test]
fn sweep_members_write_disjoint_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.cfg", "model=2d\nn=32\na_mu=0\na_rho=1\nt_end=0.05\nsweep_a_mu=0,0.5\n");
    let out = dir.path().join("sweep");
    let (code, text) = muskat(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    for member in ["run_000", "run_001"] {
        assert!(out.join(member).join("trajectory.csv").exists());
    }
    let echoed = std::fs::read_to_string(out.join("run_001").join("config.txt")).unwrap();
    assert!(echoed.contains("a_mu = 0.5"));
}
