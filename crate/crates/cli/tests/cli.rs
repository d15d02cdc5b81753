use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vmreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmreg")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const SIM: &str = r#"
[simulation]
epsilon = 0.2
dt = 0.05
t_end = 0.2
n_particles = 4
seed = 3

[initial]
kind = "cloud"
x_radius = 0.5
xi_radius = 0.5
"#;

fn setup(dir: &Path) -> (PathBuf, PathBuf) {
    let k = dir.join("k.bin");
    let out = vmreg(&["kernel-build", "--epsilon", "0.2", "--tmax", "0.2", "--out", s(&k)]);
    let side = json(&out);
    assert_eq!(side["epsilon"], 0.2);
    let cfg = dir.join("sim.toml");
    std::fs::write(&cfg, SIM).unwrap();
    (k, cfg)
}

#[test]
fn simulate_then_measure_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (k, cfg) = setup(dir.path());
    let h = dir.path().join("h.bin");
    let csv = dir.path().join("h.csv");
    let out = vmreg(&["simulate", "--config", s(&cfg), "--kernel", s(&k), "--out", s(&h), "--csv", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(csv.exists());

    // a history against itself
    let d = json(&vmreg(&["mkr", "--mu", s(&h), "--nu", s(&h), "--mode", "exact"]));
    assert_eq!(d["distance"], 0.0);
    assert_eq!(d["atoms"], 8);
    assert_eq!(d["mode"], "exact");
    let d0 = json(&vmreg(&["mkr", "--mu", s(&h), "--nu", s(&h), "--t", "0.0"]));
    assert_eq!(d0["distance"], 0.0);

    let g = dir.path().join("g.vmfg");
    let out = vmreg(&[
        "field-dump", "--history", s(&h), "--kernel", s(&k), "--t", "0.2", "--grid", "0.1,0.4", "--out", s(&g),
    ]);
    let info = json(&out);
    assert_eq!(info["n"], 8);
    assert!(g.exists());
    for a in ["x", "y", "z"] {
        assert!(dir.path().join(format!("g.vmfg.{a}.csv")).exists());
    }
}

#[test]
fn mkr_on_csv_ensembles() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    std::fs::write(&a, "0,0,0,0,0,0\n1,0,0,0,0,0\n").unwrap();
    std::fs::write(&b, "0.2,0,0,0,0,0\n0.9,0,0,0,0,0\n").unwrap();
    let d = json(&vmreg(&["mkr", "--mu", s(&a), "--nu", s(&b), "--mode", "exact"]));
    assert!((d["distance"].as_f64().unwrap() - 0.15).abs() < 1e-15);
    assert_eq!(d["atoms"], 4);
    assert!(d["gap"].as_f64().unwrap().abs() < 1e-15);
    let e = json(&vmreg(&["mkr", "--mu", s(&a), "--nu", s(&b), "--mode", "entropic"]));
    assert_eq!(e["mode"], "entropic");
    assert!(e["distance"].as_f64().unwrap() >= 0.15 - 1e-9);
    let over = vmreg(&["mkr", "--mu", s(&a), "--nu", s(&b), "--budget", "3"]);
    assert_eq!(over.status.code(), Some(2));
}

#[test]
fn meanfield_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (k, cfg) = setup(dir.path());
    let (f, p) = (dir.path().join("f.bin"), dir.path().join("p.bin"));
    let out = vmreg(&["meanfield", "--mode", "flow", "--config", s(&cfg), "--out", s(&f), "--kernel", s(&k)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&vmreg(&["meanfield", "--mode", "picard", "--config", s(&cfg), "--out", s(&p)]));
    assert_eq!(rep["converged"], true);
    let d = json(&vmreg(&["mkr", "--mu", s(&f), "--nu", s(&p)]));
    assert!(d["distance"].as_f64().unwrap() < 1e-4);
    let stuck = vmreg(&[
        "meanfield", "--mode", "picard", "--config", s(&cfg), "--out", s(&p), "--max-iter", "1", "--tol", "1e-15",
    ]);
    assert_eq!(stuck.status.code(), Some(2));
}

const EQUIVALENCE: &str = r#"
n_list = [1, 4, 8]
[scales]
t_end = 0.2
exec = "sequential"
"#;

fn manifest_with_slope(dir: &Path, lo: f64, hi: f64) -> PathBuf {
    let base = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/acceptance.toml")).unwrap();
    let text = base
        .replace("slope_min = -1.3", &format!("slope_min = {lo:?}"))
        .replace("slope_max = -0.7", &format!("slope_max = {hi:?}"));
    let p = dir.join("m.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn experiment_exit_code_follows_the_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eq.toml");
    std::fs::write(&cfg, EQUIVALENCE).unwrap();
    let run = |m: &Path, out: &Path| {
        vmreg(&["experiment", "equivalence", "--config", s(&cfg), "--out", s(out), "--manifest", s(m)])
    };
    let wide = manifest_with_slope(dir.path(), -100.0, 100.0);
    let out_dir = dir.path().join("pass");
    let ok = run(&wide, &out_dir);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("PASS equivalence.slope"));
    assert!(stdout.contains("N = 1 excluded"));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["experiment"], "equivalence");
    assert_eq!(rep["passed"], true);
    assert!(rep.get("timings").is_none());
    assert!(out_dir.join("timings.json").exists());
    let csv = std::fs::read_to_string(out_dir.join("errors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    // a second run reproduces the report byte for byte
    let again = dir.path().join("again");
    assert!(run(&wide, &again).status.success());
    assert_eq!(
        std::fs::read(out_dir.join("report.json")).unwrap(),
        std::fs::read(again.join("report.json")).unwrap()
    );

    let narrow = manifest_with_slope(dir.path(), 10.0, 11.0);
    let bad = run(&narrow, &dir.path().join("fail"));
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL equivalence.slope"));
}

#[test]
fn bad_input_exits_with_two() {
    let out = vmreg(&["field-dump", "--history", "/nonexistent", "--kernel", "/x", "--t", "0", "--grid", "0.1", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
    let out = vmreg(&["experiment", "nope", "--config", "a", "--out", "b"]);
    assert!(!out.status.success());
}
