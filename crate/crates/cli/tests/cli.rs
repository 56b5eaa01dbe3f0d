use serde_json::Value;
use stablab::StableLaw;
use std::path::Path;
use std::process::{Command, Output};

fn stablab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablab")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON failure record")
}

#[test]
fn psi_prints_library_value_exactly() {
    let out = stablab(&["psi", "--alpha", "1.5", "--spectral", "uniform", "--d", "2", "--z", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let law = StableLaw::preset(1.5, "uniform", 2).unwrap();
    let e = law.psi(&[1.0, 0.0]).unwrap();
    assert_eq!(v["re"].as_f64().unwrap(), e.value.re);
    assert_eq!(v["im"].as_f64().unwrap(), e.value.im);
    assert_eq!(v["budget"].as_f64().unwrap(), e.budget);
}

#[test]
fn psi_accepts_negative_frequency() {
    let out = stablab(&["psi", "--spectral", "tilted", "--z", "-1,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let law = StableLaw::preset(1.5, "tilted", 2).unwrap();
    let e = law.psi(&[-1.0, 0.5]).unwrap();
    assert_eq!(stdout_json(&out)["im"].as_f64().unwrap(), e.value.im);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn rate_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let dir = tmp.path().join(name);
        let out = stablab(&[
            "rate", "--example", "pareto", "--alpha", "1.5", "--d", "2", "--n", "16..128", "--replicas", "3", "--seed", "7",
            "--threads", threads, "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let a = run("a", "1");
    let b = run("b", "2");
    for f in ["rate.csv", "rate.json", "rate.dat", "rate_fit.dat", "summary.txt"] {
        assert_eq!(read(&a, f), read(&b, f), "{f} differs");
    }
    let csv = String::from_utf8(read(&a, "rate.csv")).unwrap();
    assert!(csv.starts_with("n,replicate,distance,stderr,estimator,seed\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let rows = stablab::gclt::read_rate_table(csv.as_bytes()).unwrap();
    assert!(rows.iter().all(|r| r.distance > 0.0 && r.estimator == "exact"));

    let manifest: Value = serde_json::from_slice(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 7);
    let names: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    for f in ["config.toml", "resolved.toml", "rate.csv", "summary.json"] {
        assert!(names.contains(&f), "{f} missing from manifest");
    }
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = stablab(&["bound", "--example", "modified-tail", "--beta", "2", "--n", "100,1000,10000", "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = String::from_utf8(read(&first, "resolved.toml")).unwrap();
    let second = tmp.path().join("second");
    let cfg_path = tmp.path().join("cfg.toml");
    let text = resolved.replace(first.to_str().unwrap(), second.to_str().unwrap());
    std::fs::write(&cfg_path, &text).unwrap();
    let out = stablab(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&first, "bound.json"), read(&second, "bound.json"));
    assert_eq!(read(&second, "config.toml"), text.as_bytes(), "config copied verbatim");
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("psi.toml");
    std::fs::write(&cfg, "command = \"psi\"\n[law]\nalpha = 1.2\nspectral = \"atomic\"\n[psi]\nz = [0.0, 2.0]\n").unwrap();
    let out = stablab(&["psi", "--config", cfg.to_str().unwrap(), "--alpha", "1.8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let law = StableLaw::preset(1.8, "atomic", 2).unwrap();
    assert_eq!(v["alpha"].as_f64().unwrap(), 1.8);
    assert_eq!(v["re"].as_f64().unwrap(), law.psi(&[0.0, 2.0]).unwrap().value.re);
}

#[test]
fn stein_check_reports_gradient_bound() {
    let out = stablab(&[
        "stein-check", "--alpha", "1.5", "--h", "ramp", "--grid", "default", "--hessian-grid", "none", "--pairs", "2",
        "--pi-h-samples", "20000", "--time-samples", "1024", "--mc-per-time", "4", "--laplacian-samples", "32",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["grad_bound_ok"], Value::Bool(true));
    assert!(v["max_grad"].as_f64().unwrap() <= 1.5 * 1.02);
    assert!(v["max_grad_stderr"].is_number() && v["max_grad_budget"].is_number());
}

#[test]
fn invalid_parameters_exit_1() {
    let out = stablab(&["psi", "--alpha", "2.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["reason"], "invalid_parameter");

    let out = stablab(&["psi", "--z", "1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["reason"], "dimension_mismatch");

    let out = stablab(&["rate", "--example", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["reason"], "config");

    let out = stablab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"psi\"\n[law]\nalpah = 1.5\n").unwrap();
    let out = stablab(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(&cfg, "command = \"bound\"\n").unwrap();
    let out = stablab(&["psi", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    assert_eq!(stablab(&["--help"]).status.code(), Some(0));
    assert_eq!(stablab(&["--version"]).status.code(), Some(0));
}

#[test]
fn budget_failure_exits_2_with_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fail");
    let out = stablab(&[
        "stein-check", "--h", "squared-norm", "--grid", "2x1", "--hessian-grid", "none", "--pairs", "1",
        "--pi-h-samples", "2000", "--time-samples", "256", "--mc-per-time", "1", "--laplacian-samples", "4",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stderr_json(&out);
    assert_eq!(v["reason"], "divergent_integral");
    let f: Value = serde_json::from_slice(&read(&dir, "failure.json")).unwrap();
    assert_eq!(f["exit_code"], 2);

    let out = stablab(&[
        "stein-check", "--h", "ramp", "--time-truncation", "0.5", "--grid", "2x1", "--pairs", "1",
        "--pi-h-samples", "2000", "--time-samples", "256", "--mc-per-time", "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["reason"], "budget_exceeded");
}

#[test]
fn sample_writes_csv_with_provenance_header() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let out = stablab(&["sample", "--count", "500", "--spectral", "cantor", "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(read(&dir, "samples.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# alpha=1.5 spectral=cantor seed=3 method=direction-quadrature");
    assert_eq!(lines.next().unwrap(), "x1,x2");
    assert_eq!(lines.count(), 500);
    assert!(stdout_json(&out)["cf_check"]["tolerance"].is_number());
}

#[test]
fn density_reports_mass() {
    let out = stablab(&["density", "--points", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["mass_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn ordering_runs_from_rate_command() {
    let out = stablab(&["rate", "--example", "ordering", "--n", "16,32", "--replicas", "2", "--min-n", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["counted"], 4);
    assert!(v["fraction_stderr"].is_number());
}
