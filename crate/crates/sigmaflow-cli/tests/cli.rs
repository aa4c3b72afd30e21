use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn sigmaflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigmaflow"))
        .args(args)
        .env_remove("SIGMAFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const SMALL_FLOW: &str = r#"
kind = "flow"
seed = 3
[grid]
n = 16
[target]
type = "flat_torus"
[init]
perturbation = 0.05
[flow]
tol = 1e-6
"#;

#[test]
fn minimal_flow_reports_monotone_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_FLOW);
    let out = tmp.path().join("out");
    let o = sigmaflow(&["flow", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["tool"], "sigmaflow");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["result"]["monotone"], true);
    assert_eq!(r["result"]["converged"], true);
    assert!(out.join("field.csv").exists() && out.join("energy.csv").exists());
}

#[test]
fn same_config_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_FLOW);
    let dirs: Vec<PathBuf> = (0..2).map(|k| tmp.path().join(format!("out{k}"))).collect();
    for d in &dirs {
        assert!(
            sigmaflow(&["flow", "--config", &cfg, "--out", d.to_str().unwrap()])
                .status
                .success()
        );
    }
    for name in ["report.json", "field.csv", "energy.csv"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("teich_scan.toml");
    let mut reports = vec![];
    for threads in ["1", "3"] {
        let d = tmp.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_sigmaflow"))
            .args([
                "teich-scan",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                d.to_str().unwrap(),
            ])
            .env("SIGMAFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(std::fs::read(d.join("report.json")).unwrap());
    }
    assert!(reports[0] == reports[1]);
}

#[test]
fn nonpositive_modulus_exits_1_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[grid]\nn = 16\ntau = [0.0, -0.5]\n");
    let out = tmp.path().join("out");
    let o = sigmaflow(&["flow", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.tau"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[flow]\ntolerance = 1e-6\n");
    let o = sigmaflow(&[
        "flow",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance"));
}

#[test]
fn kind_mismatch_exits_1() {
    let cfg = configs().join("super_suite.toml");
    let tmp = tempfile::tempdir().unwrap();
    let o = sigmaflow(&[
        "flow",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));
}

#[test]
fn missing_config_and_bad_usage_exit_1() {
    assert_eq!(
        sigmaflow(&["flow", "--config", "/nonexistent/x.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sigmaflow(&["flow"]).status.code(), Some(1));
    assert_eq!(sigmaflow(&["bogus"]).status.code(), Some(1));
}

#[test]
fn bad_thread_variable_exits_1() {
    let o = Command::new(env!("CARGO_BIN_EXE_sigmaflow"))
        .args([
            "super-check",
            "--config",
            configs().join("super_suite.toml").to_str().unwrap(),
        ])
        .env("SIGMAFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SIGMAFLOW_THREADS"));
}

#[test]
fn non_convergence_exits_2_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SMALL_FLOW.replace("tol = 1e-6", "tol = 1e-6\nmax_steps = 5"),
    );
    let out = tmp.path().join("out");
    let o = sigmaflow(&["flow", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["result"]["converged"], false);
}

#[test]
fn hopf_reads_a_flow_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_FLOW);
    let flow_out = tmp.path().join("flow");
    assert!(sigmaflow(&[
        "flow",
        "--config",
        &cfg,
        "--out",
        flow_out.to_str().unwrap()
    ])
    .status
    .success());
    let hcfg = tmp.path().join("hopf.toml");
    std::fs::write(
        &hcfg,
        "[target]\ntype = \"flat_torus\"\n[hopf]\nflow = false\n",
    )
    .unwrap();
    let field = flow_out.join("field.csv");
    let out = tmp.path().join("hopf");
    let o = sigmaflow(&[
        "hopf",
        "--config",
        hcfg.to_str().unwrap(),
        "--in",
        field.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["levels"][0]["n"], 16);
    assert!(r["result"]["levels"][0]["tension_sup"].as_f64().unwrap() < 1e-6);
}

#[test]
fn super_check_reports_parse_errors() {
    let o = sigmaflow(&[
        "super-check",
        "--config",
        configs().join("super_suite.toml").to_str().unwrap(),
        "--expr",
        "(+ th",
        "--out",
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse"));
}
