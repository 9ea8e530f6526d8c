use std::path::Path;
use std::process::{Command, Output};

use slcurv_core::grid::{write_graph_csv, GraphMeta};
use slcurv_core::hgeom::umbilic_cap;
use slcurv_core::{DomainSpec, GraphFn, Grid};

fn slcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slcurv")).args(args).env_remove("SLCURV_WORKERS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn write_graph(dir: &Path, name: &str, f: &GraphFn, rhat: f64) -> String {
    let p = path(dir, name);
    std::fs::write(&p, write_graph_csv(&GraphMeta { n: 2, theta: 2.0, rhat }, f)).unwrap();
    p
}

fn table(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn solve(dir: &Path, tag: &str, extra: &[&str]) -> (Output, String, String) {
    let (out, rep) = (path(dir, &format!("{tag}.csv")), path(dir, &format!("{tag}.json")));
    let mut args = vec!["solve", "--n", "2", "--theta", "2.0", "--domain", "disk:1.0", "--grid", "16x32"];
    args.extend_from_slice(&["--out", &out, "--report", &rep]);
    args.extend_from_slice(extra);
    (slcurv(&args), out, rep)
}

#[test]
fn solve_writes_graph_report_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let obj = path(dir.path(), "sol.obj");
    let (o, out, rep) = solve(dir.path(), "sol", &["--rhat", "0.6", "--obj", &obj]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["runtime_s"].is_null());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("# slcurv-graph v1\n"));
    assert!(std::fs::read_to_string(obj).unwrap().lines().any(|l| l.starts_with("f ")));
}

#[test]
fn snapped_edge_angle_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sol.csv");
    let rep = path(dir.path(), "rep.json");
    let o = slcurv(&[
        "solve", "--n", "2", "--theta", "1.5707963", "--rhat", "0.6", "--domain", "disk:1.0", "--grid", "32x64",
        "--out", &out, "--report", &rep,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    let last = report["levels"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["theta"].as_f64().unwrap(), std::f64::consts::FRAC_PI_2);
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        &["--rhat", "0"][..],
        &["--rhat", "1.5"],
        &["--rhat", "0.5", "--r", "0.5"],
        &["--rhat", "0.5", "--max-newton", "0"],
    ] {
        let (o, _, _) = solve(dir.path(), "bad", extra);
        assert_eq!(code(&o), 2, "{extra:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().filter(|l| l.starts_with("slcurv: ")).count(), 1, "{err}");
    }
    let o = slcurv(&["solve", "--theta", "2.0", "--rhat", "0.5", "--grid", "4x8", "--out", "a", "--report", "b"]);
    assert_eq!(code(&o), 2);
    let o = slcurv(&["solve", "--theta", "2.0", "--rhat", "0.5", "--domain", "cube:1", "--out", "a", "--report", "b"]);
    assert_eq!(code(&o), 2);
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"thetta": 2.0}"#).unwrap();
    assert_eq!(code(&slcurv(&["props", "--config", &cfg])), 2);
}

#[test]
fn missing_files_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let nowhere = path(dir.path(), "missing/sol.csv");
    let rep = path(dir.path(), "rep.json");
    let o = slcurv(&["solve", "--theta", "2.0", "--rhat", "0.5", "--grid", "16x32", "--out", &nowhere, "--report", &rep]);
    assert_eq!(code(&o), 4);
    let o = slcurv(&["curvature", "--graph", &path(dir.path(), "absent.csv")]);
    assert_eq!(code(&o), 4);
    let o = slcurv(&["props", "--config", &path(dir.path(), "absent.json")]);
    assert_eq!(code(&o), 4);
}

#[test]
fn stalled_continuation_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _, rep) = solve(dir.path(), "stall", &["--rhat", "0.6", "--max-newton", "1", "--tol", "1e-14"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
    assert!(report["levels"].as_array().unwrap().iter().any(|l| !l["failure"].is_null()));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"n": 2, "theta": 2.0, "rhat": 0.3, "grid": "16x32", "solver": {"tol": 1e-9}}"#).unwrap();
    let (out, rep) = (path(dir.path(), "a.csv"), path(dir.path(), "a.json"));
    let o = slcurv(&["solve", "--config", &cfg, "--rhat", "0.5", "--out", &out, "--report", &rep]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    assert_eq!(report["grid"]["ns"], 16);
    let last = report["levels"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["rhat"].as_f64().unwrap(), 0.5);
}

#[test]
fn unscaled_level_is_converted() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _, rep) = solve(dir.path(), "r", &["--r", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rhat"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(rep).unwrap()).unwrap();
    let last = report["levels"].as_array().unwrap().last().unwrap().clone();
    assert!((last["rhat"].as_f64().unwrap() - 0.5 * 1f64.tan()).abs() < 1e-15);
}

#[test]
fn curvature_of_a_cap_is_its_level() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(DomainSpec::disk(1.0).unwrap(), 32, 64).unwrap();
    let file = write_graph(dir.path(), "cap.csv", &umbilic_cap(0.6, &g).unwrap(), 0.6);
    let o = slcurv(&["curvature", "--graph", &file]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("j,k,lambda_min,lambda_max,H,rhat_theta,residual,admissible\n"));
    let rows = table(&text);
    assert_eq!(rows.len(), g.n_interior());
    let tol = 10.0 * g.h() * g.h();
    for row in &rows {
        assert!((row[5].parse::<f64>().unwrap() - 0.6).abs() <= tol, "{row:?}");
        assert_eq!(row[7], "true");
    }
}

#[test]
fn curvature_of_a_flat_graph_is_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(DomainSpec::disk(1.0).unwrap(), 16, 32).unwrap();
    let file = write_graph(dir.path(), "flat.csv", &GraphFn::zeros(g), 0.5);
    let out = path(dir.path(), "table.csv");
    let o = slcurv(&["curvature", "--graph", &file, "--out", &out]);
    assert_eq!(code(&o), 0);
    let rows = table(&std::fs::read_to_string(out).unwrap());
    assert!(rows.iter().all(|r| r[7] == "false" && r[5].is_empty()));
}

#[test]
fn curvature_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(DomainSpec::disk(1.0).unwrap(), 16, 32).unwrap();
    let file = write_graph(dir.path(), "cap.csv", &umbilic_cap(0.5, &g).unwrap(), 0.5);
    let text = std::fs::read_to_string(&file).unwrap();
    std::fs::write(&file, text.replacen("v1", "v2", 1)).unwrap();
    let o = slcurv(&["curvature", "--graph", &file]);
    assert_eq!(code(&o), 2);
    let broken = path(dir.path(), "broken.csv");
    let mut lines: Vec<&str> = text.lines().collect();
    lines[10] = "0,7,oops,0,0";
    std::fs::write(&broken, lines.join("\n")).unwrap();
    let o = slcurv(&["curvature", "--graph", &broken]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 11"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn props_pass_and_fail_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = slcurv(&["props", "--samples", "500", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["pass"], true);
    let out = path(dir.path(), "props.json");
    let o = slcurv(&["props", "--samples", "500", "--seed", "7", "--tol", "1e-30", "--out", &out]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slack"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let failing = summary["suites"].as_array().unwrap().iter().find(|s| s["pass"] == false).unwrap().clone();
    assert!(!failing["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn bad_worker_counts_are_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_slcurv"))
        .args(["props", "--samples", "100"])
        .env("SLCURV_WORKERS", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&slcurv(&["--workers", "0", "props", "--samples", "100"])), 2);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "3"] {
        let (o, out, rep) = solve(dir.path(), &format!("w{workers}"), &["--rhat", "0.5", "--workers", workers]);
        assert_eq!(code(&o), 0);
        files.push((std::fs::read(out).unwrap(), std::fs::read(rep).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    let a = slcurv(&["--workers", "1", "props", "--samples", "300"]);
    let b = slcurv(&["--workers", "4", "props", "--samples", "300"]);
    assert_eq!(a.stdout, b.stdout);
}
