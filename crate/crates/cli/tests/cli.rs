use std::path::Path;
use std::process::{Command, Output};

use pcp_core::harness::{phase_csv, run_phase_grid, PhaseGridSpec, PhaseMode};
use pcp_core::io;

fn pcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcp")).args(args).output().expect("run pcp")
}

fn synth(dir: &Path, seed: &str) {
    let out = pcp(&[
        "synth", "--n1", "30", "--n2", "24", "--rank", "2", "--rho", "0.05", "--sign-model", "random",
        "--seed", seed, "--out-dir", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "5");
    synth(&b, "5");
    for f in ["l0.mat", "s0.mat", "m.mat", "omega.mask", "spec.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let spec = json(&a.join("spec.json"));
    assert_eq!(spec["seed"]["seed"], 5);
    assert_eq!(spec["sign_model"], "random");
}

#[test]
fn decompose_report_matches_output_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, "1");
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let out = pcp(&[
        "decompose", "--input", &p("m.mat"), "--lambda", "auto", "--tol", "1e-7", "--max-iters", "1000",
        "--out-l", &p("l.mat"), "--out-s", &p("s.mat"), "--report", &p("report.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let m = io::read_matrix(d.join("m.mat")).unwrap();
    let l = io::read_matrix(d.join("l.mat")).unwrap();
    let s = io::read_matrix(d.join("s.mat")).unwrap();
    let residual = m.sub(&l).sub(&s).frobenius_norm() / m.frobenius_norm();
    let rep = json(&d.join("report.json"));
    let keys = [
        "n1", "n2", "lambda", "beta", "iterations", "svd_count", "final_residual", "rank_l", "card_s",
        "converged", "wall_time_ms",
    ];
    for k in keys {
        assert!(rep.get(k).is_some(), "missing {k}");
    }
    assert_eq!(rep.as_object().unwrap().len(), keys.len());
    assert!((rep["final_residual"].as_f64().unwrap() - residual).abs() <= 1e-12);
    assert_eq!(rep["converged"], true);
    assert_eq!(rep["rank_l"], 2);

    let l0 = io::read_matrix(d.join("l0.mat")).unwrap();
    assert!(l.sub(&l0).frobenius_norm() <= 1e-5 * l0.frobenius_norm());
}

#[test]
fn iteration_cap_exits_with_nonconvergence() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, "2");
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let out = pcp(&[
        "decompose", "--input", &p("m.mat"), "--max-iters", "2", "--out-l", &p("l.mat"), "--out-s",
        &p("s.mat"), "--report", &p("r.json"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&d.join("r.json"))["converged"], false);
    assert!(d.join("l.mat").exists());
}

#[test]
fn completion_and_mc_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, "3");
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let obs = pcp_core::rng::gen_bernoulli_mask(pcp_core::RngState::new(3), 30, 24, 0.9).unwrap();
    io::write_mask(d.join("obs.mask"), &obs).unwrap();

    let out = pcp(&[
        "complete", "--input", &p("m.mat"), "--mask", &p("obs.mask"), "--out-l", &p("l.mat"), "--out-s",
        &p("s.mat"), "--report", &p("c.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&d.join("c.json"))["lambda"].is_f64());

    let out = pcp(&[
        "mc", "--input", &p("l0.mat"), "--mask", &p("obs.mask"), "--out-l", &p("lm.mat"), "--report",
        &p("mc.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&d.join("mc.json"))["lambda"].is_null());
}

#[test]
fn phase_single_cell_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("phase.csv");
    let out = pcp(&[
        "phase", "--n", "30", "--r-list", "2", "--rho-list", "0.05", "--trials", "3", "--mode", "pcp-random",
        "--seed", "17", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut spec = PhaseGridSpec::new(30, vec![2], vec![0.05], PhaseMode::PcpRandom, 17);
    spec.trials = 3;
    let expected = phase_csv(&run_phase_grid(&spec).unwrap().trials);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), expected);
}

#[test]
fn certify_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("cert.json");
    let out = pcp(&["certify", "--n", "30", "--rank", "1", "--rho", "0.05", "--seed", "4", "--report", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&path);
    assert_eq!(rep["n"], 30);
    assert!(rep["pass"].is_boolean());
    assert!(rep["ws_identity_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn bench_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bench.csv");
    let out = pcp(&["bench", "--preset", "table1a_small", "--sizes", "100", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("preset,n,rank_l0,card_s0,rank_l_hat,card_s_hat,rel_error,svd_count,time_s")
    );
    assert!(lines.next().unwrap().starts_with("table1a_small,100,5,500,5,500,"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pcp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pcp(&["decompose", "--bogus"]).status.code(), Some(1));
    assert_eq!(pcp(&["certify", "--n", "10"]).status.code(), Some(1));
    let out = pcp(&["decompose", "--input", "x", "--lambda", "zero", "--out-l", "a", "--out-s", "b", "--report", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(pcp(&["phase", "--r-list", "2", "--out", "x.csv"]).status.code(), Some(1));
}

#[test]
fn unreadable_input_is_reported() {
    let out = pcp(&["decompose", "--input", "/nonexistent/m.mat", "--out-l", "a", "--out-s", "b", "--report", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/m.mat"));
}
