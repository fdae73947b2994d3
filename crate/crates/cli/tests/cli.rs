//! End-to-end checks of the binary: exit codes, file outputs, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ccons")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ccons_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

#[test]
fn solve_ball_square_corners() {
    let dir = tmp_dir("solve");
    let cfg = write(
        &dir,
        "ball.json",
        r#"{"type": "ball", "points": [[1,1],[1,-1],[-1,1],[-1,-1]]}"#,
    );
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        dir.join("out").to_str().unwrap(),
        "--oracle",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/solution.json")).unwrap())
            .unwrap();
    let radius = solution["value"][0].as_f64().unwrap();
    assert!((radius - 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(solution["oracle_match"], true);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_requires_seed() {
    let dir = tmp_dir("noseed");
    let cfg = write(&dir, "ball.json", r#"{"type": "ball", "points": [[0,0]]}"#);
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_json_exits_one_with_diagnostic() {
    let dir = tmp_dir("badjson");
    let cfg = write(&dir, "bad.json", "{nope");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot parse"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn generated_lp_with_oracle_agreement() {
    let dir = tmp_dir("lp");
    let cfg = write(
        &dir,
        "lp.json",
        r#"{"type": "lp", "generate": {"model": "a", "n": 12, "d": 3}}"#,
    );
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        dir.join("out").to_str().unwrap(),
        "--oracle",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn consensus_outputs_trace_and_summary() {
    let dir = tmp_dir("consensus");
    let cfg = write(
        &dir,
        "consensus.json",
        r#"{
            "problem": {"type": "lp", "generate": {"model": "a", "n": 10, "d": 2}},
            "graph": {"model": "line"},
            "halting": "diameter_rule",
            "seed": 42
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "consensus",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["oracle_match"], true);
    assert_eq!(summary["memory_within_bounds"], true);
    assert!(summary["completion_round"].as_u64().is_some());
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("round,node,halted"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn montecarlo_outputs_plot_data_rows() {
    let dir = tmp_dir("mc");
    let cfg = write(
        &dir,
        "mc.json",
        r#"{
            "graph_model": "line",
            "lp_model": "a",
            "d": 2,
            "n_list": [5, 8, 11],
            "runs_per_point": 3,
            "seed": 7
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "montecarlo",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = std::fs::read_to_string(out_dir.join("sweep_line_a_d2.csv")).unwrap();
    assert_eq!(data.lines().count(), 1 + 3, "one row per n");
    assert!(data.starts_with("n,mean_completion,std,diameter,ratio,ci_low,ci_high"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn montecarlo_deterministic_across_job_counts() {
    let dir = tmp_dir("mcdet");
    let cfg = write(
        &dir,
        "mc.json",
        r#"{
            "graph_model": "rgg",
            "lp_model": "b",
            "d": 2,
            "n_list": [6, 9],
            "runs_per_point": 4,
            "seed": 19
        }"#,
    );
    let mut outputs = Vec::new();
    for (jobs, sub) in [("1", "a"), ("3", "b")] {
        let out_dir = dir.join(sub);
        let out = run(&[
            "montecarlo",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read_to_string(out_dir.join("sweep_rgg_b_d2.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn localize_and_formation_run_clean() {
    let dir = tmp_dir("apps");
    let loc = write(
        &dir,
        "loc.json",
        r#"{
            "n_sensors": 5,
            "graph": {"model": "line"},
            "steps": 15,
            "v_max": 0.1,
            "noise_width": 1.0,
            "bbox": {"x_min": -6.0, "x_max": 6.0, "y_min": -6.0, "y_max": 6.0},
            "memory": 2,
            "sense_every": 2,
            "seed": 3
        }"#,
    );
    let out = run(&[
        "localize",
        "--config",
        loc.to_str().unwrap(),
        "--out",
        dir.join("loc_out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("loc_out/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["containment_violations"], 0);

    let form = write(
        &dir,
        "form.json",
        r#"{
            "shape": "point",
            "positions": [[0.0, 0.0], [0.8, 0.0]],
            "r_cmm": 1.0,
            "r_ctr": 0.01,
            "seed": 2
        }"#,
    );
    let out = run(&[
        "formation",
        "--config",
        form.to_str().unwrap(),
        "--out",
        dir.join("form_out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("form_out/summary.json")).unwrap(),
    )
    .unwrap();
    // both robots settle within the shape tolerance of the midpoint
    for d in summary["final_shape_distances"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() <= 0.1);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_passes_and_is_deterministic() {
    let a = run(&["check"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["check"]);
    assert_eq!(a.stdout, b.stdout, "seed-pinned suites print identically");
}

#[test]
fn check_with_broken_order_fails_locality() {
    let out = run(&["check", "--broken-lex-order"]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[FAIL] locality"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["solve", "--wat"]);
    assert_eq!(out.status.code(), Some(1));
}
