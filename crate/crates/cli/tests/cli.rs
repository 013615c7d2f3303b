use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn stabkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabkit"))
        .args(args)
        .env_remove("STABKIT_MEMO_CAP")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen(dir: &Path, family: &str, n: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("{family}-{n}-{seed:03}.json"));
    let out = stabkit(&[
        "gen",
        "--family",
        family,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_byte_identical() {
    let a = stabkit(&["gen", "--family", "squares", "--n", "5", "--seed", "7"]);
    let b = stabkit(&["gen", "--family", "squares", "--n", "5", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("\"schema_version\": \"1\""));
}

#[test]
fn solve_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = gen(dir.path(), "uniform", 3, 1);
    let sol = dir.path().join("sol.json");
    let out = stabkit(&["solve", "--instance", s(&inst), "--solver", "exact", "--out", s(&sol)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = stabkit(&["verify", "--instance", s(&inst), "--solution", s(&sol)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("feasible"));

    let bench = stabkit(&["bench", "--instance", s(&inst), "--solvers", "exact", "--no-timing"]);
    assert_eq!(code(&bench), 0);
    assert!(String::from_utf8_lossy(&bench.stdout).contains(",exact,") );
    assert!(String::from_utf8_lossy(&bench.stdout).contains(",1.000000,0"));
}

#[test]
fn infeasible_solution_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let inst = gen(dir.path(), "uniform", 4, 2);
    let sol = dir.path().join("empty.json");
    fs::write(&sol, r#"{"solver_tag": "hand", "cost": 0, "segments": []}"#).unwrap();
    let out = stabkit(&["verify", "--instance", s(&inst), "--solution", s(&sol)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("infeasible"));
}

#[test]
fn bad_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"schema_version\": \"1\",\n  \"rects\": [\n").unwrap();
    let out = stabkit(&["solve", "--instance", s(&broken), "--solver", "greedy"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line "));

    let wide = gen(dir.path(), "wide", 3, 1);
    let out = stabkit(&["solve", "--instance", s(&wide), "--solver", "dp"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wider than it is tall"));

    let out = stabkit(&["solve", "--instance", s(&wide), "--solver", "simplex"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn memo_cap_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let inst = gen(dir.path(), "tall", 6, 3);
    let out = Command::new(env!("CARGO_BIN_EXE_stabkit"))
        .args(["solve", "--instance", s(&inst), "--solver", "dp"])
        .env("STABKIT_MEMO_CAP", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity of 1"));
}

#[test]
fn render_draws_every_rect_and_segment() {
    let dir = TempDir::new().unwrap();
    let inst = gen(dir.path(), "uniform", 6, 4);
    let sol = dir.path().join("sol.json");
    assert_eq!(code(&stabkit(&["solve", "--instance", s(&inst), "--solver", "greedy", "--out", s(&sol)])), 0);
    let out = stabkit(&["render", "--instance", s(&inst), "--solution", s(&sol)]);
    assert_eq!(code(&out), 0);
    let svg = String::from_utf8(out.stdout).unwrap();
    let segments = fs::read_to_string(&sol).unwrap().matches("\"orientation\"").count();
    assert_eq!(svg.matches("<rect class=\"rect\"").count(), 6);
    assert_eq!(svg.matches("<line class=\"segment\"").count(), segments);
}

#[test]
fn compare_dp_against_greedy() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        gen(dir.path(), "tall", 8, seed);
    }
    let report = dir.path().join("report.json");
    let out = stabkit(&[
        "compare",
        "--instance",
        s(dir.path()),
        "--solvers",
        "greedy,dp",
        "--no-timing",
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0]["solver_tag"], "dp");
        assert_eq!(pair[1]["solver_tag"], "greedy");
        assert!(pair[0]["feasible"].as_bool().unwrap());
        assert!(pair[0]["cost_units"].as_i64() <= pair[1]["cost_units"].as_i64());
    }
}

#[test]
fn bench_is_stable_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    for (family, seed) in [("squares", 1), ("tall", 2), ("laminar", 3)] {
        gen(dir.path(), family, 7, seed);
    }
    let run = |threads: &str| {
        let out = stabkit(&[
            "--threads",
            threads,
            "bench",
            "--instance",
            s(dir.path()),
            "--solvers",
            "greedy,dp2eps,stabbing,exact",
            "--no-timing",
        ]);
        assert_eq!(code(&out), 0);
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("instance,solver,cost,ratio_vs_exact,wall_ms\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 4);
}
