use std::path::Path;
use std::process::{Command, Output};

fn fuelqubo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuelqubo"))
        .args(args)
        .env_remove("FUELQUBO_RESULTS_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn layout_reports_region_tally() {
    let o = fuelqubo(&["layout", "--core", "core13"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("core13: 13 cells (border P 8, middle M 4, inner I 1)\n"));

    let o = fuelqubo(&["layout", "--core", "pwr193", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cells"], 193);

    let o = fuelqubo(&["layout", "--core", "core13", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 14);
}

#[test]
fn unknown_core_is_a_usage_error() {
    let o = fuelqubo(&["layout", "--core", "nope"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown core"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn missing_subcommand_or_flag_values() {
    assert_eq!(code(&fuelqubo(&[])), 2);
    assert_eq!(code(&fuelqubo(&["encode", "--core", "core13"])), 2);
    assert_eq!(code(&fuelqubo(&["layout", "--core", "core13", "--format", "xml"])), 2);
}

#[test]
fn encode_writes_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.qubo");
    let o = fuelqubo(&["encode", "--core", "core13", "--counts", "8,4,1", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("qubo 39 "));
    let model = fuelqubo::QuboModel::from_text(&text).unwrap();
    assert_eq!(model.n, 39);
    assert!(stderr(&o).contains("39 variables"));

    let o = fuelqubo(&["encode", "--core", "core13", "--counts", "8,4,1", "--ising"]);
    assert!(stdout(&o).starts_with("ising 39 "));
}

#[test]
fn symmetry_changes_the_term_structure() {
    let plain = fuelqubo(&["encode", "--core", "core13", "--counts", "8,4,1", "--format", "json"]);
    let rot = fuelqubo(&[
        "encode", "--core", "core13", "--counts", "8,4,1", "--rot-sym", "--format", "json",
    ]);
    let a: serde_json::Value = serde_json::from_str(&stdout(&plain)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&rot)).unwrap();
    assert_ne!(a["model"], b["model"]);
    assert!(stderr(&rot).contains("symmetry rotational"));
}

#[test]
fn counts_mismatch_fails() {
    let o = fuelqubo(&["encode", "--core", "core13", "--counts", "8,4,2"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sum to 14"));
}

#[test]
fn table1_counts_selector() {
    let o = fuelqubo(&["encode", "--core", "core37", "--counts", "table1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["counts"], "16,17,4");
    assert_eq!(v["n_vars"], 111);
}

#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pattern = dir.path().join("p.json");
    let o = fuelqubo(&[
        "solve", "--core", "core13", "--counts", "8,4,1", "--restarts", "4", "--format", "json",
        "--pattern-out", p(&pattern),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["energy"], 0.0);
    assert_eq!(v["feasible"], true);

    let o = fuelqubo(&["check", "--pattern", p(&pattern)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).ends_with("feasible\n"));

    // same pattern against counts it does not satisfy
    let o = fuelqubo(&["check", "--pattern", p(&pattern), "--counts", "7,5,1", "--format", "csv"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("counts,"));
}

#[test]
fn solve_energy_zero_iff_feasible() {
    for (counts, sym) in [("8,4,1", false), ("8,4,1", true), ("9,3,1", false), ("4,4,5", false)] {
        let mut args = vec!["solve", "--core", "core13", "--counts", counts, "--format", "json"];
        if sym {
            args.push("--rot-sym");
        }
        let o = fuelqubo(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let zero = v["energy"].as_f64().unwrap().abs() <= 1e-9;
        assert_eq!(zero, v["feasible"].as_bool().unwrap(), "{counts} sym={sym}");
    }
}

#[test]
fn check_missing_file_is_io_error() {
    let o = fuelqubo(&["check", "--pattern", "/nonexistent/p.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn outputs_are_reproducible() {
    let runs: Vec<String> = (0..2)
        .map(|_| {
            stdout(&fuelqubo(&[
                "solve", "--core", "core13", "--counts", "8,4,1", "--method", "simcim",
                "--restarts", "3", "--format", "json", "--threads", "2",
            ]))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(!runs[0].contains("wall"));
}

#[test]
fn sweep_resume_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sweep.jsonl");
    let args = ["sweep", "--core", "plus5", "--certify", "--log", p(&log), "--format", "csv"];
    let first = fuelqubo(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let lines = std::fs::read_to_string(&log).unwrap().lines().count();
    assert_eq!(lines, 36);
    let second = fuelqubo(&args);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 36);
    let grid = stdout(&first);
    assert!(grid.starts_with("twice\\once,0,1,2,3,4,5\n"));
    assert_eq!(grid.lines().count(), 7);

    let o = fuelqubo(&["cycles", "--log", p(&log)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("counting rotations"));
}

#[test]
fn cycles_from_triples() {
    let o = fuelqubo(&[
        "cycles", "--triples", "76,49,68;68,76,49;49,68,76;72,49,72;72,72,49", "--format", "csv",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "cycle,step,fresh,once,twice\n0,0,49,68,76\n0,1,76,49,68\n0,2,68,76,49\n");
    assert_eq!(code(&fuelqubo(&["cycles"])), 2);
}

#[test]
fn bench_table_rows_per_core_and_solver() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bench.jsonl");
    let o = fuelqubo(&[
        "bench", "--suite", "table1", "--solvers", "sa,simcim", "--max-core", "13", "--runs", "4",
        "--format", "csv", "--log", p(&log),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], fuelqubo::benchmark::CSV_HEADER);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("core13,sa,39,"));
    assert!(rows[2].starts_with("core13,simcim,39,"));
    assert_eq!(fuelqubo::benchmark::read_records(&log).unwrap().len(), 2);

    let o = fuelqubo(&["bench", "--core", "core13", "--solvers", "nope"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn results_dir_hosts_relative_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fuelqubo"))
        .args(["layout", "--core", "plus5", "--out", "maps/plus5.txt"])
        .env("FUELQUBO_RESULTS_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("maps/plus5.txt")).unwrap();
    assert!(text.contains("plus5: 5 cells"));
}
