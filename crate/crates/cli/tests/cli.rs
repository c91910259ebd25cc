//! End-to-end checks of the `dg` binary: artifacts, determinism, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn dg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dg"))
}

fn run(args: &[&str]) -> Output {
    dg().args(args).output().expect("spawn dg")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("read {:?}: {e}", path.as_ref()))
}

#[test]
fn gen_data_writes_collection_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coll");
    let res = run(&[
        "gen-data", "--dataset", "synthetic", "--tasks", "100", "--n", "100", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert_ok(&res);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("100 tasks"), "summary line: {stdout}");
    assert!(stdout.contains("10 classes"));
    // 100 task CSVs plus the two manifests
    let files: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(files.iter().filter(|f| f.ends_with(".csv")).count(), 100);
    assert!(files.contains(&"manifest.json".to_string()));
    assert!(files.contains(&"run_manifest.json".to_string()));
}

#[test]
fn gen_data_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert_ok(&run(&[
            "gen-data", "--tasks", "6", "--n", "9", "--seed", "42", "--out", out.to_str().unwrap(),
        ]));
    }
    for name in ["manifest.json", "task_0000.csv", "task_0005.csv"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name} differs");
    }
}

#[test]
fn gen_data_rerun_from_manifest_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_ok(&run(&["gen-data", "--tasks", "4", "--n", "6", "--seed", "9", "--out", first.to_str().unwrap()]));
    // the emitted manifest names the resolved flags; replaying it (with a
    // fresh --out) must regenerate identical task files
    let second = dir.path().join("second");
    assert_ok(&run(&[
        "gen-data",
        "--config",
        first.join("run_manifest.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]));
    assert_eq!(read(first.join("task_0003.csv")), read(second.join("task_0003.csv")));
}

#[test]
fn usage_errors_exit_one() {
    let res = run(&["gen-data", "--tasks", "0", "--out", "/tmp/unused"]);
    assert_eq!(res.status.code(), Some(1));
    let res = run(&["gen-data", "--dataset", "nope", "--out", "/tmp/unused"]);
    assert_eq!(res.status.code(), Some(1));
    let res = run(&["bound", "--mc", "--delta", "2.0", "--out", "/tmp/unused.csv"]);
    assert_eq!(res.status.code(), Some(1));
    let res = run(&["no-such-command"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y.csv");
    let res = run(&["bench", "--dataset", "generic", "--data", "/no/such/dir", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["eval", "--model", "/no/model.dgm", "--data", "/no/dir", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn train_eval_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let coll = dir.path().join("coll");
    assert_ok(&run(&["gen-data", "--tasks", "8", "--n", "15", "--seed", "3", "--out", coll.to_str().unwrap()]));
    let model = dir.path().join("model.dgm");
    assert_ok(&run(&[
        "train", "--data", coll.to_str().unwrap(), "--d", "48", "--max-iters", "50",
        "--seed", "1", "--out", model.to_str().unwrap(),
    ]));
    assert!(model.is_file());
    assert!(dir.path().join("model.dgm.manifest.json").is_file());
    let report = dir.path().join("report.csv");
    let res = run(&[
        "eval", "--model", model.to_str().unwrap(), "--data", coll.to_str().unwrap(),
        "--out", report.to_str().unwrap(),
    ]);
    assert_ok(&res);
    let csv = String::from_utf8(read(&report)).unwrap();
    assert!(csv.starts_with("task_id,error_pct\n"));
    assert_eq!(csv.lines().count(), 9); // header + 8 tasks

    // pooling method trains and evaluates through the same container
    let pmodel = dir.path().join("pool.dgm");
    assert_ok(&run(&[
        "train", "--data", coll.to_str().unwrap(), "--method", "pooling", "--d", "48",
        "--max-iters", "50", "--seed", "1", "--out", pmodel.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "eval", "--model", pmodel.to_str().unwrap(), "--data", coll.to_str().unwrap(),
        "--out", dir.path().join("p.csv").to_str().unwrap(),
    ]));
}

#[test]
fn cv_emits_full_table() {
    let dir = tempfile::tempdir().unwrap();
    let coll = dir.path().join("coll");
    assert_ok(&run(&["gen-data", "--tasks", "6", "--n", "12", "--seed", "5", "--out", coll.to_str().unwrap()]));
    let out = dir.path().join("cv.csv");
    let res = run(&[
        "cv", "--data", coll.to_str().unwrap(), "--folds", "3", "--d", "24",
        "--sx-mults", "0.2,1", "--sk-mults", "0.3", "--lambdas", "1e-3,1e-1",
        "--max-iters", "25", "--seed", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_ok(&res);
    let csv = String::from_utf8(read(&out)).unwrap();
    assert_eq!(csv.lines().count(), 5); // header + 2×1×1×2 cells
    assert!(String::from_utf8_lossy(&res.stdout).contains("best cell"));
}

#[test]
fn bench_csv_structure_and_config_file_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let config = dir.path().join("bench.json");
    std::fs::write(
        &config,
        r#"{"dataset":"synthetic","tasks":9,"n":12,"train_tasks":7,"reps":2,"d":24,"max_iters":25,"seed":11}"#,
    )
    .unwrap();
    // --reps 1 on the command line overrides the file's 2
    let res = run(&["bench", "--config", config.to_str().unwrap(), "--reps", "1", "--out", out.to_str().unwrap()]);
    assert_ok(&res);
    let csv = String::from_utf8(read(&out)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3); // header + proposed + pooling
    assert!(lines[1].starts_with("synthetic,proposed,0,"));
    assert!(lines[2].starts_with("synthetic,pooling,0,"));
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(dir.path().join("bench.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["reps"], 1);
    assert_eq!(manifest["tasks"], 9);
    assert_eq!(manifest["rep_seeds"].as_array().unwrap().len(), 1);
}

#[test]
fn bound_sweep_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let res = run(&["bound", "--sweep", "c", "--values", "2,10,100", "--p", "2", "--out", out.to_str().unwrap()]);
    assert_ok(&res);
    let csv = String::from_utf8(read(&out)).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + 3 rows
    assert!(csv.starts_with("param,value,term_one,term_two,bound_rhs\n"));
}

#[test]
fn bound_mc_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let res = run(&[
        "bound", "--mc", "--n-list", "64,128", "--trials", "120", "--dim", "2",
        "--sigma", "0.8", "--seed", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_ok(&res);
    let csv = String::from_utf8(read(&out)).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("n,quantile,hoeffding_bound\n"));
}

#[test]
fn stdout_is_summary_files_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let res = run(&["bound", "--sweep", "n", "--values", "100,1000", "--out", out.to_str().unwrap()]);
    assert_ok(&res);
    let stdout = String::from_utf8_lossy(&res.stdout);
    // human lines on stdout, no CSV header leaked
    assert!(stdout.contains("term_one="));
    assert!(!stdout.contains("param,value"));
}
