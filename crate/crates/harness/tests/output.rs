use std::fs;
use std::path::Path;
use std::time::Duration;

use phygital::output::ARTIFACT_VERSION;
use phygital::{emit_results, RunResult, Table};

fn result(tables: Vec<Table>) -> RunResult {
    RunResult {
        experiment: "dynamics".into(),
        run_id: "r".repeat(64),
        config_hash: "c".repeat(64),
        seed: 3,
        tables,
        warnings: vec!["heads up".into()],
        wall_time: Duration::from_millis(5),
    }
}

fn two_tables() -> Vec<Table> {
    vec![
        Table::csv("values.csv", ["i", "x"], vec![vec!["0".into(), "1.5".into()], vec!["1".into(), "a,b".into()]]),
        Table::json("nested/summary.json", &serde_json::json!({ "ok": true, "n": 2 })),
    ]
}

fn files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p.display().to_string());
        }
    }
    out.sort();
    out
}

#[test]
fn empty_result_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = emit_results(&result(vec![]), dir.path()).unwrap();
    assert!(m.tables.is_empty());
    assert_eq!(files(dir.path()), vec![dir.path().join("manifest.json").display().to_string()]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(v["artifact_version"], ARTIFACT_VERSION);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["warnings"][0], "heads up");
    assert!(v.get("wall_time").is_none());
}

#[test]
fn two_tables_are_written_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let m = emit_results(&result(two_tables()), dir.path()).unwrap();
    assert_eq!(m.tables.len(), 2);
    assert_eq!(m.tables[0].rows, 2);
    assert_eq!(m.tables[1].name, "nested/summary");
    let csv = fs::read_to_string(dir.path().join("values.csv")).unwrap();
    assert_eq!(csv, "i,x\n0,1.5\n1,\"a,b\"\n");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("nested/summary.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 2);
    // no temporary files left behind
    assert_eq!(files(dir.path()).len(), 3);
}

#[test]
fn re_emitting_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_results(&result(two_tables()), a.path()).unwrap();
    let mut again = result(two_tables());
    again.wall_time = Duration::from_secs(99);
    emit_results(&again, b.path()).unwrap();
    emit_results(&again, b.path()).unwrap();
    for name in ["values.csv", "nested/summary.json", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn blocked_target_fails_without_partial_tables() {
    let dir = tempfile::tempdir().unwrap();
    // a plain file where a table subdirectory must go
    fs::write(dir.path().join("nested"), b"in the way").unwrap();
    let err = emit_results(&result(two_tables()), dir.path()).unwrap_err();
    assert!(!err.to_string().is_empty());
    assert!(!dir.path().join("values.csv").exists());
    assert!(!dir.path().join("manifest.json").exists());

    let under_file = dir.path().join("nested").join("out");
    assert!(emit_results(&result(two_tables()), &under_file).is_err());
}
