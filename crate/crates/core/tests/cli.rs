use std::path::Path;
use std::process::{Command, Output};

use vecsim::output::{RUN_COLUMNS, SWEEP_COLUMNS};

fn vecsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// Every numeric cell is finite or the NA sentinel.
fn numeric_cells_ok(header: &[String], rows: &[Vec<String>]) {
    let text = ["scheme", "param_key"];
    for row in rows {
        for (h, v) in header.iter().zip(row) {
            if text.contains(&h.as_str()) {
                continue;
            }
            let ok = v == "NA" || v.parse::<f64>().is_ok_and(f64::is_finite);
            assert!(ok, "column {h} has `{v}`");
        }
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = vecsim(&["--config", "/nonexistent/vecsim.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(vecsim(&["--scheme", "nope"]).status.code(), Some(2));
    assert_eq!(vecsim(&["--set", "scenario.bogus=1"]).status.code(), Some(2));
    assert_eq!(vecsim(&["--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let ok = vecsim(&["--verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = vecsim(&["--verify", "--inject-fault", "blocking-pair"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn single_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let res = vecsim(&[
        "--slots", "50", "--vehicles", "30", "--scheme", "bm,elo", "--trace", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = read_csv(&out.join("run.csv"));
    assert_eq!(header, RUN_COLUMNS);
    assert_eq!(rows.len(), 100);
    numeric_cells_ok(&header, &rows);
    let runtime = header.iter().position(|h| h == "runtime_ms").unwrap();
    assert!(rows.iter().all(|r| r[runtime] == "NA"));
    for f in ["summary.json", "plot_sw.gp", "trace.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.is_object());
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let res = vecsim(&[
        "--slots", "20", "--sweep", "vehicle_count=10,20", "--seeds", "1..3", "--scheme", "bm,nvo",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(header, SWEEP_COLUMNS);
    assert_eq!(rows.len(), 2 * 3 * 2);
    numeric_cells_ok(&header, &rows);
    assert!(out.join("sweep.dat").is_file() && out.join("plot_sweep.gp").is_file());
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = vecsim(&["--dump-config", "--set", "scenario.vehicle_count=77"]);
    assert_eq!(dumped.status.code(), Some(0));
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &dumped.stdout).unwrap();
    let again = vecsim(&["--dump-config", "--config", path.to_str().unwrap()]);
    assert_eq!(again.stdout, dumped.stdout);
}
