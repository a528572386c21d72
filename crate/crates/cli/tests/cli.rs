use std::path::Path;
use std::process::{Command, Output};

use relay_outage::experiment::{read_csv, read_jsonl, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relay-outage"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL: [&str; 8] = ["--relays", "1,3", "--rate", "1", "--snr-db", "5:15:5", "--trials", "5000"];

#[test]
fn simulate_writes_csv_to_stdout() {
    let o = run(&[&["simulate"][..], &SMALL].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.method == "mc" && r.scheme == "rs-ddf-nc"));
}

#[test]
fn analytic_rows_leave_mc_columns_empty() {
    let o = run(&["analytic", "--relays", "2", "--rate", "1", "--snr-db", "10", "--grid", "256"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(line.starts_with("rs-ddf-nc,2,10,1.0,10.0,10.0,analytic,"), "{line}");
    assert!(line.ends_with(",,,,,"), "{line}");
}

#[test]
fn validate_passes_on_consistent_cells() {
    let o = run(&[&["simulate", "--validate", "--scheme", "all", "--grid", "512"][..], &SMALL].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("36/36 cells agree"), "{}", stderr(&o));
    assert_eq!(read_csv(stdout(&o).as_bytes()).unwrap().len(), 72);
}

#[test]
fn validate_fails_with_status_two() {
    // Seed 163 draws 42 outages in 100 trials against an exact 0.265.
    let o = run(&[
        "sweep", "--method", "both", "--relays", "1", "--rate", "1", "--snr-db", "5",
        "--trials", "100", "--seed", "163", "--grid", "512", "--validate",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("MISMATCH"));
    assert_eq!(read_csv(stdout(&o).as_bytes()).unwrap().len(), 2);
}

#[test]
fn invalid_arguments_exit_with_one() {
    for args in [
        &["simulate", "--scheme", "nope"][..],
        &["simulate", "--snr-db", "3:1:1"],
        &["simulate", "--rate", "-1"],
        &["simulate", "--beta", "0.5"],
        &["analytic", "--grid", "10"],
        &["sweep", "--preset", "fig-r9"],
        &["sweep", "--method", "guess"],
        &["frobnicate"],
        &["simulate", "--trials", "lots"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_of_regime_eddf_can_be_rejected() {
    let base = ["analytic", "--scheme", "rs-eddf-nc", "--rate", "1", "--snr-db", "20", "--grid", "256"];
    assert!(run(&base).status.success());
    let o = run(&[&base[..], &["--no-fallback"]].concat());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("regime"), "{}", stderr(&o));
}

#[test]
fn explicit_split_is_reported() {
    let o = run(&[
        "simulate", "--scheme", "rs-eddf-nc", "--rate", "1", "--snr-db", "5", "--trials", "1000",
        "--beta", "0.9", "--r1", "0.55",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert_eq!((rows[0].beta, rows[0].r1), (Some(0.9), Some(0.55)));
}

fn sweep_bytes(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let path = dir.join(name);
    let o = run(&[
        "sweep", "--preset", "cmp-l3", "--snr-db", "10:30:10", "--trials", "20000", "--threads",
        threads, "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::read(path).unwrap()
}

#[test]
fn sweep_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_bytes(dir.path(), "a.csv", "1");
    let b = sweep_bytes(dir.path(), "b.csv", "1");
    let c = sweep_bytes(dir.path(), "c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(read_csv(&a[..]).unwrap().len(), 6 * 3);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"scheme": ["rs-ddf", "rs-ddf-nc"], "relays": 2, "rate": 2, "snr_db": "10:12:1",
            "trials": 3000, "seed": 9, "format": "jsonl"}"#,
    )
    .unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_jsonl(stdout(&o).as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!((rows[0].scheme.as_str(), rows[0].seed), ("rs-ddf", Some(9)));

    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "4", "--format", "csv"]);
    let rows = read_csv(stdout(&o).as_bytes()).unwrap();
    assert_eq!(rows[0].seed, Some(4));

    std::fs::write(&cfg, r#"{"colour": "red"}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn pdf_check_reports_and_flags_wrong_density() {
    let o = run(&["pdf-check", "--relays", "3", "--trials", "100000", "--analytic-relays", "5"]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(report["chi2_pass"], false);
    assert!(stderr(&o).contains("FAIL"));
}
