use std::path::Path;
use std::process::{Command, Output};

use qwqkd::protocol::{ChannelSpec, ProtocolConfig, ProtocolKind};

fn qwqkd(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qwqkd"));
    cmd.args(args).env_remove("QWQKD_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    qwqkd(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn cvalue_reports_minimum_and_tolerance() {
    let o = run(&["cvalue", "--P", "3", "--theta", "pi/4", "--tmax", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("c=") && text.contains(" t=") && text.contains(" Q_max="), "{text}");
}

#[test]
fn noise_tolerance_of_qubit_bb84() {
    let o = run(&["noise", "--P", "1", "--c", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let q: f64 = stdout(&o).trim().parse().unwrap();
    assert!((q - 0.110028).abs() < 1e-6, "{q}");
}

#[test]
fn walk_output_is_csv_distribution() {
    let o = run(&["walk", "--P", "3", "--theta", "0.3", "--t", "0", "--init", "1,L"]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["x", "s", "re", "im", "p"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    let ones: Vec<_> = rows.iter().filter(|r| r[4].parse::<f64>().unwrap() == 1.0).collect();
    assert_eq!(ones.len(), 1);
    assert_eq!((&ones[0][0], &ones[0][1]), ("1", "L"));
}

#[test]
fn invalid_input_exits_with_validation_code() {
    for args in [
        vec!["cvalue", "--P", "4", "--theta", "0.3"],
        vec!["noise", "--P", "3"],
        vec!["walk", "--P", "3", "--theta", "x", "--t", "1"],
        vec!["protocol", "--config", "/nonexistent/config.json"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
    }
}

#[test]
fn unwritable_output_exits_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", dir.path().to_str().unwrap(), "walk", "--P", "1", "--theta", "0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn reproduce_mismatch_and_match() {
    let o = run(&["reproduce", "fig3", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("P,F,theta,phi,t,c,Q_max,T_max"));

    let o = run(&["reproduce", "fig7", "--quiet"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("FAIL") && err.contains("expected"), "{err}");
}

#[test]
fn out_dir_variable_receives_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = qwqkd(&["sweep", "--P", "1", "--F", "I", "--grid", "2", "--tmax", "5", "--quiet"])
        .env("QWQKD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    // one best row per (P, F)
    assert_eq!(written.lines().count(), 2);

    // scalars still go to stdout
    let o = qwqkd(&["noise", "--P", "1", "--er", "0.1"])
        .env("QWQKD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("lambda="));

    let target = dir.path().join("nested/walk.json");
    let o = run(&[
        "--out",
        target.to_str().unwrap(),
        "--format",
        "json",
        "walk",
        "--P",
        "1",
        "--theta",
        "pi/4",
        "--t",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(doc["state"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_output_is_byte_identical_across_thread_counts() {
    let base = ["sweep", "--P", "1,3", "--grid", "4", "--tmax", "60", "--quiet"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat());
    let many = run(&[&base[..], &["--jobs", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, run(&base).stdout);
}

#[test]
fn sweep_resumes_from_partial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.jsonl");
    let ck_arg = ck.to_str().unwrap();
    let args = ["sweep", "--P", "1,3", "--F", "I,Y", "--grid", "3", "--tmax", "40", "--quiet"];
    let fresh = run(&args);

    let full = run(&[&args[..], &["--checkpoint", ck_arg]].concat());
    assert_eq!(full.stdout, fresh.stdout);
    let lines: Vec<String> = std::fs::read_to_string(&ck).unwrap().lines().map(String::from).collect();
    assert!(lines.len() > 4);

    // keep the header and a few cells, as if the run had been interrupted
    std::fs::write(&ck, lines[..4].join("\n") + "\n").unwrap();
    let resumed = run(&[&args[..], &["--checkpoint", ck_arg]].concat());
    assert_eq!(resumed.status.code(), Some(0), "{}", stderr(&resumed));
    assert_eq!(resumed.stdout, fresh.stdout);

    // a checkpoint from another grid is refused
    let other = run(&["sweep", "--P", "5", "--grid", "3", "--tmax", "40", "--quiet", "--checkpoint", ck_arg]);
    assert_ne!(other.status.code(), Some(0));
}

fn write_config(dir: &Path, config: &ProtocolConfig) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string(config).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn protocol_runs_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ProtocolConfig::new(ProtocolKind::SemiQuantum, 3, 300);
    config.channel = ChannelSpec::Pauli { error_weight: 0.05 };
    let path = write_config(dir.path(), &config);

    let a = run(&["--format", "json", "protocol", "--config", &path]);
    let b = run(&["--format", "json", "protocol", "--config", &path]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "99", "--format", "json", "protocol", "--config", &path]);
    assert_ne!(a.stdout, c.stdout);

    let summary = run(&["protocol", "--config", &path]);
    assert_eq!(summary.status.code(), Some(0));
    assert!(!summary.stdout.is_empty());
}
