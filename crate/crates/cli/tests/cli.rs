use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qverify")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const HADAMARD: &str = r#"[{"op":"prepare","wire":0},{"op":"h","wire":0},{"op":"measure","wire":0}]"#;

#[test]
fn chsh_eval_reports_tsirelson_value() {
    let v = stdout_json(&qverify(&["chsh", "eval", "--strategy", "ideal"]));
    let w = v["win_probability"].as_f64().unwrap();
    assert!((w - (std::f64::consts::PI / 8.0).cos().powi(2)).abs() < 1e-12);
    assert_eq!(v["classical_value"].as_f64(), Some(0.75));
}

#[test]
fn chsh_eval_reads_strategy_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"builtin": "classical_00"}"#);
    let v = stdout_json(&qverify(&["chsh", "eval", "--strategy", &s]));
    assert!((v["win_probability"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn seq_play_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("play.csv");
    let o = qverify(&[
        "seq", "play", "--strategy", "ideal", "-n", "4", "--trials", "7", "--seed", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "trial,wins,games,accepted");
    assert_eq!(rows.len(), 8);
    // same seed, same bytes
    let again = dir.path().join("again.csv");
    qverify(&["seq", "play", "--strategy", "ideal", "-n", "4", "--trials", "7", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn seq_structure_and_rigidity_certify() {
    let v = stdout_json(&qverify(&["seq", "structure", "--strategy", "ideal", "-n", "2", "--epsilon", "0.1"]));
    assert_eq!(v["games"].as_array().unwrap().len(), 2);
    let v = stdout_json(&qverify(&["rigidity", "certify", "--strategy", "ideal"]));
    assert!(v["state_distance"].as_f64().unwrap() < 1e-9);
}

#[test]
fn xz_certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let epr = write(dir.path(), "epr.json", r#"{"n": 2, "generators": ["+XX", "+ZZ"]}"#);
    let v = stdout_json(&qverify(&["xz", "certify", "--state", &epr]));
    assert_eq!(v["certified"], true);
    let y = write(dir.path(), "y.json", r#"{"n": 1, "generators": ["+Y"]}"#);
    assert_eq!(qverify(&["xz", "certify", "--state", &y]).status.code(), Some(1));
    let clash = write(dir.path(), "bad.json", r#"{"n": 1, "generators": ["+X", "+Z"]}"#);
    assert_eq!(qverify(&["xz", "certify", "--state", &clash]).status.code(), Some(2));
}

#[test]
fn tomo_state_logs_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let o = qverify(&["tomo", "state", "--m", "32", "--sessions", "2", "--seed", "1", "--log", log.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
    for line in fs::read_to_string(&log).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["direction"].is_string() && v["round"].is_u64());
    }
}

#[test]
fn compute_run_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "h.json", HADAMARD);
    let o = qverify(&["compute", "run", "--circuit", &c, "--shots", "400", "--seed", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let total: usize = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 400);
    let v = stdout_json(&qverify(&["compute", "verify", "--circuit", &c]));
    assert!(v["corrected"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn eve_run_outputs_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"n": 176, "m": 88, "circuit": {{"wires": 1, "gates": {HADAMARD}}}}}"#),
    );
    let out = dir.path().join("honest");
    let o = qverify(&["eve", "run", "--config", &cfg, "--sessions", "12", "--seed", "5", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("sessions.jsonl")).unwrap().lines().count(), 12);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["report"]["sessions"], 12);
    assert!(summary["wall_time_s"].is_f64());
    assert!(fs::read_to_string(out.join("histogram.csv")).unwrap().starts_with("outcome,count,frequency,direct"));

    // a Bob whose reports never match his blocks fails state tomography
    let bob = write(dir.path(), "bob.json", r#"{"Scripted": [{"SubstituteReport": {"fraction": 1.0, "target": 0}}]}"#);
    let out = dir.path().join("cheat");
    let o = qverify(&[
        "eve", "run", "--config", &cfg, "--sessions", "6", "--pin-protocol", "state", "--bob", &bob, "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));

    let bad = write(dir.path(), "bad.json", r#"{"n": 100, "m": 88}"#);
    assert_eq!(qverify(&["eve", "run", "--config", &bad, "--out-dir", out.to_str().unwrap()]).status.code(), Some(2));
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(qverify(&["eve", "run", "--config", &garbage, "--out-dir", out.to_str().unwrap()]).status.code(), Some(2));
}
