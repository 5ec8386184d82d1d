use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nehari::cli::output::{SolveReport, Status, VerifyReport};
use serde_json::Value;

const ACCEPTANCE: &str = r#"{
  "nonlinearity": {"family": "power", "params": {"a": 3, "p": 3}},
  "weight": {"family": "constant", "params": {"value": 1}},
  "annuli": [{"r": 1, "R": 60, "beta": 0.2}],
  "grid_n": 400
}"#;

fn nehari(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nehari")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn check_acceptance_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ACCEPTANCE);
    let out = nehari(&["check", "--config", s(&cfg), "--json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let h1 = &v["results"][0]["h1"];
    assert!((h1["left"].as_f64().unwrap() - (PI - 3.0)).abs() < 1e-12);
    assert!((h1["right"].as_f64().unwrap() - 4.7735).abs() < 1e-3);
    assert_eq!(v["results"][0]["which_of_h234"], "H2");

    let human = nehari(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&human), 0);
    assert!(String::from_utf8_lossy(&human.stdout).contains("H1 pass"));
}

#[test]
fn check_small_outer_radius_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &ACCEPTANCE.replace("\"R\": 60", "\"R\": 10"));
    let out = nehari(&["check", "--config", s(&cfg), "--json"]);
    assert_eq!(code(&out), 1);
    assert!(json(&out)["results"][0]["h1"]["right"].as_f64().unwrap() < 0.0);
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &ACCEPTANCE.replace("\"beta\": 0.2", "\"beta\": 0.3"));
    let out = nehari(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("annuli[0]"));

    let cfg = write(dir.path(), "e.json", &ACCEPTANCE.replace("[{\"r\": 1, \"R\": 60, \"beta\": 0.2}]", "[]"));
    assert_eq!(code(&nehari(&["solve", "--config", s(&cfg), "--out", s(dir.path())])), 2);

    let cfg = write(dir.path(), "j.json", "{ not json");
    assert_eq!(code(&nehari(&["check", "--config", s(&cfg)])), 2);
    assert_eq!(code(&nehari(&["check", "--config", "/nonexistent.json"])), 2);
    assert_eq!(code(&nehari(&["check", "--bogus"])), 2);
}

#[test]
fn solve_writes_certified_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ACCEPTANCE);
    let out_dir = dir.path().join("out");
    let out = nehari(&["solve", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    let report: SolveReport = serde_json::from_str(&text).unwrap();
    let rec = &report.results[0];
    assert_eq!(rec.status, Status::Solved);
    let sol = rec.solution.as_ref().unwrap();
    assert!(sol.localized && sol.certified);
    assert!(sol.grad_norm <= 1e-8 * 60f64.sqrt());
    // parsed values serialize back to the same document
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);

    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    assert!(csv.starts_with("t,u\n"));
    assert_eq!(csv.lines().count(), 402);
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,energy,grad_norm,step,scale,norm\n"));

    // deterministic
    let again = dir.path().join("again");
    assert_eq!(code(&nehari(&["solve", "--config", s(&cfg), "--out", s(&again)])), 0);
    assert_eq!(std::fs::read_to_string(again.join("report.json")).unwrap(), text);
    assert_eq!(std::fs::read_to_string(again.join("solution.csv")).unwrap(), csv);
}

#[test]
fn solve_skips_failing_annulus() {
    let dir = tempfile::tempdir().unwrap();
    let two = ACCEPTANCE.replace(
        "[{\"r\": 1, \"R\": 60, \"beta\": 0.2}]",
        "[{\"r\": 1, \"R\": 60, \"beta\": 0.2}, {\"r\": 61, \"R\": 200, \"beta\": 0.2}]",
    );
    let cfg = write(dir.path(), "c.json", &two);
    let out = nehari(&["solve", "--config", s(&cfg), "--out", s(dir.path()), "--json"]);
    assert_eq!(code(&out), 0);
    let report: SolveReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.results.len(), 2);
    assert_eq!(report.results[0].status, Status::Solved);
    assert_eq!(report.results[1].status, Status::Skipped);
    assert!(dir.path().join("solution_0.csv").exists());
    assert!(!dir.path().join("solution_1.csv").exists());

    let overlapping = ACCEPTANCE.replace(
        "[{\"r\": 1, \"R\": 60, \"beta\": 0.2}]",
        "[{\"r\": 1, \"R\": 60, \"beta\": 0.2}, {\"r\": 50, \"R\": 200, \"beta\": 0.2}]",
    );
    let cfg = write(dir.path(), "o.json", &overlapping);
    assert_eq!(code(&nehari(&["multi", "--config", s(&cfg), "--out", s(dir.path())])), 2);
}

#[test]
fn multi_uses_indexed_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ACCEPTANCE);
    assert_eq!(code(&nehari(&["multi", "--config", s(&cfg), "--out", s(dir.path())])), 0);
    assert!(dir.path().join("solution_0.csv").exists());
    assert!(dir.path().join("trace_0.csv").exists());
}

fn perturb(src: &Path, dst: &Path, f: impl Fn(f64, f64) -> f64) {
    let text = std::fs::read_to_string(src).unwrap();
    let mut out = String::from("t,u\n");
    for line in text.lines().skip(1) {
        let (t, u) = line.split_once(',').unwrap();
        let (t, u): (f64, f64) = (t.parse().unwrap(), u.parse().unwrap());
        out.push_str(&format!("{t:.16e},{:.16e}\n", f(t, u)));
    }
    std::fs::write(dst, out).unwrap();
}

#[test]
fn verify_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ACCEPTANCE);
    assert_eq!(code(&nehari(&["solve", "--config", s(&cfg), "--out", s(dir.path())])), 0);
    let sol = dir.path().join("solution.csv");

    let out = nehari(&["verify", "--config", s(&cfg), "--solution", s(&sol), "--json"]);
    assert_eq!(code(&out), 0);
    let report: VerifyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.passes && report.shooting.unwrap().agrees);

    let bad = dir.path().join("perturbed.csv");
    perturb(&sol, &bad, |t, u| if t == 1.0 { 0.0 } else { u + 0.1 * (2.0 * PI * t).sin() });
    let out = nehari(&["verify", "--config", s(&cfg), "--solution", s(&bad), "--json"]);
    assert_eq!(code(&out), 1);
    let report: VerifyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!report.cone.passes && report.cone.symmetry_defect > 0.1);

    let zero = dir.path().join("zero.csv");
    perturb(&sol, &zero, |_, _| 0.0);
    let out = nehari(&["verify", "--config", s(&cfg), "--solution", s(&zero), "--json"]);
    assert_eq!(code(&out), 1);
    let report: VerifyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!report.localized);

    let short = write(dir.path(), "short.csv", "t,u\n0,0\n0.5,1\n1,0\n");
    assert_eq!(code(&nehari(&["verify", "--config", s(&cfg), "--solution", s(&short)])), 2);
}

#[test]
fn sweep_rows_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ACCEPTANCE);
    let spec = write(dir.path(), "s.json", r#"{"axes": {"a": {"values": [3]}, "R": {"values": [60]}}, "solve": true}"#);
    let table = dir.path().join("sweep.csv");
    let out = nehari(&["sweep", "--config", s(&cfg), "--sweep", s(&spec), "--out", s(&table)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("passes"), "true");
    assert_eq!(col("certified"), "true");
    assert!((col("h1_left").parse::<f64>().unwrap() - (PI - 3.0)).abs() < 1e-12);

    // the row matches a standalone check + solve
    let solved = dir.path().join("solved");
    assert_eq!(code(&nehari(&["solve", "--config", s(&cfg), "--out", s(&solved)])), 0);
    let report: SolveReport =
        serde_json::from_str(&std::fs::read_to_string(solved.join("report.json")).unwrap()).unwrap();
    let norm: f64 = col("norm").parse().unwrap();
    assert_eq!(norm, report.results[0].solution.as_ref().unwrap().norm);

    let empty = write(dir.path(), "e.json", r#"{"axes": {"a": {"min": 5, "max": 1, "steps": 4}}}"#);
    assert_eq!(code(&nehari(&["sweep", "--config", s(&cfg), "--sweep", s(&empty), "--out", s(&table)])), 2);
}
