use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("qm-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.0).ok();
    }
}

fn run(args: &[&str], files: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quantmatch"));
    cmd.env_remove("QM_SEED");
    cmd.args(args);
    for (flag, path) in files {
        cmd.arg(flag).arg(path);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const UNIFORM: &str = r#"{"kind":"uniform","domain":[0,1]}"#;

#[test]
fn bounds_reports_both_curves() {
    let s = Scratch::new("bounds");
    let prior = s.file("u.json", UNIFORM);
    let out = run(&["bounds", "-q", "0.5"], &[("--prior", &prior)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let upper = v["upper"]["knots"].as_array().unwrap();
    let at_half = upper.iter().find(|k| k["x"] == 0.5).unwrap();
    assert_eq!(at_half["right"], 1.0);
    assert_eq!(v["lower"]["knots"].as_array().unwrap().len(), 3);
}

#[test]
fn check_exit_codes() {
    let s = Scratch::new("check");
    let prior = s.file("u.json", UNIFORM);
    let dirac = s.file("d.json", r#"{"kind":"dirac","at":1}"#);
    let out = run(
        &["check", "-q", "0.5"],
        &[("--prior", &prior), ("--target", &dirac)],
    );
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["implementable"], false);
    assert_eq!(v["witness"]["x"], 1.0);

    let half = s.file("h.json", r#"{"kind":"dirac","at":0.5}"#);
    let out = run(
        &["check", "-q", "0.5"],
        &[("--prior", &prior), ("--target", &half)],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["implementable"], true);
}

#[test]
fn malformed_json_names_the_field() {
    let s = Scratch::new("bad");
    let bad = s.file(
        "bad.json",
        r#"{"domain":[0,1],"knots":[{"x":0,"left":0,"right":0},{"x":1,"left":1,"rigth":1}]}"#,
    );
    let out = run(&["bounds", "-q", "0.5"], &[("--prior", &bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("knots[1]"), "{err}");
    assert!(err.contains("rigth"), "{err}");
}

#[test]
fn quantile_outside_unit_interval_is_rejected() {
    let s = Scratch::new("q");
    let prior = s.file("u.json", UNIFORM);
    let out = run(&["bounds", "-q", "1"], &[("--prior", &prior)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn figure1_duplicates_rows_at_jumps() {
    let s = Scratch::new("fig");
    let prior = s.file(
        "a.json",
        r#"{"kind":"atoms","atoms":[[0.25,0.5],[0.75,0.5]]}"#,
    );
    let csv_path = s.path("fig.csv");
    let out = run(
        &["figure1", "-q", "0.5", "--grid", "5"],
        &[("--prior", &prior), ("--out", &csv_path)],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|row| row.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect();
    let at_quarter: Vec<&Vec<f64>> = rows.iter().filter(|row| row[0] == 0.25).collect();
    assert_eq!(at_quarter.len(), 2);
    assert_eq!(at_quarter[0][1..], [0.0, 0.0, 0.0]);
    assert_eq!(at_quarter[1][1..], [0.5, 0.0, 1.0]);
}

#[test]
fn optimize_reports_value_and_uniqueness() {
    let s = Scratch::new("opt");
    let prior = s.file("u.json", UNIFORM);
    let v = s.file(
        "v.json",
        r#"{"kind":"piecewise_linear","points":[[0,0],[1,1]]}"#,
    );
    let out = run(
        &["optimize", "-q", "0.5"],
        &[("--prior", &prior), ("--objective", &v)],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["value"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(r["unique"], true);
}

#[test]
fn implement_and_unique_succeed_on_implementable_targets() {
    let s = Scratch::new("impl");
    let prior = s.file("u.json", UNIFORM);
    let out = run(
        &["implement", "-q", "0.5"],
        &[("--prior", &prior), ("--target", &prior)],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["ks_to_target"].as_f64().unwrap() < 1e-12);

    let out = run(
        &["unique", "-q", "0.5", "-e", "0.25", "-n", "1"],
        &[("--prior", &prior), ("--target", &prior)],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"]["unique"], true);
    assert_eq!(r["experiment"]["kind"], "unique_impl");
    assert!(r["ks_pushforward_to_induced"].as_f64().unwrap() < 1e-9);
}

#[test]
fn probe_and_regret_on_nam() {
    let s = Scratch::new("probe");
    let atoms: Vec<String> = (0..8)
        .map(|i| format!("[{},0.125]", i as f64 / 7.0))
        .collect();
    let exp = s.file(
        "nam.json",
        &format!(
            r#"{{"kind":"nam","prior":{{"kind":"atoms","atoms":[{}]}},"q":0.5}}"#,
            atoms.join(",")
        ),
    );
    let out = run(&["probe"], &[("--experiment", &exp)]);
    assert_eq!(out.status.code(), Some(1));
    let failures = json(&out)["failures"].as_array().unwrap().clone();
    assert!(failures.iter().any(|f| f["p"] == 0.5));

    let nam = s.file(
        "nam_u.json",
        &format!(r#"{{"kind":"nam","prior":{UNIFORM},"q":0.5}}"#),
    );
    let v = s.file("v.json", r#"{"kind":"quadratic","center":0.5}"#);
    let out = run(&["regret"], &[("--experiment", &nam), ("--objective", &v)]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["regret"].as_f64().unwrap() - 1.0 / 16.0).abs() < 1e-9);
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let s = Scratch::new("sim");
    let exp = s.file(
        "m.json",
        &format!(r#"{{"kind":"matching","prior":{UNIFORM},"q":0.5}}"#),
    );
    let target = s.file("u.json", UNIFORM);
    let go = |seed: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_quantmatch"));
        cmd.args(["simulate", "-N", "5000"])
            .arg("--experiment")
            .arg(&exp)
            .arg("--target")
            .arg(&target)
            .env("QM_SEED", seed);
        cmd.output().unwrap()
    };
    let (a, b, c) = (go("11"), go("11"), go("12"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let r = json(&a);
    assert_eq!(r["seed"], 11);
    assert!(r["ks_to_exact"].as_f64().unwrap() < r["ks_bound"].as_f64().unwrap());
}

#[test]
fn gerrymander_writes_seat_share_curve() {
    let s = Scratch::new("gerry");
    let u = s.file("u.json", UNIFORM);
    let csv_path = s.path("share.csv");
    let out = run(
        &["gerrymander", "--mode", "partisan", "--grid", "11"],
        &[("--voters", &u), ("--shock", &u), ("--out", &csv_path)],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["expected_seat_share"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rho,share");
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[1], "0,1");
}

#[test]
fn matching_lists_posteriors() {
    let s = Scratch::new("match");
    let prior = s.file("u.json", UNIFORM);
    let out = run(
        &["matching", "-q", "0.5", "--grid", "3"],
        &[("--prior", &prior)],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["bayes_residual"].as_f64().unwrap() < 1e-9);
    let posts = r["posteriors"].as_array().unwrap();
    assert_eq!(posts.len(), 3);
    // label 1/4 pairs 1/4 with 3/4
    assert_eq!(
        posts[1]["atoms"],
        serde_json::json!([[0.25, 0.5], [0.75, 0.5]])
    );
}
