use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mabandon::RegretTrace;

fn mabandon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mabandon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TWO_POLICIES: &str = r#"
[instance]
means = [0.9, 0.8]
q00 = 1.0
q01 = 0.0
q10 = 0.0
q11 = 0.0

[sim]
episodes = 300
runs = 40
seed = 7

[[policy]]
kind = "ULCB"

[[policy]]
kind = "UCB"
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_reports_simple_instance() {
    let o = mabandon(&["solve", "--preset", "simple", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["states"][1]["v_star"].as_f64().unwrap() - 99.0).abs() < 1e-10);
    assert!((v["states"][0]["v_star"].as_f64().unwrap() - 90.0).abs() < 1e-10);
    assert_eq!(v["orientation"], "standard");
    let o = mabandon(&["solve", "--preset", "mixed-q"]);
    assert!(stdout(&o).contains("sufficient condition for standard orientation: satisfied"));
}

#[test]
fn zero_q00_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TWO_POLICIES.replace("q00 = 1.0", "q00 = 0.0"));
    let o = mabandon(&["solve", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("q(0,0) > 0"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TWO_POLICIES.replace("seed = 7", "seed = 7\nrunz = 3"));
    let o = mabandon(&["simulate", "--config", &cfg]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("runz") && err.contains("line"), "{err}");
}

#[test]
fn simulate_writes_one_trace_per_policy_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TWO_POLICIES);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = mabandon(&[
            "--workers",
            workers,
            "simulate",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["ulcb.csv", "ucb.csv"] {
        let text = fs::read_to_string(a.join(name)).unwrap();
        assert_eq!(text, fs::read_to_string(b.join(name)).unwrap());
        let trace: RegretTrace = text.parse().unwrap();
        assert_eq!(trace.rows.len(), 300);
        assert_eq!(trace.meta.seed, 7);
        // every number survives the text round trip
        let again: RegretTrace = trace.to_csv_string().unwrap().parse().unwrap();
        assert_eq!(again, trace);
    }
}

#[test]
fn overrides_change_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TWO_POLICIES);
    let out = dir.path().join("o");
    let o = mabandon(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--episodes",
        "50",
        "--runs",
        "3",
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace: RegretTrace = fs::read_to_string(out.join("ucb.csv")).unwrap().parse().unwrap();
    assert_eq!((trace.rows.len(), trace.meta.runs, trace.meta.seed), (50, 3, 9));
}

#[test]
fn compare_emits_summary_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TWO_POLICIES);
    let out = dir.path().join("cmp");
    let o = mabandon(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bounds = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let value = |name: &str| -> f64 {
        bounds
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("ulcb_ub") - 50.0).abs() < 1e-9);
    assert!((value("klulcb_ub") - 22.521).abs() < 1e-3);
    assert!((value("ucb_ref") - 500.0).abs() < 1e-9);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(stdout(&o).contains("regret/lnK"));
}

#[test]
fn compare_needs_two_policies() {
    let dir = tempfile::tempdir().unwrap();
    let one = TWO_POLICIES.replace("[[policy]]\nkind = \"UCB\"\n", "");
    let cfg = write_config(dir.path(), &one);
    let o = mabandon(&["compare", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn general_bounds_include_disc_constants() {
    let o = mabandon(&["bounds", "--preset", "general-c6-1000", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["disc_n_bins"], 4);
    assert_eq!(v["disc_state"], 0.75);
    assert!(v["disc_ulcb_ub"].as_f64().unwrap() > 0.0);
}

#[test]
fn validate_passes_on_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TWO_POLICIES);
    let o = mabandon(&["validate", "--config", &cfg, "--runs", "400", "--episodes", "20"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("validation passed"));
}

#[test]
fn presets_are_listed_and_printable() {
    let o = mabandon(&["presets"]);
    let names = stdout(&o);
    assert!(names.lines().count() >= 4);
    for name in names.lines() {
        let o = mabandon(&["presets", name]);
        assert!(stdout(&o).contains("[instance]"));
    }
    assert!(!mabandon(&["presets", "nope"]).status.success());
}
