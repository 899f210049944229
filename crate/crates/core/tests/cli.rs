use std::fs;
use std::path::{Path, PathBuf};

use impulse_games::cli::run;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn impulse(args: &[&str]) -> i32 {
    let mut v = vec!["impulse"];
    v.extend_from_slice(args);
    run(v)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_g1_writes_report_and_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g1");
    let code = impulse(&["solve", "--game", &data("g1.json"), "--tol", "1e-12", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = json(&out.join("report.json"));
    assert!((report["value"][0].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert_eq!(report["converged"], true);
    let policy = fs::read_to_string(out.join("policy.csv")).unwrap();
    assert!(policy.starts_with("state,value,p1_acts,p1_action,p2_acts,p2_action,executed_a,executed_b"));
}

#[test]
fn malformed_input_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"states": 1, "actions1": 1}"#).unwrap();
    let out = dir.path().join("out");
    assert_eq!(impulse(&["solve", "--game", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert!(!out.exists());

    let gamma_one = dir.path().join("g.json");
    let text = fs::read_to_string(data("g1.json")).unwrap().replace("\"gamma\":0.5", "\"gamma\":1.0");
    fs::write(&gamma_one, text).unwrap();
    assert_eq!(impulse(&["solve", "--game", gamma_one.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert!(!out.exists());

    assert_eq!(impulse(&["solve", "--gen", "3,1", "--out", out.to_str().unwrap()]), 1);
    assert_eq!(impulse(&["bogus"]), 1);
}

#[test]
fn sweep_budget_exhaustion_exits_2_with_flagged_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let code = impulse(&[
        "solve", "--gen", "6,2,2,1", "--tol", "1e-12", "--max-sweeps", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert_eq!(json(&out.join("report.json"))["converged"], false);
}

#[test]
fn oracle_certifies_g1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(impulse(&["oracle", "--game", &data("g1.json"), "--out", out.to_str().unwrap()]), 0);
    let r = json(&out.join("oracle.json"));
    assert_eq!(r["certified"], true);
    assert!((r["upper"][0].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!((r["lower"][0].as_f64().unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn oracle_over_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(impulse(&["oracle", "--gen", "8,2,2,0", "--max-enum", "10", "--out", out.to_str().unwrap()]), 2);
}

#[test]
fn simulate_g2_ten_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(
        impulse(&["simulate", "--game", &data("g2.json"), "--steps", "10", "--out", out.to_str().unwrap()]),
        0
    );
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,s,executed_a,executed_b,reward,cumulative_return");
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let total: f64 = last[5].parse().unwrap();
    let expected: f64 = (0..10).map(|t| 0.5f64.powi(t) * 1.5).sum();
    assert!((total - expected).abs() < 1e-12);
    assert!((total - 2.9971).abs() < 1e-4);
    let times = json(&out.join("intervention_times.json"));
    assert_eq!(times["tau"].as_array().unwrap().len(), 10);
    assert!(times["rho"].as_array().unwrap().is_empty());
}

#[test]
fn simulate_monte_carlo_matches_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let code = impulse(&[
        "simulate", "--gen", "5,2,2,3", "--steps", "300", "--rollouts", "1000", "--seed", "4", "--start", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let t = json(&out.join("intervention_times.json"));
    let (mean, se, v) = (
        t["mean_return"].as_f64().unwrap(),
        t["standard_error"].as_f64().unwrap(),
        t["value_at_start"].as_f64().unwrap(),
    );
    assert!((mean - v).abs() <= 3.0 * se, "{mean} ± {se} vs {v}");
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert_eq!(impulse(&["gen", "--gen", "4,2,1,7", "--out", d.to_str().unwrap()]), 0);
    }
    assert_eq!(fs::read(a.join("game.json")).unwrap(), fs::read(b.join("game.json")).unwrap());
    // The generated file loads back and solves.
    let s = dir.path().join("s");
    let game = a.join("game.json");
    assert_eq!(impulse(&["solve", "--game", game.to_str().unwrap(), "--out", s.to_str().unwrap()]), 0);
}

#[test]
fn seeded_runs_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("l{i}"))).collect();
    for o in &outs {
        let code = impulse(&["learn", "--gen", "3,1,1,2", "--steps", "20000", "--seed", "9", "--out", o.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    for f in ["q.json", "diagnostics.csv"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap());
    }
    let diag = fs::read_to_string(outs[0].join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("step,sup_norm_delta,dist_to_qhat,epsilon,seed"));
}

#[test]
fn budget_run_labels_augmented_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let code = impulse(&[
        "budget", "--game", &data("g2.json"), "--n1", "2", "--n2", "0", "--tol", "1e-12", "--steps", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let r = json(&out.join("budget_report.json"));
    let states: Vec<&str> = r["states"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(states, vec!["(0,0,0)", "(0,1,0)", "(0,2,0)"]);
    assert!((r["value"][2].as_f64().unwrap() - 2.75).abs() < 1e-9);
    assert_eq!(r["simulation"]["max_interventions1"], 2);
    let csv = fs::read_to_string(out.join("budget_trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn fit_reads_basis_from_game_file() {
    let dir = tempfile::tempdir().unwrap();
    let gdir = dir.path().join("g");
    assert_eq!(impulse(&["gen", "--gen", "4,1,1,3", "--out", gdir.to_str().unwrap()]), 0);
    let path = gdir.join("game.json");
    let mut doc = json(&path);
    doc["basis"] = serde_json::json!([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]);
    fs::write(&path, doc.to_string()).unwrap();
    let out = dir.path().join("f");
    let code = impulse(&[
        "fit", "--game", path.to_str().unwrap(), "--combinator", "T", "--steps", "20000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let r = json(&out.join("fit.json"));
    assert_eq!(r["r_hat"].as_array().unwrap().len(), 2);
    assert_eq!(r["samples"], 20000);
    for key in ["lhs", "rhs", "holds"] {
        assert!(!r[key].is_null());
    }

    // A rank-deficient basis is an input error.
    doc["basis"] = serde_json::json!([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]);
    fs::write(&path, doc.to_string()).unwrap();
    let out2 = dir.path().join("f2");
    assert_eq!(impulse(&["fit", "--game", path.to_str().unwrap(), "--out", out2.to_str().unwrap()]), 1);
    assert!(!out2.exists());
}

#[test]
fn duopoly_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(impulse(&["solve", "--duopoly", &data("duopoly.toml"), "--out", out.to_str().unwrap()]), 0);
    let r = json(&out.join("report.json"));
    assert_eq!(r["value"].as_array().unwrap().len(), 121);
}
