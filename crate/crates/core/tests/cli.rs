use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use subcond::cli::parse_scenario_config;
use subcond::{AnyModel, Domain, ExplicitDistribution, ModelKind, ProductDistribution};

fn subcond(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subcond"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_model(dir: &Path, name: &str, model: impl Into<AnyModel>) {
    std::fs::write(dir.join(name), model.into().to_json()).unwrap();
}

fn uniform(n: usize) -> ExplicitDistribution {
    ExplicitDistribution::uniform(Domain::hypercube(n).unwrap()).unwrap()
}

fn point_mass(n: usize) -> ExplicitDistribution {
    ExplicitDistribution::point_mass(Domain::hypercube(n).unwrap(), &vec![0; n]).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["explicit", "product", "chain"] {
        let out = subcond(
            dir.path(),
            &[
                "gen-model",
                "--kind",
                kind,
                "--n",
                "3",
                "--alphabet",
                "3",
                "--seed",
                "2",
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        let model = subcond::parse_model_json(&out.stdout).unwrap();
        assert_eq!(model.kind(), kind.parse::<ModelKind>().unwrap());
    }
    let out = subcond(dir.path(), &["gen-model", "--kind", "tree", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_point_uniform_mean_queries() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "u4.json", uniform(4));
    let out = subcond(
        dir.path(),
        &[
            "eval-point",
            "--model",
            "u4.json",
            "--sigma",
            "0110",
            "--eps",
            "0.5",
            "--trials",
            "500",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["k"], 64);
    assert_eq!(r["expected_queries"], 512.0);
    let mean = r["mean_queries"].as_f64().unwrap();
    assert!((mean - 512.0).abs() <= 0.05 * 512.0, "{mean}");
}

#[test]
fn eval_point_point_mass_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "pm.json", point_mass(3));
    let out = subcond(
        dir.path(),
        &[
            "eval-point",
            "--model",
            "pm.json",
            "--sigma",
            "000",
            "--eps",
            "0.3",
            "--trials",
            "20",
        ],
    );
    let r = stdout_json(&out);
    assert_eq!(r["success_rate"], 1.0);
    assert!(r["estimates"].as_array().unwrap().iter().all(|v| v == 1.0));

    let out = subcond(
        dir.path(),
        &[
            "eval-point",
            "--model",
            "pm.json",
            "--sigma",
            "010",
            "--eps",
            "0.3",
            "--trials",
            "5",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["success_criterion"], "not_applicable");
    assert!(r["success_rate"].is_null() && r["expected_queries"].is_null());
    assert_eq!(r["capped_runs"], 5);
}

#[test]
fn eval_point_skewed_product() {
    let dir = tempfile::tempdir().unwrap();
    let skewed = ProductDistribution::iid(Domain::hypercube(3).unwrap(), vec![0.2, 0.8]).unwrap();
    write_model(dir.path(), "s.json", skewed);
    let out = subcond(
        dir.path(),
        &[
            "eval-point",
            "--model",
            "s.json",
            "--sigma",
            "000",
            "--eps",
            "0.5",
            "--trials",
            "500",
        ],
    );
    let r = stdout_json(&out);
    let mean = r["mean_queries"].as_f64().unwrap();
    assert!((mean - 720.0).abs() <= 0.05 * 720.0, "{mean}");
}

#[test]
fn eval_point_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "u.json", uniform(2));
    for args in [
        ["--sigma", "01", "--eps", "0.6"],
        ["--sigma", "01", "--eps", "0"],
        ["--sigma", "0", "--eps", "0.3"],
        ["--sigma", "02", "--eps", "0.3"],
    ] {
        let mut full = vec!["eval-point", "--model", "u.json"];
        full.extend(args);
        let out = subcond(dir.path(), &full);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn tame_check_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "pm1.json", point_mass(1));
    let r = stdout_json(&subcond(
        dir.path(),
        &["tame-check", "--model", "pm1.json", "--theta", "0.25"],
    ));
    assert!((r["tv"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(r["pass"], true);
    write_model(dir.path(), "u.json", uniform(3));
    let r = stdout_json(&subcond(
        dir.path(),
        &["tame-check", "--model", "u.json", "--theta", "0.1"],
    ));
    assert!(r["tv"].as_f64().unwrap() < 1e-12);
    let out = subcond(
        dir.path(),
        &[
            "gen-model",
            "--kind",
            "explicit",
            "--n",
            "6",
            "--seed",
            "3",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&subcond(
        dir.path(),
        &["tame-check", "--model", "r.json", "--theta", "0.05"],
    ));
    assert!(r["tv"].as_f64().unwrap() <= 0.3 && r["pass"] == true);
    let out = subcond(
        dir.path(),
        &["tame-check", "--model", "u.json", "--theta", "0.7"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn test_equal_uniform_accepts() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "u.json", uniform(3));
    let config = json!({"p_model": "u.json", "q_model": "u.json", "eps1": 0.2, "eps2": 0.8,
                        "profile": "engineering", "trials": 20, "seed": 3, "out": "report.json"});
    std::fs::write(dir.path().join("scenario.json"), config.to_string()).unwrap();
    let out = subcond(dir.path(), &["test", "--config", "scenario.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["runs"].as_array().unwrap().len(), 20);
    assert!(r["aggregate"]["accept_rate"].as_f64().unwrap() >= 0.6);
    assert_eq!(r["aggregate"]["params"]["m"], 54);
    assert_eq!(r["aggregate"]["budget_exceeded_runs"], 0);
}

#[test]
fn single_run_reject_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "u.json", uniform(3));
    write_model(dir.path(), "pm.json", point_mass(3));
    let args = [
        "test",
        "--p-model",
        "u.json",
        "--q-model",
        "pm.json",
        "--eps1",
        "0.1",
        "--eps2",
        "0.6",
        "--seed",
        "4",
    ];
    let first = subcond(dir.path(), &args);
    assert_eq!(first.status.code(), Some(1));
    assert_eq!(stdout_json(&first)["runs"][0]["verdict"], "Reject");
    let second = subcond(dir.path(), &args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn flags_override_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("models")).unwrap();
    write_model(&dir.path().join("models"), "u.json", uniform(2));
    let config = json!({"p_model": "u.json", "q_model": "u.json", "eps1": 0.2, "eps2": 0.8, "trials": 5, "seed": 1});
    std::fs::write(dir.path().join("models/scenario.json"), config.to_string()).unwrap();
    let out = subcond(
        dir.path(),
        &[
            "test",
            "--config",
            "models/scenario.json",
            "--trials",
            "2",
            "--eps1",
            "0.3",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = stdout_json(&out);
    assert_eq!(r["trials"], 2);
    assert_eq!(r["eps1"], 0.3);
    assert_eq!(r["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_model_file_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), "u.json", uniform(2));
    let out = subcond(
        dir.path(),
        &[
            "test",
            "--p-model",
            "u.json",
            "--q-model",
            "absent.json",
            "--eps1",
            "0.1",
            "--eps2",
            "0.6",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn inline_models_in_scenario() {
    let doc = serde_json::to_value(AnyModel::from(uniform(2)).to_document()).unwrap();
    let text =
        json!({"p_model": doc, "q_model": doc, "eps1": 0.0, "eps2": 0.5, "trials": 1}).to_string();
    let cfg = parse_scenario_config(text.as_bytes()).unwrap();
    assert_eq!(cfg.trials, 1);
    let mut broken = doc.clone();
    broken["payload"] = json!([0.5, 0.5]);
    let text = json!({"p_model": broken, "q_model": doc, "eps1": 0.0, "eps2": 0.5}).to_string();
    assert!(parse_scenario_config(text.as_bytes()).is_err());
}

#[test]
fn bench_emits_three_deterministic_rows() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench", "--n", "2,3,4", "--gamma", "0.3", "--trials", "2", "--seed", "9",
    ];
    let first = subcond(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,gamma,mean_queries,M");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("3,0.3,") && lines[2].ends_with(",2361096192000"));
    assert_eq!(first.stdout, subcond(dir.path(), &args).stdout);
}

#[test]
fn verify_scorecard_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = subcond(dir.path(), &["verify", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let card = stdout_json(&out);
    assert_eq!(card["all_pass"], true);
    assert!(card["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(subcond(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(
        subcond(dir.path(), &["test", "--trials", "x"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        subcond(dir.path(), &["test", "--eps1", "0.1"])
            .status
            .code(),
        Some(2)
    );
}
