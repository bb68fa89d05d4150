mod common;

use std::process::{Command, Output};

use common::config_path;

fn qadvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qadvlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bounds_with_thm2_config_prints_one_row() {
    let cfg = config_path("bounds_thm2.json");
    let o = qadvlab(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("theorem,r,p,epsilon,m,d,d_H"));
    assert!(lines[1].starts_with("thm2,inf,inf,"));
}

#[test]
fn missing_config_names_the_path() {
    let o = qadvlab(&["bounds", "--config", "/nonexistent/exp.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/exp.json"));
}

#[test]
fn unknown_subcommand_and_flag_exit_1() {
    let o = qadvlab(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(qadvlab(&["bounds", "--bogus"]).status.code(), Some(1));
    assert_eq!(qadvlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_variant_is_a_validation_error() {
    assert_eq!(qadvlab(&["bounds", "--variant", "sideways"]).status.code(), Some(1));
    assert_eq!(qadvlab(&["bounds", "--variant", "appendix"]).status.code(), Some(0));
}

#[test]
fn divergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"train": {"epochs": 5, "learning_rate": 1e308, "optimizer": "adam"}, "task": {"train_m": 4, "test_m": 4}}"#,
    )
    .unwrap();
    let o = qadvlab(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
    // a non-finite feature is bad input, not a numerical failure
    assert_eq!(qadvlab(&["attack", "--x", "inf,0"]).status.code(), Some(1));
}

#[test]
fn embed_prints_a_density_matrix() {
    let o = qadvlab(&["embed", "--x", "0.3,-0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["hilbert_dim"], 4);
    let tr: f64 = (0..4).map(|i| v["re"][i][i].as_f64().unwrap()).sum();
    assert!((tr - 1.0).abs() < 1e-12);
}

#[test]
fn train_then_attack_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"task": {"train_m": 8, "test_m": 20}, "train": {"epochs": 3}, "attack": {"epsilon": 0.3}}"#).unwrap();
    let ck = dir.path().join("model.json");
    let trace = dir.path().join("trace.csv");
    let o = qadvlab(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let risks: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(risks["adv_train"].as_f64().unwrap() >= risks["clean_train"].as_f64().unwrap());
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 1 + 4);
    let o = qadvlab(&["attack", "--config", cfg.to_str().unwrap(), "--checkpoint", ck.to_str().unwrap(), "--x", "0.7,-0.1", "--y", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(a["adversarial_loss"].as_f64().unwrap() >= a["clean_loss"].as_f64().unwrap());
}

#[test]
fn sweep_row_count_matches_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"task": {"train_m": 5, "test_m": 10}, "model": {"layers": 1}, "train": {"epochs": 1},
            "attack": {"epsilon": 0.1}, "bounds": {"n_draws": 10},
            "sweep": {"values": [4, 6, 8], "families": ["angle", "dense"], "n_seeds": 2}}"#,
    )
    .unwrap();
    let o = qadvlab(&["sweep-dim", "--config", cfg.to_str().unwrap(), "--axis", "samples"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 3 * (2 + 2));
    assert_eq!(qadvlab(&["sweep-dim", "--axis", "sideways"]).status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let o = qadvlab(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
}
