//! Drives the `beamguard` binary end to end on a tiny configuration.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
profile = "desk"
total_episodes = 30
eval_episodes = 8

[ppo]
batch_size = 512
minibatch_size = 128
epochs = 2

[curriculum]
phase1_episodes = 10
"#;

fn beamguard(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamguard"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn inspect_config_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = beamguard(&["inspect-config", "--profile", "desk", "--seed", "4"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# seed=4 config_hash="));
    assert!(text.contains("total_episodes = 300"));
    assert!(text.contains("gamma = 0.99"));
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[ppo]\ngamm = 0.9\n").unwrap();
    let o = beamguard(&["inspect-config", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ppo.gamm"), "{err}");
    assert!(err.contains("gamma"), "{err}");
}

#[test]
fn bad_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(beamguard(&["train", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(beamguard(&["eval"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = beamguard(&["eval", "--profile", "desk", "--checkpoint", "nope.ckpt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_eval_baseline_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    fs::write(cwd.join("tiny.toml"), TINY).unwrap();
    let common = ["--config", "tiny.toml", "--seed", "3"];

    let run = |sub: &str, out: &str, extra: &[&str]| {
        let mut args = vec![sub];
        args.extend(common);
        args.extend(["--out-dir", out]);
        args.extend(extra);
        beamguard(&args, cwd)
    };

    let o = run("train", "train", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(cwd.join("train/metrics.csv")).unwrap();
    assert!(metrics.starts_with("# seed=3 config_hash="));
    assert_eq!(metrics.lines().count(), 2 + 30);
    assert!(cwd.join("train/checkpoints/final.ckpt").exists());
    assert!(fs::read_to_string(cwd.join("train/config.toml"))
        .unwrap()
        .contains("total_episodes = 30"));

    let ckpt = ["--checkpoint", "train/checkpoints/final.ckpt"];
    let o = run("eval", "eval", &ckpt);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["eval.csv", "traces.jsonl", "eval_summary.json"] {
        assert!(cwd.join("eval").join(f).exists(), "{f}");
    }
    let traces = fs::read_to_string(cwd.join("eval/traces.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 1 + 8 * 50);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cwd.join("eval/eval_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["episodes"], 8);

    let o = run("baseline", "baseline", &[]);
    assert!(o.status.success());
    assert!(cwd.join("baseline/baseline_summary.json").exists());

    let o = run("compare", "compare", &ckpt);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 3, "exit {code}");
    let text = stdout(&o);
    assert!(text.contains("PASS") || text.contains("FAIL"));
    let paired = fs::read_to_string(cwd.join("compare/paired.csv")).unwrap();
    assert_eq!(paired.lines().filter(|l| !l.starts_with('#')).count(), 1 + 8);
}

#[test]
fn checkpoint_from_another_config_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    fs::write(cwd.join("tiny.toml"), TINY).unwrap();
    let o = beamguard(&["train", "--config", "tiny.toml", "--out-dir", "t"], cwd);
    assert!(o.status.success());
    let o = beamguard(
        &[
            "eval",
            "--profile",
            "desk",
            "--checkpoint",
            "t/checkpoints/final.ckpt",
            "--out-dir",
            "e",
        ],
        cwd,
    );
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("differs from current config"));
}
