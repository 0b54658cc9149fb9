use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use navislim_cli::{execute, run, Cli, CliError};

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn args(out: &Path, command: &[&str], sets: &[&str]) -> Vec<String> {
    let mut a = vec!["navislim".to_string()];
    a.extend(command.iter().map(|s| s.to_string()));
    a.push("--set".into());
    a.push(format!("output_dir=\"{}\"", out.display()));
    for s in sets {
        a.push("--set".into());
        a.push(s.to_string());
    }
    a
}

const TINY: &[&str] = &[
    "world.dims=[32, 32, 8]",
    "world.seeds=[5]",
    "oracle.train_paths=20",
    "oracle.val_paths=5",
    "oracle.test_paths=5",
    "oracle.train_distance=[4.0, 10.0]",
    "oracle.val_distance=[4.0, 8.0]",
    "oracle.test_distance=[4.0, 8.0]",
    "nav.hidden=[8]",
    "nav.distill.max_epochs=2",
    "aux.total_steps=150",
    "aux.gate_episodes=2",
    "aux.gate_distance=[4.0, 6.0]",
    "aux.max_steps=20",
    "td3.exploration_steps=60",
    "td3.batch_size=16",
    "td3.actor_hidden=[8]",
    "td3.critic_hidden=[8]",
    "curriculum.start=6.0",
    "curriculum.max=6.0",
    "curriculum.eval_episodes=2",
    "constraint.beta=1.0",
    "eval.distances=[6.0]",
    "eval.episodes_per_bucket=3",
    "eval.aux_episodes=3",
    "eval.aux_distance=[4.0, 6.0]",
    "bench.nav_sizes=[[8], [16, 16]]",
    "bench.observations=8",
    "bench.repeats=1",
];

fn code(out: &Path, command: &[&str], sets: &[&str]) -> i32 {
    run(args(out, command, sets))
}

#[test]
fn invalid_config_exits_with_2() {
    let out = dir("invalid");
    assert_eq!(code(&out, &["gen-world"], &["world.density=1.5"]), 2);
    assert_eq!(code(&out, &["gen-world"], &["world.no_such_key=1"]), 2);
    assert_eq!(code(&out, &["gen-world"], &["mode=X"]), 2);
    assert_eq!(run(["navislim", "gen-world", "--config", "/nonexistent/config.toml"]), 2);
    assert_eq!(run(["navislim", "no-such-command"]), 2);
    assert!(!out.exists(), "nothing is written before validation");
}

#[test]
fn missing_prerequisite_names_the_file() {
    let out = dir("missing");
    let cli = Cli::try_parse_from(args(&out, &["oracle"], &[])).unwrap();
    match execute(&cli) {
        Err(e @ CliError::Dependency { .. }) => {
            assert_eq!(e.exit_code(), 3);
            assert!(e.to_string().contains("world_1.txt"), "{e}");
        }
        other => panic!("expected a dependency error, got {other:?}"),
    }
    let bin = Command::new(env!("CARGO_BIN_EXE_navislim"))
        .args(&args(&out, &["train-aux"], &[])[1..])
        .output()
        .unwrap();
    assert_eq!(bin.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bin.stderr).contains("nav_C.w"));
}

#[test]
fn mixed_config_artifacts_are_rejected() {
    let out = dir("mixed");
    assert_eq!(code(&out, &["gen-world"], &["world.seeds=[1]"]), 0);
    let cli = Cli::try_parse_from(args(&out, &["oracle"], &["world.seeds=[1]", "world.density=0.2"])).unwrap();
    let err = execute(&cli).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("config hash"), "{err}");
}

#[test]
fn tiny_pipeline_produces_every_artifact() {
    let out = dir("tiny");
    for cmd in ["gen-world", "oracle", "train-nav"] {
        assert_eq!(code(&out, &[cmd], TINY), 0, "{cmd}");
    }
    assert_eq!(code(&out, &["train-aux"], TINY), 4, "an untrained policy cannot meet beta = 1");
    for cmd in ["eval", "bench", "report"] {
        assert_eq!(code(&out, &[cmd], TINY), 0, "{cmd}");
    }
    let report_dir = out.join("report/C_s1");
    for f in ["table1.csv", "success_vs_distance.csv", "rmse_vs_setting.csv", "depth_bins.csv", "timing.csv"] {
        assert!(report_dir.join(f).is_file(), "{f}");
    }
    let mut headed = 0;
    for sub in ["worlds", "oracle", "nav", "aux", "eval", "bench", "report/C_s1"] {
        for entry in std::fs::read_dir(out.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let head = navislim_cli::artifacts::read_header(&path).unwrap();
            assert!(head.is_some(), "{} has no header", path.display());
            headed += 1;
        }
    }
    assert!(headed >= 20);
    assert!(out.join("configs/train-aux_C_s1.toml").is_file());

    let before = std::fs::read(report_dir.join("table1.csv")).unwrap();
    assert_eq!(code(&out, &["report"], TINY), 0);
    assert_eq!(before, std::fs::read(report_dir.join("table1.csv")).unwrap());

    let mut changed = TINY.to_vec();
    changed.push("eval.seed=8");
    assert_eq!(code(&out, &["report"], &changed), 3, "logs from another eval config are rejected");
}

#[test]
fn sense_mode_runs_through_the_pipeline() {
    let out = dir("sense");
    let mut sets = TINY.to_vec();
    sets.push("mode=\"S\"");
    sets.push("constraint.beta=100.0");
    sets.push("aux.gate_distance=[2.0, 3.0]");
    for cmd in ["gen-world", "oracle", "train-nav"] {
        assert_eq!(code(&out, &[cmd], &sets), 0, "{cmd}");
    }
    let aux = code(&out, &["train-aux"], &sets);
    assert!(aux == 0 || aux == 4);
    for cmd in ["eval", "bench", "report"] {
        assert_eq!(code(&out, &[cmd], &sets), 0, "{cmd}");
    }
    let rmse = std::fs::read_to_string(out.join("eval/nav_rmse_S.csv")).unwrap();
    assert_eq!(rmse.lines().count(), 2 + 4);
}
