//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaitspin::config::PipelineConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaitspin"))
}

/// Runs the binary in `dir` and panics with full output on an unexpected
/// exit code.
fn run_in(dir: &Path, args: &[&str], expect: i32) -> Output {
    let output = bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    let code = output.status.code();
    if code != Some(expect) {
        panic!(
            "gaitspin {args:?} exited {code:?}, expected {expect}\nstdout:\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
    }
    output
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// Hexapod default shrunk to a coarse grid and short cycle so the whole
/// pipeline runs in well under a second.
fn small_config(dir: &Path) -> PathBuf {
    let mut config = PipelineConfig::hexapod_default();
    config.grid.resolution = 7;
    config.sampling.m = 12;
    write_config(dir, "small.json", &config)
}

fn write_config(dir: &Path, name: &str, config: &PipelineConfig) -> PathBuf {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(config).unwrap();
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn pipeline_runs_end_to_end_and_reuses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());

    let first = run_in(dir.path(), &["fields", "--config", "small.json"], 0);
    assert!(stdout_of(&first).contains("computed and cached"));

    let second = run_in(dir.path(), &["fields", "--config", "small.json"], 0);
    assert!(stdout_of(&second).contains("cache hit"));

    run_in(dir.path(), &["plan", "--config", "small.json"], 0);
    let sim = run_in(
        dir.path(),
        &["simulate", "--config", "small.json", "--composed"],
        0,
    );
    assert!(stdout_of(&sim).contains("doubling gap"));
    run_in(
        dir.path(),
        &["verify", "--config", "small.json", "--trials", "4"],
        0,
    );

    for artifact in [
        "out/fields.csv",
        "out/plan-x.json",
        "out/trajectory-x.csv",
        "out/trajectory-composed-x.csv",
        "out/metrics-x.json",
        "out/verify-report.json",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let artifacts = [
        "fields.csv",
        "plan-x.json",
        "trajectory-x.csv",
        "metrics-x.json",
        "verify-report.json",
    ];

    let mut snapshots: Vec<Vec<Vec<u8>>> = Vec::new();
    for _ in 0..2 {
        run_in(dir.path(), &["fields", "--config", "small.json"], 0);
        run_in(dir.path(), &["plan", "--config", "small.json"], 0);
        run_in(dir.path(), &["simulate", "--config", "small.json"], 0);
        run_in(
            dir.path(),
            &["verify", "--config", "small.json", "--trials", "3"],
            0,
        );
        let snapshot = artifacts
            .iter()
            .map(|name| std::fs::read(dir.path().join("out").join(name)).unwrap())
            .collect();
        snapshots.push(snapshot);
    }
    for (name, (a, b)) in artifacts.iter().zip(snapshots[0].iter().zip(&snapshots[1])) {
        assert_eq!(a, b, "{name} changed between identical runs");
    }
}

#[test]
fn missing_config_file_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["plan", "--config", "absent.json"], 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot read config"));
}

#[test]
fn simulate_without_a_plan_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let output = run_in(dir.path(), &["simulate", "--config", "small.json"], 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("run the plan command first"));
}

#[test]
fn zero_verification_trials_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    run_in(
        dir.path(),
        &["verify", "--config", "small.json", "--trials", "0"],
        2,
    );
}

#[test]
fn zero_amplitude_gait_reports_exactly_zero_motion() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::hexapod_default();
    config.grid.resolution = 7;
    config.sampling.m = 12;
    config.sampling.amplitude = 0.0;
    write_config(dir.path(), "pinned.json", &config);

    run_in(dir.path(), &["plan", "--config", "pinned.json"], 0);
    run_in(dir.path(), &["simulate", "--config", "pinned.json"], 0);
    let text = std::fs::read_to_string(dir.path().join("out/metrics-x.json")).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&text).unwrap();
    for field in ["delta_x", "delta_y", "delta_theta"] {
        assert_eq!(
            metrics["single"][field].as_f64().unwrap(),
            0.0,
            "{field} of a pinned cycle must be exactly zero"
        );
    }
}

#[test]
fn direction_override_selects_the_lateral_artifact() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    run_in(
        dir.path(),
        &["plan", "--config", "small.json", "--direction", "y"],
        0,
    );
    let text = std::fs::read_to_string(dir.path().join("out/plan-y.json")).unwrap();
    let artifact: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(artifact["direction"], "y");
    assert_eq!(artifact["schema"], "gaitspin/v1");
}

#[test]
fn brute_force_agrees_with_the_domain_wall_method() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::hexapod_default();
    config.grid.resolution = 7;
    config.sampling.m = 6;
    config.contact_filter.min_stance = 5;
    write_config(dir.path(), "tiny.json", &config);

    let mut scores = Vec::new();
    for method in ["domain-wall", "brute"] {
        let out = format!("out-{method}");
        run_in(
            dir.path(),
            &[
                "plan",
                "--config",
                "tiny.json",
                "--method",
                method,
                "--out",
                &out,
            ],
            0,
        );
        let text =
            std::fs::read_to_string(dir.path().join(out).join("plan-x.json")).unwrap();
        let artifact: serde_json::Value = serde_json::from_str(&text).unwrap();
        scores.push(artifact["solution"]["score"].as_f64().unwrap());
    }
    assert_eq!(scores[0], scores[1], "methods disagree on the optimal score");
}

#[test]
fn config_command_prints_a_loadable_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["config", "--robot", "centipede"], 0);
    let config = PipelineConfig::from_json(&stdout_of(&output)).unwrap();
    assert_eq!(config.robot.n_segments, 6);

    let bad = run_in(dir.path(), &["config", "--robot", "octopod"], 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("octopod"));
}
