use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zopt")).args(args).output().expect("spawn zopt")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SPHERE: &str = r#"
name = "tiny"
[objective]
objective = "sphere"
dim = 3
initial = [1.0, -1.0, 0.5]
[optimizer]
budget_evaluations = 20
seed = 4
[[variants]]
estimator = "spsa"
update_rule = "sgd"
"#;

#[test]
fn version_succeeds() {
    let out = zopt(&["version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("zopt "));
}

#[test]
fn unknown_subcommand_is_a_config_error() {
    assert_eq!(zopt(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_config_file_is_a_config_error() {
    assert_eq!(zopt(&["run", "--config", "/nonexistent/zopt.toml"]).status.code(), Some(1));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SPHERE.replace("seed = 4", "seed = 4\nlearning_rate = 1.0"));
    let out = zopt(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_trajectories_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", SPHERE);
    let out_dir = dir.path().join("out");
    let out = zopt(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--repeats", "3", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let variant = out_dir.join("tiny/spsa");
    for r in 0..3 {
        let csv = fs::read_to_string(variant.join(format!("run_{r}.csv"))).unwrap();
        assert!(csv.starts_with("run_id,iteration,n_evals,loss,a_t,c_t,beta_t,theta_0,theta_1,theta_2\n"));
        // Initial row plus ten updates.
        assert_eq!(csv.lines().count(), 12);
    }
    assert!(!variant.join("run_3.csv").exists());
    let summary = fs::read_to_string(variant.join("summary.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(summary.lines().last().unwrap()).unwrap();
    assert_eq!(last["n_evals"], 20);
    assert_eq!(last["n_runs"], 3);
}

#[test]
fn seed_flag_changes_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", SPHERE);
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let status = zopt(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", seed]).status;
        assert!(status.success());
        fs::read(out_dir.join("tiny/spsa/run_0.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("1", "b"));
    assert_ne!(run("1", "a"), run("2", "c"));
}

#[test]
fn scan_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "cap"
[objective]
objective = "lx"
active_dims = [0, 10]
[scan]
x = { start = 0.0, stop = 1.0, points = 10 }
y = { start = 0.0, stop = 1.0, points = 10 }
max_points = 50
"#;
    let cfg = write(dir.path(), "cap.toml", text);
    let out = zopt(&["scan", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_and_strict_fails_on_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", &format!("{SPHERE}\n[schedules]\nlambda = 0.4\n"));
    let out = zopt(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL momentum"));
    assert_eq!(zopt(&["validate", "--config", &cfg, "--strict"]).status.code(), Some(1));
}

#[test]
fn failing_objective_is_a_runtime_error() {
    // θ³ overflows, so the first gradient estimate is not finite.
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "broken"
[objective]
objective = "cubic"
dim = 2
initial = [1e300, 1e300]
[optimizer]
budget_evaluations = 4
[[variants]]
estimator = "spsa"
"#;
    let cfg = write(dir.path(), "broken.toml", text);
    let out = zopt(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("broken/adam_spsa/run_0.error").exists());
}
