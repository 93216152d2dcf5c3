use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn reward_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reward-lab"))
        .args(args)
        .env_remove("REWARD_LAB_SEED")
        .output()
        .expect("spawn reward-lab")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup(dir: &Path) {
    let env = dir.join("env.json");
    let o = reward_lab(&[
        "gen-env",
        "--seed",
        "5",
        "--states",
        "4",
        "--actions",
        "2",
        "--gamma",
        "0.9",
        "--out",
        path(&env),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (seed, name) in [("1", "r1.json"), ("2", "r2.json")] {
        let o = reward_lab(&[
            "gen-rewards",
            "--env",
            path(&env),
            "--seed",
            seed,
            "--out",
            path(&dir.join(name)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn generated_files_are_json_with_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let env: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("env.json")).unwrap()).unwrap();
    assert_eq!(env["n_states"], 4);
    assert_eq!(env["n_actions"], 2);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r1.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 1);
}

#[test]
fn generation_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        assert!(reward_lab(&[
            "gen-env",
            "--seed",
            "9",
            "--states",
            "3",
            "--actions",
            "2",
            "--out",
            path(out)
        ])
        .status
        .success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn distance_of_reward_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let (env, r1) = (dir.path().join("env.json"), dir.path().join("r1.json"));
    let o = reward_lab(&[
        "distance",
        "--env",
        path(&env),
        "--r1",
        path(&r1),
        "--r2",
        path(&r1),
        "--metric",
        "VAL-2-2",
        "--metric",
        "EPIC-2-2",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines, ["VAL-2-2,0", "EPIC-2-2,0"]);
}

#[test]
fn distance_between_different_rewards_is_positive_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let o = reward_lab(&[
        "distance",
        "--env",
        &p("env.json"),
        "--r1",
        &p("r1.json"),
        "--r2",
        &p("r2.json"),
        "--metric",
        "DARD-1-1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let d: f64 = out.trim().strip_prefix("DARD-1-1,").unwrap().parse().unwrap();
    assert!(d > 0.0 && d <= 2.0 + 1e-12);
}

#[test]
fn unknown_metric_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let (env, r1) = (dir.path().join("env.json"), dir.path().join("r1.json"));
    let o = reward_lab(&[
        "distance",
        "--env",
        path(&env),
        "--r1",
        path(&r1),
        "--r2",
        path(&r1),
        "--metric",
        "VAL-7-2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = reward_lab(&[
        "distance",
        "--env",
        path(&missing),
        "--r1",
        path(&missing),
        "--r2",
        path(&missing),
        "--metric",
        "VAL-2-2",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn regret_prints_report_json() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let o = reward_lab(&[
        "regret",
        "--env",
        &p("env.json"),
        "--r1",
        &p("r1.json"),
        "--r2",
        &p("r2.json"),
        "--worst-case",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let regret = v["regret"].as_f64().unwrap();
    let worst = v["worst_case_regret"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&regret));
    assert!(worst + 1e-9 >= v["reg_forward"].as_f64().unwrap());
    assert!(v["pi_1"].is_object() || v["pi_1"].is_array());

    let same = reward_lab(&[
        "regret",
        "--env",
        &p("env.json"),
        "--r1",
        &p("r1.json"),
        "--r2",
        &p("r1.json"),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&same)).unwrap();
    assert_eq!(v["regret"].as_f64(), Some(0.0));
}

#[test]
fn rollout_regret_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let args = [
        "regret",
        "--env",
        &p("env.json"),
        "--r1",
        &p("r1.json"),
        "--r2",
        &p("r2.json"),
        "--mode",
        "rollout",
        "--seed",
        "4",
    ];
    let (a, b) = (reward_lab(&args), reward_lab(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validate_suite_passes_and_bad_suite_is_usage_error() {
    let o = reward_lab(&["validate", "--suite", "counterexamples"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.contains("PASS")));
    assert_eq!(reward_lab(&["validate", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(reward_lab(&[]).status.code(), Some(2));
    assert_eq!(reward_lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn experiment_writes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.cfg");
    fs::write(
        &config,
        "# small run\nn_envs = 2\nn_states = 5\nn_actions = 2\npairs_per_env = 3\ninterp_steps = 4\nmetric_specs = VAL-2-2, EPIC-2-2\nmaster_seed = 17\n",
    )
    .unwrap();
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for (out, par) in outs.iter().zip(["0", "1"]) {
        let o = reward_lab(&[
            "experiment",
            "--config",
            path(&config),
            "--out-dir",
            path(out),
            "--parallelism",
            par,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("metric,correlation,n"));
    }
    for file in [
        "records.csv",
        "summary.csv",
        "summary_by_env.csv",
        "scatter_VAL-2-2.svg",
    ] {
        let a = fs::read(outs[0].join(file)).unwrap_or_else(|_| panic!("missing {file}"));
        assert_eq!(a, fs::read(outs[1].join(file)).unwrap(), "{file} differs");
    }
    let records = fs::read_to_string(outs[0].join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 3 * 4);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    fs::write(&config, "colour = blue\n").unwrap();
    let o = reward_lab(&["experiment", "--config", path(&config), "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}
