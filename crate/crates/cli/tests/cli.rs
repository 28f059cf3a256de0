use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_isac-sim");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("RUST_BACKTRACE").output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SHORT: [&str; 4] = ["--set", "ddpg.max_steps=150", "--set", "env.horizon=20"];

#[test]
fn empty_value_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--param", "p_max", "--values", "", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty value list"), "{}", stderr(&o));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn unknown_names_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["sweep", "--param", "bandwidth", "--values", "1,2", "--out", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown sweep parameter"));
    let o = run(&["eval", "--baseline", "oracle", "--out", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown baseline"));
    let o = run(&["eval", "--set", "env.gamma=1", "--out", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("env.gamma"), "{}", stderr(&o));
    let o = run(&["train", "--config", "/nonexistent/cfg.toml", "--out", out]);
    assert!(!o.status.success());
    assert!(!stderr(&o).contains("Stack backtrace"));
}

#[test]
fn bad_config_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[env]\nlambda_ee = 0.9\n").unwrap();
    let o = run(&["eval", "--baseline", "random", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!stderr(&o).is_empty());
}

#[test]
fn train_then_reevaluate_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train");
    let mut args = vec!["train", "--seed", "3", "--out", out.to_str().unwrap()];
    args.extend(SHORT);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = read(&out, "curve.csv");
    assert!(curve.starts_with("# schema=isac-sim/curve v1 config_sha256="));
    assert_eq!(curve.lines().count(), 2 + 150);
    assert!(read(&out, "config.toml").contains("max_steps = 150"));

    let ckpt = out.join("checkpoint.txt");
    let eval_dir = dir.path().join("eval");
    let mut args = vec![
        "eval",
        "--baseline",
        "dediff_copilot,random",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--seeds",
        "2",
        "--trace",
        "--heatmap",
        "--out",
        eval_dir.to_str().unwrap(),
    ];
    args.extend(SHORT);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let eval = read(&eval_dir, "eval.csv");
    assert_eq!(eval.lines().count(), 2 + 4);
    assert!(eval.lines().nth(2).unwrap().starts_with("dediff_copilot,0,"));
    assert_eq!(read(&eval_dir, "eval_summary.csv").lines().count(), 2 + 2);
    assert_eq!(read(&eval_dir, "trace_random_seed1.csv").lines().count(), 2 + 20 * 10);
    assert!(eval_dir.join("heatmap.csv").exists());

    // checkpoint dimensions are tied to the number of agents
    let mut args = vec![
        "sweep",
        "--param",
        "n_agents",
        "--values",
        "12",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ];
    args.extend(SHORT);
    let o = run(&args);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));
}

#[test]
fn sweep_outputs_are_deterministic_across_execution_modes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let base = ["sweep", "--param", "n_agents", "--values", "3..4", "--seeds", "2", "--seed", "5"];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--out", a.to_str().unwrap()]);
    args.extend(SHORT);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--out", b.to_str().unwrap(), "--sequential"]);
    args.extend(SHORT);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let sa = read(&a, "sweep.csv");
    assert_eq!(sa, read(&b, "sweep.csv"));
    assert_eq!(read(&a, "config.toml"), read(&b, "config.toml"));
    // 2 values x 2 kinds x 2 seeds
    assert_eq!(sa.lines().count(), 2 + 8);
    assert!(sa.lines().nth(2).unwrap().starts_with("n_agents,3,dediff_copilot,5,"));
}
