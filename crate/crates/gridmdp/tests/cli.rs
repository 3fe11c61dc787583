use std::path::Path;
use std::process::{Command, Output};

fn gridmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridmdp")).args(args).env_remove("GRIDMDP_DATA_DIR").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_run_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("day");
    let o = gridmdp(&["generate-chronics", "--days", "1", "--seed", "1", "--out", p(&scen)]);
    assert!(o.status.success(), "{o:?}");
    for f in ["load_p.csv", "renewable_potential.csv", "dispatch_p.csv"] {
        let text = std::fs::read_to_string(scen.join(f)).unwrap();
        assert_eq!(text.lines().count(), 1 + 288, "{f}");
    }

    let reports = dir.path().join("reports");
    std::fs::create_dir(&reports).unwrap();
    for agent in ["do-nothing", "expert"] {
        let report = reports.join(format!("{agent}.json"));
        let o = gridmdp(&["run", "--agent", agent, "--scenario", p(&scen), "--report", p(&report)]);
        assert!(o.status.success(), "{o:?}");
        assert!(stdout(&o).contains("survived 287/287"), "{}", stdout(&o));
    }
    let dn = gridmdp::report::RunReport::load(&reports.join("do-nothing.json")).unwrap();
    assert_eq!(dn.score, 0.0);
    assert_eq!(dn.steps.len(), 287);

    let o = gridmdp(&["score", "--reports", p(&reports)]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3, "{out}");
    assert!(out.contains("do-nothing") && out.contains("expert"));
}

#[test]
fn default_scenario_do_nothing_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = gridmdp(&["run", "--agent", "do-nothing", "--report", p(&report)]);
    assert!(o.status.success(), "{o:?}");
    let r = gridmdp::report::RunReport::load(&report).unwrap();
    assert_eq!(r.scenario_id, "seed-1");
    assert_eq!((r.survived, r.horizon), (2015, 2015));
    assert_eq!(r.score, 0.0);
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scenarios");
    let o = gridmdp(&["generate-chronics", "--days", "1", "--seed", "1000", "--out", p(&scen.join("a"))]);
    assert!(o.status.success(), "{o:?}");
    let json = dir.path().join("sweep.json");
    let o = gridmdp(&[
        "sweep",
        "--param",
        "safe-max-rho",
        "--values",
        "0.2,0.9,0.99",
        "--scenarios",
        p(&scen),
        "--json",
        p(&json),
    ]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4, "{out}");
    let t: gridmdp::sweep::SweepTable = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(t.rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![0.2, 0.9, 0.99]);
}

#[test]
fn train_then_run_checkpoint_and_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 1, "ppo": {"total_steps": 400, "hidden": [16, 16]}, "generate": {"days": 1, "seeds": [0]}}"#,
    )
    .unwrap();
    let agents = dir.path().join("agents");
    let ckpt = agents.join("ppo-small");
    let o = gridmdp(&["train-ppo", "--config", p(&cfg), "--out", p(&ckpt)]);
    assert!(o.status.success(), "{o:?}");
    assert!(ckpt.join("policy.json").is_file() && ckpt.join("train_log.json").is_file());

    let scen = dir.path().join("day");
    assert!(gridmdp(&["generate-chronics", "--days", "1", "--out", p(&scen)]).status.success());
    let o = gridmdp(&["run", "--agent", &format!("ppo:{}", p(&ckpt)), "--scenario", p(&scen)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("ppo-small on day"), "{}", stdout(&o));

    gridmdp::checkpoint::save_agent(&agents.join("rules"), &Default::default(), None).unwrap();
    let o = gridmdp(&["run", "--agent", &format!("mixture:{}", p(&agents)), "--scenario", p(&scen)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("mixture on day"));
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    let o = gridmdp(&["run", "--agent", "do-nothing", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(gridmdp(&["run", "--agent", "gambler"]).status.code(), Some(2));
    assert_eq!(gridmdp(&["sweep", "--param", "lr", "--values", "1"]).status.code(), Some(2));
    assert_eq!(gridmdp(&[]).status.code(), Some(2));

    let o = gridmdp(&["run", "--agent", "do-nothing", "--scenario", "/nonexistent/scenario"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gridmdp(&["score", "--reports", p(dir.path())]).status.code(), Some(1));
}
