use pilotwave::error::Error;
use pilotwave::scenario::*;

fn out(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("pilotwave-scenarios-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(cfg: &ScenarioConfig) -> RunReport {
    let opts = RunOptions { out_dir: out(&cfg.scenario.name), stages: vec![] };
    let r = run_scenario(cfg, &opts).unwrap();
    assert!(r.passed(), "{:#?}", r.failed_checks());
    r
}

#[test]
fn every_bundled_scenario_parses_and_round_trips() {
    for (name, _) in BUNDLED {
        let c = bundled(name).unwrap();
        assert_eq!(c.scenario.name, name);
        let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(c.scenario.budget_seconds <= 600.0);
    }
}

#[test]
fn unknown_keys_and_bad_steps_are_config_errors() {
    let text = bundled_text("two_1d_symmetry").unwrap();
    let extra = text.replace("[stepper]\n", "[stepper]\ncolor = 3\n");
    assert!(matches!(ScenarioConfig::from_toml(&extra), Err(Error::Config(_))));
    let negative = text.replace("dt_time = 0.001", "dt_time = -0.001");
    assert!(matches!(ScenarioConfig::from_toml(&negative), Err(Error::Config(_))));
    let coarse = text.replace("dt_time = 0.001", "dt_time = 0.01");
    assert!(matches!(ScenarioConfig::from_toml(&coarse), Err(Error::Config(_))));
}

#[test]
fn fermion_pair_scenario_passes() {
    let r = run(&bundled("two_1d_symmetry").unwrap());
    let v = r.checks.iter().find(|c| c.name == "symmetry.verdict").unwrap();
    assert!(v.passed, "{v:?}");
    assert!(r.artifacts.iter().any(|a| a == "trajectories.csv"));
    assert!(r.to_text().contains("check.symmetry.gamma.12.tolerance = 0.00001"));
}

#[test]
fn anyon_scenario_passes() {
    let r = run(&bundled("two_2d_anyon_static").unwrap());
    assert!(r.checks.iter().filter(|c| c.name.starts_with("winding.n")).count() == 4);
}

#[test]
fn same_seed_gives_identical_payloads() {
    let cfg = bundled("two_1d_symmetry").unwrap();
    let (da, db) = (out("seed-a"), out("seed-b"));
    let a = run_scenario(&cfg, &RunOptions { out_dir: da.clone(), stages: vec![Stage::Trajectories] }).unwrap();
    let b = run_scenario(&cfg, &RunOptions { out_dir: db.clone(), stages: vec![Stage::Trajectories] }).unwrap();
    assert!(diff_reports(&a, &b, 0.0).unwrap().is_empty());
    let csv = |d: &std::path::Path| std::fs::read(d.join("trajectories.csv")).unwrap();
    assert_eq!(csv(&da), csv(&db));
}
