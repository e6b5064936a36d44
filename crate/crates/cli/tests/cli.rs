use std::path::Path;
use std::process::{Command, Output};

fn pilotwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn bundled(name: &str) -> String {
    String::from_utf8(pilotwave(&["bundled", name]).stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn negative_dt_is_a_config_error_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &bundled("two_1d_symmetry").replace("dt_time = 0.001", "dt_time = -0.001"));
    let out = tmp.path().join("out");
    let o = pilotwave(&["--config", &cfg, "--out", out.to_str().unwrap(), "run"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn unknown_key_and_missing_block_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "extra.toml", &bundled("two_1d_symmetry").replace("[grid]\n", "[grid]\nspacing = 1\n"));
    assert_eq!(code(&pilotwave(&["--config", &cfg, "run"])), 2);
    let out = tmp.path().join("o");
    let o = pilotwave(&["--config", "two_1d_symmetry", "--out", out.to_str().unwrap(), "anyon-phase"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&pilotwave(&["--config", "no_such_scenario", "run"])), 2);
}

#[test]
fn classify_passes_and_reports_diff_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = pilotwave(&["--config", "two_1d_symmetry", "--out", d.to_str().unwrap(), "--threads", "1", "classify"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
    }
    let text = std::fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(text.contains("check.symmetry.verdict.detail = got fermion, want fermion"));
    let (ja, jb) = (a.join("report.json"), b.join("report.json"));
    let o = pilotwave(&["diff-reports", ja.to_str().unwrap(), jb.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

#[test]
fn seeds_change_sampled_trajectories_only() {
    let tmp = tempfile::tempdir().unwrap();
    let sampled = bundled("two_1d_symmetry").replace("record_every = 10", "record_every = 10\nstarts = \"sampled\"");
    let cfg = write(tmp.path(), "s.toml", &sampled);
    let run = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        let o = pilotwave(&["--config", &cfg, "--out", d.to_str().unwrap(), "--seed", seed, "trajectories"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        d
    };
    let (a, b) = (run("1", "a"), run("2", "b"));
    let o = pilotwave(&["diff-reports", a.join("report.json").to_str().unwrap(), b.join("report.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let diff = String::from_utf8(o.stdout).unwrap();
    assert!(diff.contains("config seed: 1 -> 2"), "{diff}");
    assert!(diff.contains("payload trajectories.final_mean"), "{diff}");
}

#[test]
fn failed_checks_exit_one_and_still_write_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "wrong.toml", &bundled("two_1d_symmetry").replace("expect = \"fermion\"", "expect = \"boson\""));
    let out = tmp.path().join("out");
    let o = pilotwave(&["--config", &cfg, "--out", out.to_str().unwrap(), "classify"]);
    assert_eq!(code(&o), 1);
    assert!(out.join("report.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL symmetry.verdict"));
}
