use std::path::Path;
use std::process::{Command, Output};

fn ibrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibrl")).args(args).output().unwrap()
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

#[test]
fn plan_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("chain.ibrl");
    let b = bundle.to_str().unwrap();
    let args = [
        "plan", "--env", "chain", "--k", "10", "--particles", "30", "--beliefs", "4", "--depth", "4", "--rollouts", "50",
        "--seed", "3", "--out", b,
    ];
    let out = ibrl(&args);
    assert!(out.status.success(), "{}", text(&out));
    assert!(bundle.is_file());

    let out = ibrl(&["inspect", b]);
    assert!(out.status.success(), "{}", text(&out));
    let shown = text(&out);
    assert!(shown.contains("particles         30"), "{shown}");
    assert!(shown.contains("horizon k         10"), "{shown}");

    // same seed, same bytes
    let again = dir.path().join("again.ibrl");
    let mut args2 = args;
    args2[16] = again.to_str().unwrap();
    assert!(ibrl(&args2).status.success());
    assert_eq!(std::fs::read(&bundle).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn eval_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[environment]\nname = \"ipd\"\n[planner]\nhorizon = 5\nparticles = 20\nbeliefs = 4\ndepth = 3\nrollouts = 20\n[protocol]\nopponents = 2\nepisodes = 1\nsteps = 10\n[seeds]\nmaster = 1\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = ibrl(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--agents",
        "ibrl,exploit",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(text(&out).contains("ibrl > exploit"));
    assert!(Path::new(&out_dir.join("results.csv")).is_file());
}

#[test]
fn configuration_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[environment]\nname = \"chain\"\n[seeds]\nmaster = 1\n[agents]\nlist = [\"nobody\"]\n").unwrap();
    let out = ibrl(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));

    let out = ibrl(&["eval", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = ibrl(&["plan", "--env", "moon", "--seed", "1", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_bundles_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.ibrl");
    std::fs::write(&junk, b"not a bundle").unwrap();
    let out = ibrl(&["inspect", junk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out));
}
