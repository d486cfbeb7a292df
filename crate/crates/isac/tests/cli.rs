use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use isac::artifact::RunArtifact;
use isac::scenario_file::PAPER_SCENARIO;
use isac_core::model;

fn isac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_variant(dir: &Path, name: &str, from: &str, to: &str) -> String {
    assert!(PAPER_SCENARIO.contains(from));
    fs::write(dir.join(name), PAPER_SCENARIO.replace(from, to)).unwrap();
    name.to_string()
}

#[test]
fn validate_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(&["validate", "paper"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("max_min_illumination:"));
    assert!(text.contains("status: ok"));
}

#[test]
fn validate_reports_infeasible_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_variant(dir.path(), "hot.scenario", "gamma_dbw = -20.0", "gamma_dbw = -5.0");
    let o = isac(&["validate", &f], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("status: infeasible"));
}

#[test]
fn bad_scenarios_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write_variant(dir.path(), "dup.scenario", "p_max = 3.0", "p_max = 3.0\np_max = 4.0");
    let slow = write_variant(dir.path(), "slow.scenario", "v_max = 10.0", "v_max = 0.0");
    let both = write_variant(dir.path(), "both.scenario", "gamma_dbw = -20.0", "gamma_dbw = -20.0\ngamma = 0.01");
    for f in [dup.as_str(), slow.as_str(), both.as_str(), "missing.scenario"] {
        let o = isac(&["validate", f], dir.path());
        assert_eq!(code(&o), 2, "{f}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&isac(&["solve"], dir.path())), 2);
    assert_eq!(code(&isac(&["baseline", "paper", "--method", "proposed"], dir.path())), 2);
}

#[test]
fn solve_writes_a_feasible_artifact_and_beampattern() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(&["solve", "paper", "--slots", "4", "--seed", "7", "--out", "run.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let art = RunArtifact::read(&dir.path().join("run.json")).unwrap();
    assert_eq!(art.seed, 7);
    assert_eq!(art.method, "proposed");
    let s = art.scenario().unwrap();
    let d = art.design().unwrap();
    assert!(model::check_constraints(&d, &s).is_empty());
    assert!((model::average_sum_rate(&d, &s).unwrap() - art.average_sum_rate).abs() < 1e-9);
    let slots = fs::read_to_string(dir.path().join("run.slots.csv")).unwrap();
    assert_eq!(slots.lines().count(), 1 + 4 * 2);

    let o = isac(&["beampattern", "run.json", "--slot", "1", "--nx", "7", "--ny", "5", "--out", "bp.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let grid = fs::read_to_string(dir.path().join("bp.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 7 * 5);
    assert_eq!(grid.lines().next(), Some("x,y,power_dbw"));
    let uavs = fs::read_to_string(dir.path().join("bp.uavs.csv")).unwrap();
    assert_eq!(uavs.lines().count(), 1 + 2);

    assert_eq!(code(&isac(&["beampattern", "run.json", "--slot", "4"], dir.path())), 2);
}

#[test]
fn solve_above_floor_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(&["solve", "paper", "--slots", "3", "--gamma-dbw", "-5"], dir.path());
    assert_eq!(code(&o), 1);
    let o = isac(&["baseline", "paper", "--slots", "3", "--method", "isotropic", "--gamma-dbw", "-15"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_table_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["sweep", "paper", "--slots", "3", "--max-outer", "3", "--gamma-dbw", "-20,-5", "--out", out];
    assert_eq!(code(&isac(&args("a.csv"), dir.path())), 0);
    assert_eq!(code(&isac(&args("b.csv"), dir.path())), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "gamma_dbw,method,feasible,avg_rate");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1..4].iter().all(|l| l.starts_with("-20,") && l.contains(",true,")));
    assert!(lines[4..].iter().all(|l| l.starts_with("-5,") && l.ends_with(",false,")));
}

#[test]
fn dump_writes_one_file_per_subproblem() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(
        &["baseline", "paper", "--slots", "3", "--max-outer", "1", "--method", "straight", "--dump-cbf", "cbf"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = fs::read_dir(dir.path().join("cbf")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    let first = fs::read_to_string(dir.path().join("cbf/problem-00000.cbf")).unwrap();
    assert!(first.starts_with("VER\n3\n"));
    assert!(first.contains("PSDCON"));
}
