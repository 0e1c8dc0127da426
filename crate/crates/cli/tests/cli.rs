use std::fs;
use std::process::{Command, Output};

fn fogcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogcache")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_writes_solution_and_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fogcache(&["solve", "--synthetic-demand", "60:flat", "--hours", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("# status=optimal"));

    let solution = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(solution.starts_with("variable,value\n"));
    assert!(solution.contains("ffog_n1_t0,"));
    let breakdown = fs::read_to_string(dir.path().join("breakdown.csv")).unwrap();
    assert_eq!(breakdown.lines().count(), 1 + 14 * 2 * 5);
}

#[test]
fn infeasible_instance_exits_with_two() {
    let o = fogcache(&["solve", "--synthetic-demand", "400:flat", "--hours", "1", "--delivery", "fog"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status=infeasible"));
}

#[test]
fn errors_exit_with_one() {
    assert_eq!(fogcache(&["solve"]).status.code(), Some(1));
    assert_eq!(fogcache(&["solve", "--synthetic-demand", "60:weekly"]).status.code(), Some(1));
    assert_eq!(fogcache(&["solve", "--synthetic-demand", "60:flat", "--pue-fog", "0.5"]).status.code(), Some(1));
    assert_eq!(fogcache(&["solve", "--demand", "/nonexistent/demand.csv"]).status.code(), Some(1));
    assert_eq!(fogcache(&["scenario", "D", "--synthetic-demand", "60:flat", "--out", "x"]).status.code(), Some(1));
}

#[test]
fn trace_files_match_synthetic_traces() {
    let dir = tempfile::tempdir().unwrap();
    let (demand, irr) = (dir.path().join("d.csv"), dir.path().join("i.csv"));
    let mut d = String::from("node,hour,value\n");
    let mut i = String::from("node,hour,value\n");
    for n in 1..=14 {
        for h in 0..3 {
            d.push_str(&format!("{n},{h},45\n"));
            i.push_str(&format!("{n},{h},0\n"));
        }
    }
    fs::write(&demand, d).unwrap();
    fs::write(&irr, i).unwrap();
    let from_files = fogcache(&[
        "solve",
        "--demand",
        demand.to_str().unwrap(),
        "--irradiance",
        irr.to_str().unwrap(),
        "--hours",
        "3",
    ]);
    let synthetic = fogcache(&["solve", "--synthetic-demand", "45:flat", "--sun-peak", "0", "--hours", "3"]);
    assert_eq!(from_files.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_files.stderr));
    assert_eq!(stdout(&from_files), stdout(&synthetic));
}

#[test]
fn export_lp_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.lp");
    let b = dir.path().join("b.lp");
    for p in [&a, &b] {
        let o = fogcache(&["export-lp", "--synthetic-demand", "80:diurnal", "--emax", "20", "--exact-fibers", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let parsed = fogcache::milp::parse_lp_str(&text).unwrap();
    assert!(parsed.var("fib_l1_2_t0").is_some());
}

#[test]
fn seed_perturbs_synthetic_traces_reproducibly() {
    let run = |seed: &str| {
        let o = fogcache(&["solve", "--synthetic-demand", "90:flat", "--hours", "2", "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn scenario_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fogcache(&["scenario", "b", "--synthetic-demand", "60:diurnal", "--hours", "24", "--sweep", "0,100", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("scenario_B.svg").exists());
    assert!(dir.path().join("breakdown.csv").exists());
}

#[test]
fn simulate_esd_emits_dispatch_csv() {
    let o = fogcache(&["simulate-esd", "--synthetic-demand", "20:diurnal", "--ssc", "250", "--emax", "30", "--node", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("hour,direct,charged,delivered,soc"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r[4] >= 0.0 && r[4] <= 30.0));
    assert!(rows.iter().any(|r| r[2] > 0.0));

    assert_eq!(fogcache(&["simulate-esd", "--synthetic-demand", "20:flat", "--node", "99"]).status.code(), Some(1));
}
