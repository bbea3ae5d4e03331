use std::process::{Command, Output};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/");

fn posg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posg")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{FIXTURES}{name}")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn values(o: &Output) -> Vec<String> {
    let json: serde_json::Value = serde_json::from_str(stdout(o).trim()).unwrap();
    json["values"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect()
}

fn sweep_rows(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',').map(|x| x.parse::<f64>().unwrap());
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect()
}

#[test]
fn solve_one_stage_common_payoff() {
    let o = posg(&["solve", &fixture("tiger-figure7.posg"), "--criterion", "common", "--horizon", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(values(&o), ["1", "1"]);
}

#[test]
fn solve_zero_sum_at_a_certain_belief() {
    let f = fixture("tiger-figure7.posg");
    let o = posg(&["solve", &f, "--criterion", "zerosum", "--horizon", "1", "--start", "1 0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(values(&o), ["0.6666666667", "-0.6666666667"]);
}

#[test]
fn exit_codes() {
    assert_eq!(posg(&["solve", &fixture("does-not-exist.posg")]).status.code(), Some(2));
    assert_eq!(posg(&["verify", &fixture("tiger.posg"), "--suite", "bogus"]).status.code(), Some(4));
    assert_eq!(posg(&["--cap", "5", "solve", &fixture("tiger.posg")]).status.code(), Some(3));
    assert_eq!(posg(&["sweep", &fixture("tiger.posg"), "--grid", "1"]).status.code(), Some(5));
    assert_eq!(posg(&["sweep", &fixture("minimal.posg")]).status.code(), Some(5));
}

#[test]
fn verify_prints_passing_records() {
    let o = posg(&["verify", &fixture("tiger.posg"), "--suite", "sufficiency", "--samples", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(!out.is_empty());
    for line in out.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["passed"], serde_json::Value::Bool(true), "{line}");
    }
}

#[test]
fn evaluate_always_listen() {
    let o = posg(&["evaluate", &fixture("tiger.posg"), "--pure", "0,0", "--episodes", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("agent,value\n1,-4\n2,-4\n"), "{out}");
}

#[test]
fn sweeps_match_the_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("tiger-figure7.posg");
    let common = dir.path().join("common.csv");
    let zs = dir.path().join("zs.csv");
    for (criterion, path) in [("common", &common), ("zerosum", &zs)] {
        let o = posg(&["sweep", &f, "--criterion", criterion, "--horizon", "1", "--output", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let common = sweep_rows(&std::fs::read_to_string(common).unwrap());
    assert_eq!(common.len(), 101);
    for (b, v) in common {
        assert!((v - 1.0f64.max(4.0 * b - 2.0)).abs() < 1e-8, "b={b}: {v}");
    }
    let zs = sweep_rows(&std::fs::read_to_string(zs).unwrap());
    for (b, v) in zs {
        let expected = if b <= 0.5 { 0.0 } else { (4.0 * b - 2.0) / (4.0 * b - 1.0) };
        assert!((v - expected).abs() < 1e-8, "b={b}: {v}");
    }
}

#[test]
fn two_point_sweep_holds_the_endpoints_only() {
    let o = posg(&["sweep", &fixture("tiger-figure7.posg"), "--criterion", "common", "--horizon", "1", "--grid", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(sweep_rows(&stdout(&o)), [(0.0, 1.0), (1.0, 2.0)]);
}

#[test]
fn sweep_output_is_deterministic() {
    let args = ["sweep", &fixture("tiger-figure7.posg"), "--criterion", "zerosum", "--horizon", "1", "--grid", "21"];
    let a = posg(&args);
    let b = posg(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn parse_reports_dimensions() {
    let o = posg(&["parse", &fixture("tiger.posg")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("agents: 2") && out.contains("states: 2"), "{out}");
}
