use std::path::PathBuf;
use std::process::{Command, Output};

use trojan_game::experiments::{load_scenario, Experiment, ResultTable};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trojan-game"));
    c.env("SOURCE_DATE_EPOCH", "1700000000");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn table(out: &Output) -> ResultTable {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    ResultTable::parse_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().last().unwrap()).expect("stderr ends with a json error line")
}

#[test]
fn every_bundled_scenario_loads() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 13);
}

#[test]
fn bundled_modes_match_file_names() {
    let s = load_scenario(scenario("threshold_pt.json")).unwrap();
    assert!(matches!(s.experiment, Experiment::Threshold { bracket } if bracket == (0.1, 50.0)));
    let s = load_scenario(scenario("scenario_pair_2.json")).unwrap();
    assert!(matches!(s.experiment, Experiment::ScenarioPair { pair: 2 }));
    let s = load_scenario(scenario("matching_pennies.json")).unwrap();
    assert_eq!(s.spec.num_trojans(), 2);
    assert_eq!(s.fp.attacker_prior, vec![0.5, 0.5]);
}

#[test]
fn solve_default_case_reports_all_routes() {
    let t = table(&run(&["solve", "--max-iters", "200000"]));
    let routes: Vec<_> = t.rows.iter().map(|r| r[0].to_string()).collect();
    assert_eq!(routes, ["fp", "indifference", "oracle"]);
    assert_eq!(t.meta("mode"), Some("solve"));
    assert_eq!(t.meta("generated_unix"), Some("1700000000"));
    let exact = 68.0 / 31.0;
    assert!((t.get_f64(1, "value").unwrap() - exact).abs() < 1e-12);
    assert!((t.get_f64(2, "value").unwrap() - exact).abs() < 1e-12);
    assert!((t.get_f64(0, "value").unwrap() - exact).abs() < 0.01);
}

#[test]
fn output_file_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&[
            "solve",
            "--scenario",
            scenario("matching_pennies.json").to_str().unwrap(),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
    let t = ResultTable::parse_csv(&ta).unwrap();
    assert_eq!(ResultTable::parse_csv(&t.to_csv_string()).unwrap(), t);
    assert_eq!(t.get_f64(1, "p_a_X"), Some(0.5));
}

#[test]
fn flags_override_scenario() {
    let t = table(&run(&[
        "sweep-fine",
        "--scenario",
        scenario("paper_case.json").to_str().unwrap(),
        "--grid",
        "2,9",
        "--model",
        "eut",
        "--max-iters",
        "20000",
    ]));
    let fines: Vec<_> = t.rows.iter().map(|r| r[t.column_index("fine").unwrap()].as_f64().unwrap()).collect();
    assert!(fines.contains(&2.0) && fines.contains(&9.0));
    assert_eq!(t.meta("mode"), Some("sweep_fine"));
}

#[test]
fn alpha_flags_imply_prospect_model() {
    let t = table(&run(&["solve", "--alpha-a", "0.7", "--max-iters", "20000"]));
    assert_eq!(t.get(0, "model").unwrap().to_string(), "pt");
    assert_eq!(t.get_f64(0, "alpha_a"), Some(0.7));
    assert_eq!(t.get_f64(0, "alpha_d"), Some(1.0));
}

#[test]
fn threshold_bracket_flag() {
    let t = table(&run(&["threshold", "--model", "eut", "--bracket", "1,10"]));
    let f = t.get_f64(0, "f_value").unwrap();
    assert!((f - 3.078_25).abs() < 1e-4, "{f}");
}

#[test]
fn trace_rows_follow_checkpoint_gap() {
    let t = table(&run(&["trace", "--max-iters", "5000", "--checkpoint-gap", "1000", "--tol", "1e-9"]));
    assert_eq!(t.rows.len(), 5);
    assert_eq!(t.get_f64(4, "iteration"), Some(5000.0));
}

#[test]
fn invalid_config_gives_json_error() {
    let e = error_line(&run(&["solve", "--model", "eut", "--alpha-a", "0.5"]));
    assert_eq!(e["error"], "invalid_config");
    let e = error_line(&run(&["solve", "--alpha-a", "1.5"]));
    assert_eq!(e["error"], "alpha_out_of_range");
    let e = error_line(&run(&["sweep-fine", "--grid", "3,2"]));
    assert_eq!(e["error"], "invalid_config");
    let e = error_line(&run(&["threshold", "--bracket", "5"]));
    assert_eq!(e["error"], "invalid_config");
}

#[test]
fn bad_scenarios_give_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    std::fs::write(
        &p,
        r#"{"trojans":[{"id":"A","damage":1},{"id":"B","damage":2}],"uniform_fine":1,"test_budget":2}"#,
    )
    .unwrap();
    let e = error_line(&run(&["solve", "--scenario", p.to_str().unwrap()]));
    assert_eq!(e["error"], "scenario");
    assert!(e["message"].as_str().unwrap().contains("K < T"));

    let e = error_line(&run(&["run", "--scenario", dir.path().join("missing.json").to_str().unwrap()]));
    assert_eq!(e["error"], "io");
}

#[test]
fn usage_errors_are_json_too() {
    let e = error_line(&run(&["frobnicate"]));
    assert_eq!(e["error"], "usage");
    let out = run(&["--help"]);
    assert!(out.status.success());
}
