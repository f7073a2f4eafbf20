use std::path::Path;
use std::process::{Command, Output};

use lfr_core::analysis::theorem_load;
use lfr_core::model::{parse_rational, Rational};

fn lfr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `p/q (decimal)` cell to its exact value.
fn cell(s: &str) -> Rational {
    parse_rational(s.split_whitespace().next().unwrap()).unwrap()
}

#[test]
fn curve_example_one_row() {
    let o = lfr(&["curve", "--users", "6", "--lambda", "1/12", "--mu-list", "47/72"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mu,rho_proposed,rho_baseline,rho_scalar,variant,g,alpha"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(cell(row[1]), Rational::new(5, 24));
    assert_eq!(cell(row[2]), Rational::new(25, 72));
    assert_eq!(row[1], "5/24 (0.208333333333333)");
}

#[test]
fn curve_grid_dominance() {
    let o = lfr(&["curve", "--users", "6", "--lambda", "1/15", "--grid", "101"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 101);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert!(cell(cells[1]) <= cell(cells[2]), "{row}");
    }
}

#[test]
fn curve_corner_equality() {
    let o = lfr(&["curve", "--users", "6", "--lambda", "1/6", "--mu-list", "1/2"]);
    let text = stdout(&o);
    let cells: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(cell(cells[1]), cell(cells[2]));
}

#[test]
fn curve_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(format!("{name}.csv"));
        let svg = dir.path().join(format!("{name}.svg"));
        let o = lfr(&[
            "curve", "--users", "10", "--lambda", "1/50", "--grid", "41",
            "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(csv).unwrap(), std::fs::read_to_string(svg).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert!(a.1.starts_with("<svg") && a.1.contains("<polyline"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lfr(&["curve", "--users", "6", "--lambda", "0.5", "--grid", "3"]).status.code(), Some(2));
    assert_eq!(lfr(&["curve", "--users", "6", "--lambda", "1/12"]).status.code(), Some(2));
    assert_eq!(lfr(&[]).status.code(), Some(2));
    assert_eq!(
        lfr(&["simulate", "--users", "6", "--mu", "3/2", "--lambda", "1/12"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lfr(&["simulate", "--users", "6", "--mu", "1/2", "--lambda", "1/12", "--variant", "rho9"]).status.code(),
        Some(2)
    );
}

#[test]
fn infeasible_variant_exits_three() {
    let o = lfr(&["simulate", "--users", "6", "--mu", "47/72", "--lambda", "1/12", "--variant", "rho3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("top regime"));
    let o = lfr(&["minrank", "--users", "3", "--symbols", "3", "--rows", "2", "--cache", "2", "--limit", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_example_one() {
    for variant in ["rho1", "rho2"] {
        let o = lfr(&[
            "simulate", "--users", "6", "--mu", "47/72", "--lambda", "1/12", "--field", "3",
            "--variant", variant, "--scale", "2",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains("F=144"), "{text}");
        assert!(text.contains("transmitted 30 symbols (load 5/24)"), "{text}");
        assert!(text.contains("decoded 6/6"), "{text}");
    }
}

#[test]
fn simulate_full_cache_sends_nothing() {
    let o = lfr(&["simulate", "--users", "4", "--mu", "1", "--lambda", "1/4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("transmitted 0 symbols"));
}

#[test]
fn simulate_auto_uses_chosen_variant() {
    for (mu, lambda) in [("47/72", "1/12"), ("1/2", "1/50"), ("5/6", "1/2"), ("11/12", "1/12")] {
        let o = lfr(&["simulate", "--users", "6", "--mu", mu, "--lambda", lambda]);
        assert_eq!(o.status.code(), Some(0));
        let chosen = theorem_load(6, parse_rational(mu).unwrap(), parse_rational(lambda).unwrap())
            .unwrap()
            .chosen_variant;
        assert!(stdout(&o).contains(&format!("variant={chosen} ")), "{}", stdout(&o));
    }
}

fn dump_to(path: &Path, seed: &str) -> Output {
    lfr(&[
        "simulate", "--users", "5", "--mu", "3/10", "--lambda", "1/5", "--field", "7",
        "--variant", "rho2", "--seed", seed, "--dump", path.to_str().unwrap(),
    ])
}

#[test]
fn dump_replay_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dump.json");
    assert_eq!(dump_to(&path, "42").status.code(), Some(0));
    let again = dir.path().join("again.json");
    dump_to(&again, "42");
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());

    let o = lfr(&["verify", "--replay", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let v = json["transcript"]["values"][0].as_u64().unwrap();
    json["transcript"]["values"][0] = ((v + 1) % 7).into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, json.to_string()).unwrap();
    let o = lfr(&["verify", "--replay", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = lfr(&["minrank", "--dump", path.to_str().unwrap(), "--limit", "4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_quick_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = lfr(&["verify", "--suite", "quick", "--kmax", "24", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["lemma1"]["kmax"], 24);
    assert_eq!(json["lemma1"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn example1_reports_expected_numbers() {
    let o = lfr(&["example1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("baseline load 25/72"));
    assert!(text.contains("F=72 rho1: 15 symbols"));
    assert!(text.contains("F=144 rho2: 30 symbols"));
}

#[test]
fn minrank_small_instance() {
    let o = lfr(&["minrank", "--users", "2", "--symbols", "3", "--rows", "1", "--cache", "2", "--variant", "rho3"]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(json["minrank"].as_u64().unwrap() <= json["transcript_len"].as_u64().unwrap());
}
