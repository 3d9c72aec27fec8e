use std::fs;
use std::process::{Command, Output};

fn drep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drep"))
        .args(args)
        .env_remove("DREP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn psucc_prints_twelve_digit_probability() {
    let o = drep(&["psucc", "--efforts", "0.2,0.1", "--tie", "half"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.7\n");
}

#[test]
fn exact_mode_agrees_with_floats_on_ties() {
    let exact = drep(&["psucc", "--efforts", "1/10,1/20,1/20,1/5", "--tie", "favor", "--exact"]);
    assert_eq!(stdout(&exact), "15089/20000\n");
    let float = drep(&["psucc", "--efforts", "0.1,0.05,0.05,0.2", "--tie", "favor"]);
    assert_eq!(stdout(&float), "0.75445\n");
}

#[test]
fn symmetric_success_of_one_drep() {
    let o = drep(&["psucc-sym", "--x", "0.25", "--k", "1"]);
    assert_eq!(stdout(&o), "0.75\n");
}

#[test]
fn three_beat_one_for_quartic_costs_at_small_budgets() {
    let o = drep(&["compare-3v1", "--cost", "power:4", "--budget", "0.02"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "three");
    assert_eq!(v["direct_verdict"], "three");
}

#[test]
fn bounds_report_the_inflection_point() {
    let v = json(&drep(&["bounds", "--cost", "explearn:1,2", "--budget", "10"]));
    assert_eq!(v["x_inflection"], 0.125);
    assert_eq!(v["curvature"], "concave-convex");
    assert!(v["x_tangent"].as_f64().unwrap() < v["x_max"].as_f64().unwrap());
}

#[test]
fn optimize_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.csv");
    let o = drep(&["optimize", "--cost", "explearn:1,2", "--budget", "3", "--k-max", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# drep "));
    assert!(lines[0].contains(", seed 0, config "));
    assert_eq!(lines[1], "k,x_star,cost_spent,p_succ");
    assert_eq!(lines.len(), 8);
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("opt.json")).unwrap()).unwrap();
    assert_eq!(side["k_star"], 1);
    assert_eq!(side["conditional_note"], "conditional on Assumption 1");
}

#[test]
fn identical_invocations_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (name, threads) in [("a.csv", "1"), ("b.csv", "4")] {
        let path = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_drep"))
            .args(["sweep", "--variable", "budget", "--from", "0.1", "--to", "5", "--steps", "9", "--scale", "log"])
            .args(["--cost", "explearn:1,2", "--outputs", "x_star,p_succ,k_star,verdict_3v1"])
            .arg("--out")
            .arg(&path)
            .env("DREP_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(fs::read_to_string(&path).unwrap());
    }
    // the output path is part of the invocation, so only the body is compared
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&texts[0]), body(&texts[1]));
    let rows: Vec<&str> = texts[0].lines().skip(2).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("0.1,"));
    assert!(rows[8].starts_with("5,"));
}

#[test]
fn verify_pairing_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let run = || {
        let o = drep(&["verify", "--suite", "pairing", "--seed", "42", "--samples", "200", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(&out).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["seed"], 42);
}

#[test]
fn failed_verification_exits_one() {
    let o = drep(&["verify", "--suite", "weaker", "--kprime", "7"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["failures"][0]["kind"], "claim");
}

#[test]
fn domain_and_usage_errors_have_distinct_codes() {
    assert_eq!(drep(&["psucc", "--efforts", "0.7"]).status.code(), Some(2));
    assert_eq!(drep(&["bounds", "--cost", "power:2", "--budget=-1"]).status.code(), Some(2));
    assert_eq!(drep(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(drep(&["psucc"]).status.code(), Some(64));
    assert_eq!(drep(&["bounds", "--cost", "cubic:2", "--budget", "1"]).status.code(), Some(64));
    assert_eq!(drep(&["sweep", "--variable", "k", "--from", "3", "--to", "1", "--fixed", "budget=1,beta=2"]).status.code(), Some(64));
    assert_eq!(drep(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"efforts": ["1/5", "1/10"], "tie": "favor"}"#).unwrap();
    let o = drep(&["psucc", "--efforts", "0.5", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "0.7\n");
}

#[test]
fn threshold_equilibrium_report_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    let o = drep(&[
        "equilibrium", "--mechanism", "threshold:2", "--cost", "linear:1", "--budget", "0.5", "--n", "4",
        "--step", "0.05", "--dynamics", "--rounds", "50", "--trajectory", traj.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["analysis"]["support_size"], 2);
    for e in v["symmetric_grid_equilibria"].as_array().unwrap() {
        assert_eq!(e["support"], 2);
        let x = e["effort"].as_f64().unwrap();
        assert!((0.125 - 0.05..=0.25 + 0.05).contains(&x));
    }
    let csv = fs::read_to_string(&traj).unwrap();
    assert_eq!(csv.lines().nth(1), Some("round,player,old_x,new_x,utility_gain"));
}

#[test]
fn variant1_dynamics_keep_cycling() {
    let v = json(&drep(&[
        "equilibrium", "--mechanism", "variant1:2", "--cost", "linear:1", "--budget", "0.6", "--n", "4", "--step", "0.02",
        "--dynamics", "--rounds", "100",
    ]));
    assert_eq!(v["dynamics"]["converged"], false);
}
