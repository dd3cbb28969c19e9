use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lawless"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn born_example() {
    let r = report(&["born", "--probs", "0.36,0.64", "--eps", "1e-6"]);
    assert_eq!(
        r["result"]["probabilities"],
        serde_json::json!([0.36, 0.64])
    );
    assert_eq!(r["result"]["bound"], 0.0);
    assert_eq!(r["result"]["partition"]["denominator"], 25);
    assert_eq!(r["command"], "born");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"]["born"]["eps"], 1e-6);
    assert_eq!(r["status"], "ok");

    let out = run(&["born", "--coeffs", "0.6,0.8", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("index,coefficient,target,count,probability,error\n0,0.6,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn born_phase_check_is_reported() {
    let r = report(&["born", "--probs", "0.5,0.25,0.25", "--phases", "0.3,1.2,-2"]);
    assert_eq!(r["result"]["phase_invariant"], true);
}

#[test]
fn phenomenon_example() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let r = report(&[
        "phenomenon",
        "--scenario",
        "penrose",
        "--trials",
        "100000",
        "--seed",
        "42",
        "--log",
        log.to_str().unwrap(),
    ]);
    let a = &r["result"]["analysis"];
    assert_eq!(a["backward"]["beta1"]["alpha1"], 1.0);
    let p = a["forward"]["alpha1"]["beta1"].as_f64().unwrap();
    assert!((p - 0.5).abs() <= 0.0047, "{p}");
    assert_eq!(r["result"]["time_direction"]["direction"], "forward");

    // the written log analyses to the same tables, and backwards reads as backward
    let again = report(&[
        "phenomenon",
        "--scenario",
        "penrose",
        "--analyze",
        log.to_str().unwrap(),
        "--seed",
        "42",
    ]);
    assert_eq!(again["result"]["analysis"], r["result"]["analysis"]);
    let rev = report(&[
        "phenomenon",
        "--analyze",
        log.to_str().unwrap(),
        "--reverse",
    ]);
    assert_eq!(rev["result"]["time_direction"]["direction"], "backward");

    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("trial_index,initial,final\n0,alpha1,"));
    assert_eq!(text.lines().count(), 100_001);
}

#[test]
fn phenomenon_csv_is_the_log() {
    let out = run(&[
        "phenomenon",
        "--scenario",
        "three-outcome",
        "--trials",
        "5",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("trial_index,initial,final\n"));
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sg.json");
    let sc = lawless_core::phenomenon::stern_gerlach();
    std::fs::write(&path, serde_json::to_string(&sc.to_file()).unwrap()).unwrap();
    let from_file = report(&[
        "phenomenon",
        "--scenario",
        path.to_str().unwrap(),
        "--trials",
        "200",
        "--seed",
        "9",
    ]);
    let builtin = report(&[
        "phenomenon",
        "--scenario",
        "stern-gerlach",
        "--trials",
        "200",
        "--seed",
        "9",
    ]);
    assert_eq!(from_file["result"], builtin["result"]);
}

#[test]
fn holonomy_zero_is_identity() {
    let square = data("square.csv");
    let r = report(&[
        "holonomy",
        "--preset",
        "zero",
        "--curve",
        square.to_str().unwrap(),
    ]);
    assert_eq!(r["result"]["matrix"], serde_json::json!([[[1.0, 0.0]]]));
    assert_eq!(r["resolved"]["field"]["preset"], "zero");
    assert_eq!(r["resolved"]["curve"][1], serde_json::json!([0.5, -0.5]));
}

#[test]
fn holonomy_modes() {
    let r = report(&[
        "holonomy",
        "--preset",
        "solenoid",
        "--mode",
        "phase",
        "--curve",
        data("square.csv").to_str().unwrap(),
    ]);
    assert_eq!(r["result"]["winding"], 1);
    assert!((r["result"]["phase"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);

    let f = data("su2_bump.json");
    let r = report(&[
        "holonomy",
        "--field",
        f.to_str().unwrap(),
        "--mode",
        "small-loop",
        "--point",
        "0.2,0.1",
    ]);
    assert!(r["result"]["slope"].as_f64().unwrap() >= 2.7);
    let r = report(&[
        "holonomy",
        "--field",
        f.to_str().unwrap(),
        "--mode",
        "gauge",
        "--seed",
        "4",
    ]);
    assert!(r["result"]["residual"].as_f64().unwrap() <= 1e-6);

    let t = data("torsion.json");
    let r = report(&["holonomy", "--field", t.to_str().unwrap(), "--steps", "16"]);
    // 5×5 affine block plus the U(1) factor
    assert_eq!(r["result"]["matrix"].as_array().unwrap().len(), 6);

    let r = report(&[
        "holonomy",
        "--preset",
        "u1-linear",
        "--params",
        "{\"b\": 2.0}",
        "--factors",
        "u1:0.5",
        "--steps",
        "4",
    ]);
    // exp(−i e b · area) with e = 0.5, b = 2, unit square
    let z = &r["result"]["matrix"][0][0];
    assert!((z[0].as_f64().unwrap() - 1f64.cos()).abs() < 1e-14);
    assert!((z[1].as_f64().unwrap() + 1f64.sin()).abs() < 1e-14);
}

#[test]
fn modular_defaults_pass() {
    let r = report(&["modular"]);
    assert_eq!(r["resolved"]["spec"]["sep"], 16.0);
    assert_eq!(r["result"]["exchanges"].as_array().unwrap().len(), 4);
    let r2 = report(&["modular", "--spec", data("packet.json").to_str().unwrap()]);
    assert_eq!(r["result"], r2["result"]);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["born", "--probs", "0.3,0.3"]).status.code(), Some(2));
    assert_eq!(run(&["born"]).status.code(), Some(2));
    assert_eq!(
        run(&["born", "--probs", "0.5,0.5", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["holonomy", "--field", "missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["holonomy", "--preset", "zero", "--factors", "so7"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["phenomenon", "--scenario", "nonesuch"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["modular", "--sep", "1"]).status.code(), Some(2));
    assert_eq!(run(&["modular", "--grid", "1000"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\"chart_dim\": 2, \"factors\": [\"u1\"], \"preset\": \"warp\"}",
    )
    .unwrap();
    let out = run(&["holonomy", "--field", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(
        msg.contains("schema error") && msg.lines().count() == 1,
        "{msg}"
    );

    // unattainable tolerances are failures, not crashes
    let out = run(&[
        "born",
        "--probs",
        "0.3,0.7",
        "--eps",
        "1e-12",
        "--max-denominator",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let path = dir.path().join("r.json");
    let out = run(&[
        "holonomy",
        "--preset",
        "su2-bump",
        "--tol",
        "1e-300",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["status"], "tolerance-failure");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["born", "--coeffs", "0.6,0.8"],
        &["phenomenon", "--trials", "5000", "--seed", "11"],
        &["modular", "--alpha", "0.7"],
        &[
            "holonomy", "--preset", "su2-bump", "--mode", "gauge", "--steps", "64", "--seed", "5",
        ],
    ];
    for args in cases {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let p = dir.path().join(format!("{}-{k}.json", args[0]));
                let mut full = args.to_vec();
                full.extend(["--out", p.to_str().unwrap()]);
                assert_eq!(run(&full).status.code(), Some(0));
                std::fs::read(&p).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{}", args[0]);
    }
    let a = run(&[
        "phenomenon",
        "--trials",
        "100",
        "--seed",
        "1",
        "--format",
        "csv",
    ])
    .stdout;
    let b = run(&[
        "phenomenon",
        "--trials",
        "100",
        "--seed",
        "2",
        "--format",
        "csv",
    ])
    .stdout;
    assert_ne!(a, b);
}

#[test]
fn log_level_from_environment() {
    let out = bin()
        .args(["born", "--probs", "0.5,0.5"])
        .env("LAWLESS_LOG", "info")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("running born"));
    let out = bin()
        .args(["born", "--probs", "0.5,0.5"])
        .env_remove("LAWLESS_LOG")
        .output()
        .unwrap();
    assert!(out.stderr.is_empty());
}
