use std::path::Path;

use interlace::cli::{self, EXIT_GATE, EXIT_OK, EXIT_USAGE, OUT_ENV};
use interlace::theta::SmoothedTheta;

fn run(dir: &Path, args: &[&str]) -> i32 {
    let d = dir.to_str().unwrap();
    cli::run(["interlace", "--out", d].iter().chain(args).copied())
}

fn record(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn toy_fit(dir: &Path) -> SmoothedTheta {
    let code = run(
        dir,
        &[
            "fit",
            "--toy",
            "linear:0.5",
            "--u0",
            "0.5",
            "--u1",
            "0.9",
            "--u-star",
            "3",
        ],
    );
    assert_eq!(code, EXIT_OK);
    SmoothedTheta::from_json(&std::fs::read_to_string(dir.join("profile.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli::run(["interlace"]), EXIT_USAGE);
    assert_eq!(run(dir.path(), &["bogus"]), EXIT_USAGE);
    assert_eq!(run(dir.path(), &["simulate", "--N", "8"]), EXIT_USAGE);
    assert_eq!(
        run(
            dir.path(),
            &[
                "fit",
                "--toy",
                "linear:0.5",
                "--u0",
                "0.5",
                "--u1",
                "3",
                "--u-star",
                "3"
            ]
        ),
        EXIT_USAGE
    );
    assert_eq!(
        run(
            dir.path(),
            &["fit", "--toy", "cubic:1", "--u0", "0.5", "--u1", "0.9", "--u-star", "3"]
        ),
        EXIT_USAGE
    );
    assert_eq!(
        run(
            dir.path(),
            &[
                "solve",
                "--affine",
                "0.3:1",
                "--u-star",
                "3",
                "--u",
                "0.5",
                "--nu",
                "0.5:0.4:0.1"
            ]
        ),
        EXIT_USAGE
    );
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(cli::run(["interlace", "--version"]), EXIT_OK);
    assert_eq!(cli::run(["interlace", "solve", "--help"]), EXIT_OK);
}

#[test]
fn fit_writes_profile_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let p = toy_fit(dir.path());
    assert!((p.theta(0.9) - 1.0).abs() < 1e-12);
    let rec = record(&dir.path().join("fit.json"));
    assert_eq!(rec["tool"], "interlace");
    assert_eq!(rec["version"], cli::VERSION);
    assert_eq!(rec["command"], "fit");
    assert_eq!(rec["config"]["u_star"], 3.0);
    let outputs: Vec<&str> = rec["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(outputs.contains(&"profile.json"));
}

#[test]
fn solve_round_trips_a_saved_profile() {
    let dir = tempfile::tempdir().unwrap();
    let p = toy_fit(dir.path());
    let nus = format!("{},{}", p.theta(0.2) + 0.002, p.theta(0.2) + 0.004);
    let profile = dir.path().join("profile.json");
    let code = run(
        dir.path(),
        &[
            "solve",
            "--profile",
            profile.to_str().unwrap(),
            "--u",
            "0.2",
            "--nu",
            &nus,
            "--cells",
            "200",
        ],
    );
    assert_eq!(code, EXIT_OK);
    let curve = std::fs::read_to_string(dir.path().join("j_curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next().unwrap(), "nu,j,energy_dual,lambda,constraint");
    let j: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(j.len(), 2);
    assert!(j[0] > 0.0 && j[1] > j[0]);
    for i in 0..2 {
        let prof =
            std::fs::read_to_string(dir.path().join(format!("minimizer_profile_{i}.csv"))).unwrap();
        assert!(prof.starts_with("r,phi\n"));
        assert!(!prof.contains('\r'));
    }
    assert_eq!(record(&dir.path().join("solve.json"))["command"], "solve");
}

#[test]
fn large_excess_is_a_gate() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        &[
            "solve", "--affine", "0.3:1", "--u-star", "1", "--u", "0.5", "--nu", "0.9", "--cells",
            "100",
        ],
    );
    assert_eq!(code, EXIT_GATE);
    let rec = record(&dir.path().join("solve.json"));
    assert_eq!(rec["result"][0]["regime"], "auxiliary-only");
}

#[test]
fn target_at_or_above_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        &[
            "solve", "--affine", "0.3:1", "--u-star", "3", "--u", "0.5", "--nu", "1.2",
        ],
    );
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn environment_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var(OUT_ENV, dir.path());
    let code = cli::run([
        "interlace",
        "fit",
        "--toy",
        "linear:0.5",
        "--u0",
        "0.5",
        "--u1",
        "0.9",
        "--u-star",
        "3",
    ]);
    std::env::remove_var(OUT_ENV);
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("profile.json").exists());
}

#[test]
fn quick_solver_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(dir.path(), &["verify", "solver", "--budget", "quick"]),
        EXIT_OK
    );
    let rec = record(&dir.path().join("verify_solver.json"));
    assert_eq!(rec["result"]["pass"], true);
    assert!(rec["result"]["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["pass"] == true));
}
