//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::time::Instant;

use interlace::cli::verify::{
    affine_equivalence, capacity_identity, comparison_bound, coupled_ensemble, coupling_verdict,
    green_oracle, increment_bound, minimizer_sweep, monotone_j, newton_oracle, poisson_bound,
    rearrangement, sampler_marginal, Verdict,
};
use interlace::cli::{self, parse_grid};
use interlace::sim::{SoupConfig, SoupSampler};
use interlace::solver::Domain;
use interlace::stats::{Ensemble, ThetaCurve};
use interlace::theta::{BaseProfile, SmoothedTheta};
use interlace::{Error, Result};

const SEED: u64 = 7;
const SOUPS: u64 = 10_000;

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, started: Instant, v: Result<Verdict>) {
        let secs = started.elapsed().as_secs_f64();
        match v {
            Ok(v) => {
                if !v.pass {
                    self.failed += 1;
                }
                let tag = if v.pass { "PASS" } else { "FAIL" };
                println!("{tag} [{id:>2}] {title}: {} ({secs:.1}s)", v.summary);
            }
            Err(e) => {
                self.failed += 1;
                println!("FAIL [{id:>2}] {title}: error: {e} ({secs:.1}s)");
            }
        }
    }
}

fn verdict(check: &str, pass: bool, summary: String) -> Verdict {
    Verdict {
        check: check.into(),
        pass,
        summary,
        detail: serde_json::Value::Null,
    }
}

/// Smoothed profile fitted to the simulated curve.
fn fitted_profile(ens: &Ensemble) -> Result<SmoothedTheta> {
    let levels = parse_grid("0:2:0.1")?;
    let curve = ThetaCurve::from_ensemble(ens, &levels, 16)?;
    let base = BaseProfile::fit(&curve, 1.0, "acceptance")?;
    SmoothedTheta::build(base, 1.0, 1.5, 3.0)
}

fn with_profile(
    profile: &Result<SmoothedTheta>,
    f: impl FnOnce(&SmoothedTheta) -> Result<Verdict>,
) -> Result<Verdict> {
    match profile {
        Ok(p) => f(p),
        Err(e) => Err(Error::FitUnavailable(format!("profile: {e}"))),
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).expect("readable output directory") {
        let e = e.expect("directory entry");
        let name = e.file_name().to_string_lossy().into_owned();
        if e.path().is_dir() {
            out.extend(
                files(&e.path())
                    .into_iter()
                    .map(|(n, b)| (format!("{name}/{n}"), b)),
            );
        } else {
            out.push((name, std::fs::read(e.path()).expect("readable output")));
        }
    }
    out.sort();
    out
}

/// Simulate, fit, solve and scan under two worker counts.
fn determinism() -> Result<Verdict> {
    // Both fits read one input path so the recorded configs agree.
    let input = tempfile::tempdir()?;
    let curve = input.path().join("theta_curve.csv");
    let pipeline = |threads: &str, dir: &Path| -> Vec<i32> {
        let d = dir.to_str().expect("utf-8 path");
        let base = ["interlace", "--threads", threads, "--out", d];
        let run = |extra: &[&str]| cli::run(base.iter().chain(extra).copied());
        let scan_dir = dir.join("scan");
        let s = scan_dir.to_str().expect("utf-8 path");
        let scan = ["interlace", "--threads", threads, "--out", s];
        let simulated = run(&[
            "simulate",
            "--N",
            "16",
            "--L",
            "8",
            "--levels",
            "0:2:0.1",
            "--soups",
            "2000",
            "--seed",
            "7",
            "--nlf-levels",
            "1:2:0.5",
        ]);
        let _ = std::fs::copy(dir.join("theta_curve.csv"), &curve);
        vec![
            simulated,
            run(&[
                "fit",
                "--curve",
                curve.to_str().expect("utf-8 path"),
                "--u0",
                "1",
                "--u1",
                "1.5",
                "--u-star",
                "3",
            ]),
            run(&[
                "solve",
                "--affine",
                "0.3:1",
                "--u-star",
                "3",
                "--u",
                "0.5",
                "--nu",
                "0.32:0.42:0.02",
                "--cells",
                "200",
            ]),
            cli::run(scan.into_iter().chain([
                "scan", "--N", "12", "--levels", "0.5,1", "--soups", "1000", "--seed", "7",
            ])),
        ]
    };
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let codes_a = pipeline("1", a.path());
    let codes_b = pipeline("4", b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    let same = fa == fb && codes_a == codes_b;
    Ok(verdict(
        "determinism",
        same && codes_a.iter().all(|&c| c == 0),
        format!("1 vs 4 workers: {} files byte-identical: {same}; exit codes {codes_a:?} {codes_b:?}; files {names:?}", fa.len()),
    ))
}

fn main() {
    let mut report = Report { failed: 0 };
    println!("acceptance: seed {SEED}");

    let t = Instant::now();
    report.record(
        1,
        "Green-function oracle",
        t,
        green_oracle(1_000_000, 32, SEED),
    );

    let t = Instant::now();
    report.record(
        2,
        "Capacity identity",
        t,
        capacity_identity(100_000, 64, SEED),
    );

    let t = Instant::now();
    let small = SoupSampler::new(SoupConfig::new(3, 16, 1.0), SEED)
        .and_then(|s| Ensemble::from_sampler(&s, SOUPS, SEED));
    report.record(
        3,
        "Sampler marginal",
        t,
        small.and_then(|e| sampler_marginal(&e, 1.0)),
    );

    let t = Instant::now();
    let levels = parse_grid("0:2:0.1").expect("valid grid");
    let radii: Vec<u32> = (1..=32).collect();
    let big = SoupSampler::new(SoupConfig::new(3, 32, 2.0), SEED)
        .and_then(|s| coupled_ensemble(&s, SOUPS, SEED, &levels, &radii));
    let (ens, violations) = match big {
        Ok(x) => x,
        Err(e) => {
            println!("FAIL [ 4-7,10,12] ensemble: error: {e}");
            std::process::exit(1);
        }
    };
    let sampled = t.elapsed().as_secs_f64();
    let t = Instant::now();
    report.record(
        4,
        "Poisson bound",
        t,
        poisson_bound(&ens, 0.0, &[0.05, 0.1, 0.2]),
    );
    report.record(
        5,
        "Coupling monotonicity",
        t,
        Ok(coupling_verdict(
            &violations,
            ens.len(),
            levels.len(),
            &radii,
        )),
    );
    println!("       (N = 32 ensemble of {SOUPS} soups sampled in {sampled:.1}s)");
    report.record(
        6,
        "Increment lower bound",
        t,
        increment_bound(&ens, &[0.0, 0.2, 0.5], 0.1, 16),
    );

    let t = Instant::now();
    report.record(
        7,
        "Comparison bound",
        t,
        comparison_bound(&ens, SOUPS, SEED),
    );

    let t = Instant::now();
    report.record(8, "Newton-potential oracle", t, newton_oracle());

    let t = Instant::now();
    report.record(9, "Affine-toy equivalence", t, affine_equivalence());

    let profile = fitted_profile(&ens);
    let dom = Domain::unit_ball();
    let u = 0.5;
    let t = Instant::now();
    let sweep = |steps: &[f64], p: &SmoothedTheta| -> Vec<f64> {
        let base = p.theta(u);
        steps.iter().map(|s| base + s).collect()
    };
    report.record(
        10,
        "Minimizer properties",
        t,
        with_profile(&profile, |p| {
            minimizer_sweep(p, u, &sweep(&[0.001, 0.002, 0.004, 0.008, 0.016], p), &dom)
        }),
    );

    let t = Instant::now();
    report.record(11, "Rearrangement", t, rearrangement(100, SEED));

    let t = Instant::now();
    let steps: Vec<f64> = (1..=8).map(|k| 0.002 * k as f64).collect();
    report.record(
        12,
        "Monotone J curve and dilation",
        t,
        with_profile(&profile, |p| monotone_j(p, u, &sweep(&steps, p), &dom)),
    );

    let t = Instant::now();
    report.record(13, "Determinism", t, determinism());

    println!("acceptance: {} of 13 criteria passed", 13 - report.failed);
    if report.failed > 0 {
        std::process::exit(1);
    }
}
