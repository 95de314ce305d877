//! Verification suites. Each check returns a [`Verdict`]; suites group
//! checks and choose budgets.

use std::path::Path;

use clap::{Args, ValueEnum};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Outcome, RunRecord};
use crate::error::Result;
use crate::lattice::{equilibrium_sample, green_origin, never_return_frequency, LatticeBox};
use crate::rng::{stream_rng, StreamTag};
use crate::sim::{SoupConfig, SoupSampler, DEFAULT_CAP_SAMPLES};
use crate::solver::{
    dilation_check, dirichlet_energy, distribution_mismatch, green_convolve, green_of_indicator,
    j_curve, lambda_scaling_check, rearrange_radial, solve_min, threshold_scan, Domain, Field,
    MeshSpec,
};
use crate::stats::{
    coupling_violations, difference_quotients, lemma11_identity_check, nlf_scan,
    origin_marginal_check, poisson_tail_check, verify_lemma13_bound, CouplingViolations, Ensemble,
    NlfFit, QuotientConfig,
};
use crate::theta::{build_smoothed_theta, AffineToy, BaseProfile, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Potential,
    Sampler,
    Quotients,
    Solver,
    Rearrangement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// Small windows and sample sizes.
    Quick,
    /// Acceptance-size windows and sample sizes.
    Full,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Master seed of all rng streams.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Sample sizes and windows.
    #[arg(long, value_enum, default_value_t = Budget::Quick)]
    pub budget: Budget,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    /// One line with the measured values and tolerances.
    pub summary: String,
    pub detail: serde_json::Value,
}

impl Verdict {
    fn new(check: &str, pass: bool, summary: String, detail: serde_json::Value) -> Self {
        Verdict {
            check: check.to_string(),
            pass,
            summary,
            detail,
        }
    }
}

/// `green_origin(3)` against its pinned range, and the never-return
/// frequency against `1/g(0,0)`.
pub fn green_oracle(walks: u64, radius: u32, seed: u64) -> Result<Verdict> {
    let g = green_origin(3)?;
    let in_range = (1.51637..=1.51640).contains(&g);
    let est = never_return_frequency(3, walks, radius, seed)?;
    let target = 1.0 / g;
    let z = (est.value - target) / est.stderr;
    Ok(Verdict::new(
        "green-oracle",
        in_range && z.abs() <= 3.0,
        format!(
            "g(0,0) = {g:.6} in [1.51637, 1.51640]: {in_range}; never-return {:.5} ± {:.5} vs {target:.5} (|z| = {:.2} ≤ 3)",
            est.value,
            est.stderr,
            z.abs()
        ),
        json!({ "green": g, "estimate": est, "target": target }),
    ))
}

/// `cap({0})` by escape sampling against `1/g(0,0)`.
pub fn capacity_identity(samples: u64, escape_radius: u32, seed: u64) -> Result<Verdict> {
    let g = green_origin(3)?;
    let m = equilibrium_sample(&LatticeBox::centered(3, 0)?, escape_radius, samples, seed)?;
    let cap = m.capacity;
    let z = (cap.value - 1.0 / g) / cap.stderr;
    Ok(Verdict::new(
        "capacity-identity",
        z.abs() <= 3.0,
        format!(
            "cap({{0}}) = {:.5} ± {:.5} vs 1/g = {:.5} (|z| = {:.2} ≤ 3)",
            cap.value,
            cap.stderr,
            1.0 / g,
            z.abs()
        ),
        json!({ "capacity": cap, "target": 1.0 / g }),
    ))
}

/// Newton potential of the unit ball: `3 − r²` inside, `2/r` outside, and
/// `⟨1_B, G1_B⟩ = 16π/5`.
pub fn newton_oracle() -> Result<Verdict> {
    let dom = Domain::unit_ball();
    let g = green_convolve(&dom.indicator(), &dom)?;
    let exact = green_of_indicator(&dom);
    let err = g
        .values
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    let target = 16.0 * std::f64::consts::PI / 5.0;
    let pairing = dom.inner_domain(&dom.indicator(), &g);
    let rel = ((pairing - target) / target).abs();
    Ok(Verdict::new(
        "newton-oracle",
        err <= 1e-3 && rel <= 1e-3,
        format!("max relative error {err:.2e} ≤ 1e-3; pairing {pairing:.5} vs 16π/5 (rel {rel:.2e} ≤ 1e-3)"),
        json!({ "max_relative_error": err, "pairing": pairing, "target": target }),
    ))
}

pub fn sampler_marginal(ens: &Ensemble, u: f64) -> Result<Verdict> {
    let m = origin_marginal_check(ens, u)?;
    Ok(Verdict::new(
        "sampler-marginal",
        m.holds(),
        format!(
            "P[0 ∈ I^{u}] = {:.4} ± {:.4} vs {:.4} within 3σ (N = {}, {} soups)",
            m.frequency,
            m.stderr,
            m.expected,
            ens.window_radius(),
            ens.len()
        ),
        json!(m),
    ))
}

pub fn poisson_bound(ens: &Ensemble, u: f64, lambdas: &[f64]) -> Result<Verdict> {
    let checks = lambdas
        .iter()
        .map(|&l| poisson_tail_check(ens, u, l))
        .collect::<Result<Vec<_>>>()?;
    let line = checks
        .iter()
        .map(|c| {
            format!(
                "λ={}: {:.5} ≤ {:.5} + 3·{:.5}",
                c.lambda, c.frequency, c.bound, c.stderr
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Verdict::new(
        "poisson-bound",
        checks.iter().all(|c| c.holds()),
        line,
        json!(checks),
    ))
}

/// Samples an ensemble while recounting `{0 ↮ ∂B_L}` on every soup by
/// direct cluster search at each (level, radius) pair.
pub fn coupled_ensemble(
    sampler: &SoupSampler,
    soups: u64,
    seed: u64,
    levels: &[f64],
    radii: &[u32],
) -> Result<(Ensemble, CouplingViolations)> {
    let (ens, per) = Ensemble::from_sampler_with(sampler, soups, seed, |map, summary| {
        let mut scratch = Vec::new();
        coupling_violations(map, summary, levels, radii, &mut scratch)
    })?;
    let mut total = CouplingViolations::default();
    for v in &per {
        total.add(v);
    }
    Ok((ens, total))
}

pub fn coupling_verdict(
    v: &CouplingViolations,
    soups: usize,
    levels: usize,
    radii: &[u32],
) -> Verdict {
    Verdict::new(
        "coupling-monotonicity",
        v.total() == 0,
        format!(
            "{} level, {} radius, {} threshold violations over {soups} soups × {levels} levels × radii {radii:?}",
            v.level, v.radius, v.threshold
        ),
        json!(v),
    )
}

pub fn increment_bound(ens: &Ensemble, levels: &[f64], eps: f64, l: u32) -> Result<Verdict> {
    let reports = levels
        .iter()
        .map(|&u| lemma11_identity_check(ens, u, eps, l))
        .collect::<Result<Vec<_>>>()?;
    let line = reports
        .iter()
        .map(|r| {
            format!(
                "u={}: {:.4} ≥ {:.4} − 3·{:.4}",
                r.u, r.quotient, r.quotient_lower, r.quotient_se
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Verdict::new(
        "increment-lower-bound",
        reports.iter().all(|r| r.lower_bound_holds()),
        line,
        json!(reports),
    ))
}

/// Largest window the comparison run may use.
pub const MAX_QUOTIENT_WINDOW: u32 = 96;

/// Among the stretched-exponential fits available on `levels` whose
/// comparison radii fit in [`MAX_QUOTIENT_WINDOW`], the one demanding the
/// largest radii for `cfg`.
pub fn conservative_fit(
    ens: &Ensemble,
    levels: &[f64],
    radii: &[u32],
    cfg: &QuotientConfig,
) -> Result<Option<(f64, NlfFit)>> {
    let mut best: Option<(f64, NlfFit, f64)> = None;
    for &u in levels {
        let scan = nlf_scan(ens, u, radii)?;
        if let Some(fit) = scan
            .fit
            .filter(|f| cfg.required_window(f) <= MAX_QUOTIENT_WINDOW)
        {
            let (a, b) = cfg.raw_radii(&fit);
            let need = a.max(b);
            if best.as_ref().is_none_or(|x| need > x.2) {
                best = Some((u, fit, need));
            }
        }
    }
    Ok(best.map(|(u, f, _)| (u, f)))
}

/// The comparison bound on `(0.1, 0.11, 0.12)` with the most conservative
/// available fit, on a window sized to hold both comparison radii.
pub fn comparison_bound(ens: &Ensemble, soups: u64, seed: u64) -> Result<Verdict> {
    let cfg = QuotientConfig {
        u: 0.1,
        u_prime: 0.11,
        u_second: 0.12,
        l0: 1,
        soups,
        seed,
        cap_samples: DEFAULT_CAP_SAMPLES,
    };
    let levels = super::grid::parse_grid("0.1:2:0.1")?;
    let levels: Vec<f64> = levels
        .into_iter()
        .filter(|&u| u <= ens.config.u_max)
        .collect();
    let radii: Vec<u32> = (1..=ens.window_radius() / 2).collect();
    let Some((fit_level, fit)) = conservative_fit(ens, &levels, &radii, &cfg)? else {
        return Ok(Verdict::new(
            "comparison-bound",
            false,
            "no stretched-exponential fit with a feasible window on the level grid".into(),
            json!(null),
        ));
    };
    let window = cfg.required_window(&fit);
    let sampler = SoupSampler::new(SoupConfig::new(3, window, cfg.u_second), seed)?;
    let report = difference_quotients(&sampler, &fit, &cfg)?;
    let v = verify_lemma13_bound(&report);
    Ok(Verdict::new(
        "comparison-bound",
        v.holds,
        format!(
            "slack {:.4} ≥ −{:.4} (fit at u = {fit_level}: c3 = {:.4}, γ = {:.3}; L' = {}, L'' = {}, window {window})",
            v.slack,
            v.tolerance,
            fit.c3(),
            fit.gamma,
            report.l_prime,
            report.l_second
        ),
        json!({ "verdict": v, "report": report, "fit_level": fit_level, "window": window }),
    ))
}

/// Affine toy on the unit ball against its closed form, and the affine
/// threshold.
pub fn affine_equivalence() -> Result<Verdict> {
    let dom = Domain::unit_ball();
    let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0)?;
    let r = solve_min(0.5, 0.42, &toy, &dom, &Default::default())?;
    let energy = 0.05f64.powi(2) * 16.0 * std::f64::consts::PI / 5.0;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let errs = [
        rel(r.lambda, 0.05),
        rel(r.properties.max_phi, 0.15),
        rel(r.energy, energy),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let mut ok = worst <= 1e-4;
    let mut thresholds = Vec::new();
    for u_star in [1.5, 2.0, 3.0] {
        let t = AffineToy::new(0.5, 0.3, 1.0, u_star)?;
        let s = threshold_scan(&t, &dom)?;
        let exact = 0.3 + 0.8 * (u_star.sqrt() - 0.5f64.sqrt());
        let err = (s.nu_threshold - exact).abs();
        ok &= err <= 1e-6;
        thresholds.push(json!({ "u_star": u_star, "threshold": s, "error": err }));
    }
    Ok(Verdict::new(
        "affine-equivalence",
        ok,
        format!(
            "λ = {:.8}, ‖φ‖∞ = {:.8}, energy = {:.8} (worst relative error {worst:.2e} ≤ 1e-4); threshold within 1e-6",
            r.lambda, r.properties.max_phi, r.energy
        ),
        json!({ "errors": errs, "thresholds": thresholds }),
    ))
}

/// Every solve of the sweep passes saturation, the box constraint,
/// exterior decay and the dual gap; `λ̃` scales linearly in the excess.
pub fn minimizer_sweep(p: &impl Profile, u: f64, nus: &[f64], dom: &Domain) -> Result<Verdict> {
    let opts = Default::default();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for &nu in nus {
        let r = solve_min(u, nu, p, dom, &opts)?;
        let pr = &r.properties;
        let mut f = pr.failures();
        if pr.decay_spread > 1e-2 {
            f.push(format!("r·φ spread {:.3e} > 1e-2", pr.decay_spread));
        }
        failures.extend(f.into_iter().map(|m| format!("ν = {nu}: {m}")));
        rows.push(json!({
            "nu": nu, "lambda": r.lambda, "constraint_error": pr.constraint_error,
            "max_phi": pr.max_phi, "box_limit": pr.box_limit, "exterior_spread": pr.exterior_spread,
            "decay_spread": pr.decay_spread, "dual_gap": pr.dual_gap,
        }));
    }
    let scaling = lambda_scaling_check(u, p, dom, nus, &opts)?;
    if !scaling.slope_ok {
        failures.push(format!(
            "log-log slope {:.4} outside [0.9, 1.1]",
            scaling.slope
        ));
    }
    if !scaling.lower_bound_ok {
        failures.push("λ̃ below its lower bound".into());
    }
    Ok(Verdict::new(
        "minimizer-properties",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} solves pass saturation 1e-6, box, r·φ within 1e-2, dual gap ≤ 1e-2; slope {:.4} in [0.9, 1.1]",
                nus.len(),
                scaling.slope
            )
        } else {
            failures.join("; ")
        },
        json!({ "solves": rows, "scaling": scaling }),
    ))
}

/// Nonnegative radial test field: a few Gaussian bumps tapered to vanish
/// at the mesh edge.
pub fn random_radial_field(dom: &Domain, seed: u64, index: u64) -> Field {
    let mut rng = stream_rng(seed, StreamTag::Test, index);
    let r_max = dom.radius_of(dom.len() - 1);
    let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            (
                rng.random_range(0.1..1.0),
                rng.random_range(0.0..0.75 * r_max),
                rng.random_range(0.05..0.3) * r_max,
            )
        })
        .collect();
    Field::from_fn(dom, |r| {
        let taper = (1.0 - (r / r_max).powi(2)).powi(2);
        taper
            * bumps
                .iter()
                .map(|(a, c, w)| a * (-(r - c).powi(2) / (2.0 * w * w)).exp())
                .sum::<f64>()
    })
}

/// Distribution functions preserved to one mesh cell and energy not
/// increased beyond 1% on randomized radial fields.
pub fn rearrangement(fields: u64, seed: u64) -> Result<Verdict> {
    let dom = Domain::ball(
        1.0,
        MeshSpec {
            cells: 200,
            extent: 2.0,
        },
    )?;
    let h = dom.spacing();
    let (mut worst_mismatch, mut worst_ratio) = (0.0f64, 0.0f64);
    let mut monotone = true;
    for i in 0..fields {
        let f = random_radial_field(&dom, seed, i);
        let g = rearrange_radial(&f, &dom)?;
        monotone &= g.values.windows(2).all(|w| w[1] <= w[0]);
        worst_mismatch = worst_mismatch.max(distribution_mismatch(&f, &g, &dom)?);
        let (ef, eg) = (dirichlet_energy(&f, &dom)?, dirichlet_energy(&g, &dom)?);
        worst_ratio = worst_ratio.max(eg / ef);
    }
    Ok(Verdict::new(
        "rearrangement",
        monotone && worst_mismatch <= h && worst_ratio <= 1.01,
        format!(
            "{fields} fields: distribution mismatch {worst_mismatch:.2e} ≤ h = {h:.2e}; energy ratio {worst_ratio:.4} ≤ 1.01; nonincreasing: {monotone}"
        ),
        json!({ "mismatch": worst_mismatch, "energy_ratio": worst_ratio, "monotone": monotone }),
    ))
}

/// Strictly increasing `ν ↦ J` and the dilation energy law at scales 0.5
/// and 0.8.
pub fn monotone_j(p: &impl Profile, u: f64, nus: &[f64], dom: &Domain) -> Result<Verdict> {
    let opts = Default::default();
    let curve = j_curve(u, p, dom, nus, &opts);
    let (curve_ok, curve_json) = match &curve {
        Ok(c) => (true, json!(c)),
        Err(e) => (false, json!(e.to_string())),
    };
    let r = solve_min(u, nus[nus.len() / 2], p, dom, &opts)?;
    let dilations = [0.5, 0.8]
        .iter()
        .map(|&s| dilation_check(&r, dom, s))
        .collect::<Result<Vec<_>>>()?;
    let dil_ok = dilations.iter().all(|d| d.energy_ok && d.saturated);
    let worst = dilations
        .iter()
        .map(|d| d.relative_error)
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        "monotone-j",
        curve_ok && dil_ok,
        format!(
            "J strictly increasing over {} points: {curve_ok}; dilation energy law worst error {worst:.2e} ≤ 1e-2",
            nus.len()
        ),
        json!({ "curve": curve_json, "dilations": dilations }),
    ))
}

/// Smoothed linear-base profile used by the quick solver suites.
fn toy_profile() -> Result<crate::theta::SmoothedTheta> {
    build_smoothed_theta(BaseProfile::linear(0.5)?, 0.5, 0.9, 3.0)
}

fn sweep(p: &impl Profile, u: f64, steps: &[f64]) -> Vec<f64> {
    let t = p.theta(u);
    steps.iter().map(|s| t + s).collect()
}

/// Runs one suite and returns its verdicts.
pub fn run_suite(suite: Suite, budget: Budget, seed: u64) -> Result<Vec<Verdict>> {
    let full = budget == Budget::Full;
    Ok(match suite {
        Suite::Potential => vec![
            green_oracle(if full { 1_000_000 } else { 100_000 }, 32, seed)?,
            capacity_identity(if full { 100_000 } else { 10_000 }, 64, seed)?,
            newton_oracle()?,
        ],
        Suite::Sampler => {
            let (n, soups) = if full { (16, 10_000) } else { (8, 2_000) };
            let sampler = SoupSampler::new(SoupConfig::new(3, n, 2.0), seed)?;
            let levels = super::grid::parse_grid("0:2:0.1")?;
            let radii: Vec<u32> = (1..=n).collect();
            let (ens, v) = coupled_ensemble(&sampler, soups, seed, &levels, &radii)?;
            vec![
                sampler_marginal(&ens, 1.0)?,
                poisson_bound(&ens, 0.0, &[0.05, 0.1, 0.2])?,
                coupling_verdict(&v, ens.len(), levels.len(), &radii),
            ]
        }
        Suite::Quotients => {
            let (n, soups) = if full { (32, 10_000) } else { (16, 2_000) };
            let ens = Ensemble::simulate(SoupConfig::new(3, n, 2.0), soups, seed)?;
            vec![
                increment_bound(&ens, &[0.0, 0.2, 0.5], 0.1, n / 2)?,
                comparison_bound(&ens, soups, seed)?,
            ]
        }
        Suite::Solver => {
            let st = toy_profile()?;
            let dom = Domain::unit_ball();
            vec![
                newton_oracle()?,
                affine_equivalence()?,
                minimizer_sweep(
                    &st,
                    0.2,
                    &sweep(&st, 0.2, &[0.001, 0.002, 0.004, 0.008, 0.016]),
                    &dom,
                )?,
            ]
        }
        Suite::Rearrangement => {
            let st = toy_profile()?;
            let dom = Domain::ball(
                1.0,
                MeshSpec {
                    cells: if full { 1000 } else { 400 },
                    extent: 10.0,
                },
            )?;
            let steps: Vec<f64> = (1..=8).map(|k| 0.005 * k as f64).collect();
            vec![
                rearrangement(100, seed)?,
                monotone_j(&st, 0.2, &sweep(&st, 0.2, &steps), &dom)?,
            ]
        }
    })
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    pass: bool,
    verdicts: &'a [Verdict],
}

pub fn run(a: &VerifyArgs, dir: &Path) -> Result<Outcome> {
    let verdicts = run_suite(a.suite, a.budget, a.seed)?;
    let pass = verdicts.iter().all(|v| v.pass);
    let report = Report {
        pass,
        verdicts: &verdicts,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    let name = format!(
        "verify_{}.json",
        serde_json::to_value(a.suite)?.as_str().unwrap_or("suite")
    );
    RunRecord::new("verify", a, vec![], &report).write(dir, &name)?;
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{}: {}", v.check, v.summary))
        .collect();
    Ok(if failed.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Failed(failed)
    })
}
