//! `simulate`, `scan`, `fit` and `solve`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{parse_grid, parse_radii};
use super::{Outcome, RunRecord};
use crate::error::{invalid, Result};
use crate::sim::{SoupConfig, DEFAULT_CAP_SAMPLES};
use crate::solver::{
    solve_min, Domain, FixedPointOptions, MeshSpec, MinimizerResult, Shape, SolveOptions,
};
use crate::stats::{nlf_scan, trajectory_count_check, Ensemble, NlfScan, ThetaCurve};
use crate::theta::{AffineToy, BaseProfile, Profile, SmoothedTheta};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn default_radii(n: u32) -> Vec<u32> {
    (1..=n / 2).collect()
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Lattice dimension.
    #[arg(long = "d", default_value_t = 3)]
    pub d: usize,
    /// Window radius.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    /// Probe radius of the θ curve.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: u32,
    /// Level grid `a:b:step`, single values or comma lists.
    #[arg(long, default_value = "0:2:0.1")]
    pub levels: String,
    /// Independent soups sampled.
    #[arg(long, default_value_t = 10_000)]
    pub soups: u64,
    /// Master seed of all rng streams.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Radii of the near-level scan (default 1..N/2).
    #[arg(long)]
    pub nlf_radii: Option<String>,
    /// Levels of the near-level scan (default: the largest level).
    #[arg(long)]
    pub nlf_levels: Option<String>,
    /// Escape runs per boundary orbit for the window capacity.
    #[arg(long, default_value_t = DEFAULT_CAP_SAMPLES)]
    pub cap_samples: u64,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    ensemble: crate::stats::EnsembleMeta,
    monotone: bool,
    count_mean: f64,
    count_stderr: f64,
    count_intensity: f64,
    fits: Vec<ScanFit>,
}

#[derive(Debug, Serialize)]
struct ScanFit {
    u: f64,
    fit: Option<crate::stats::NlfFit>,
    note: Option<String>,
}

fn ensemble(
    d: usize,
    n: u32,
    u_max: f64,
    soups: u64,
    seed: u64,
    cap_samples: u64,
) -> Result<Ensemble> {
    let config = SoupConfig {
        cap_samples,
        ..SoupConfig::new(d, n, u_max.max(f64::MIN_POSITIVE))
    };
    Ensemble::simulate(config, soups, seed)
}

fn scans(ens: &Ensemble, levels: &[f64], radii: &[u32]) -> Result<(Vec<NlfScan>, Vec<ScanFit>)> {
    let scans: Vec<NlfScan> = levels
        .iter()
        .map(|&u| nlf_scan(ens, u, radii))
        .collect::<Result<_>>()?;
    let fits = scans
        .iter()
        .map(|s| ScanFit {
            u: s.u,
            fit: s.fit,
            note: s.fit_note.clone(),
        })
        .collect();
    Ok((scans, fits))
}

pub fn simulate(a: &SimulateArgs, dir: &Path) -> Result<Outcome> {
    let levels = parse_grid(&a.levels)?;
    if levels[0] < 0.0 {
        return invalid("levels must be nonnegative");
    }
    if a.l == 0 || a.l > a.n {
        return invalid(format!("need 1 ≤ L ≤ N, got L = {}, N = {}", a.l, a.n));
    }
    let radii = match &a.nlf_radii {
        Some(s) => parse_radii(s)?,
        None => default_radii(a.n),
    };
    let nlf_levels = match &a.nlf_levels {
        Some(s) => parse_grid(s)?,
        None => vec![*levels.last().expect("grid is nonempty")],
    };
    let u_max = levels
        .iter()
        .chain(&nlf_levels)
        .cloned()
        .fold(0.0, f64::max);
    let ens = ensemble(a.d, a.n, u_max, a.soups, a.seed, a.cap_samples)?;
    let curve = ThetaCurve::from_ensemble(&ens, &levels, a.l)?;
    curve.write_csv(create(dir, "theta_curve.csv")?)?;
    let (scans, fits) = scans(&ens, &nlf_levels, &radii)?;
    NlfScan::write_all_csv(&scans, create(dir, "nlf_scan.csv")?)?;
    let count = trajectory_count_check(&ens);
    let summary = SimulateSummary {
        ensemble: ens.meta(),
        monotone: curve.is_monotone(),
        count_mean: count.mean,
        count_stderr: count.stderr,
        count_intensity: count.intensity,
        fits,
    };
    let monotone = summary.monotone;
    RunRecord::new(
        "simulate",
        a,
        vec!["theta_curve.csv".into(), "nlf_scan.csv".into()],
        summary,
    )
    .write(dir, "simulate.json")?;
    Ok(if monotone {
        Outcome::Ok
    } else {
        Outcome::Gate(vec!["θ̂ curve decreases along the level grid".into()])
    })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Lattice dimension.
    #[arg(long = "d", default_value_t = 3)]
    pub d: usize,
    /// Window radius.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u32,
    /// Levels to scan.
    #[arg(long, default_value = "0.1:2:0.1")]
    pub levels: String,
    /// Probe radii (default 1..N/2).
    #[arg(long)]
    pub radii: Option<String>,
    /// Independent soups sampled.
    #[arg(long, default_value_t = 10_000)]
    pub soups: u64,
    /// Master seed of all rng streams.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Escape runs per boundary orbit for the window capacity.
    #[arg(long, default_value_t = DEFAULT_CAP_SAMPLES)]
    pub cap_samples: u64,
}

pub fn scan(a: &ScanArgs, dir: &Path) -> Result<Outcome> {
    let levels = parse_grid(&a.levels)?;
    let radii = match &a.radii {
        Some(s) => parse_radii(s)?,
        None => default_radii(a.n),
    };
    let u_max = *levels.last().expect("grid is nonempty");
    let ens = ensemble(a.d, a.n, u_max, a.soups, a.seed, a.cap_samples)?;
    let (scans, fits) = scans(&ens, &levels, &radii)?;
    NlfScan::write_all_csv(&scans, create(dir, "nlf_scan.csv")?)?;
    RunRecord::new("scan", a, vec!["nlf_scan.csv".into()], fits).write(dir, "scan.json")?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// θ curve CSV written by `simulate`.
    #[arg(long, required_unless_present = "toy", conflicts_with = "toy")]
    pub curve: Option<PathBuf>,
    /// Closed-form base instead of a curve, e.g. `linear:0.5`.
    #[arg(long)]
    pub toy: Option<String>,
    /// End of the range where the profile follows the base.
    #[arg(long)]
    pub u0: f64,
    /// Level where the profile reaches 1.
    #[arg(long)]
    pub u1: f64,
    /// Critical level, a configuration value.
    #[arg(long)]
    pub u_star: f64,
    /// Name of the profile file.
    #[arg(long, default_value = "profile.json")]
    pub name: String,
}

pub fn fit(a: &FitArgs, dir: &Path) -> Result<Outcome> {
    if !(a.u0 < a.u1 && a.u1 < a.u_star) {
        return invalid(format!(
            "need u0 < u1 < u_star, got u0 = {}, u1 = {}, u_star = {}",
            a.u0, a.u1, a.u_star
        ));
    }
    let base = match (&a.toy, &a.curve) {
        (Some(t), _) => BaseProfile::toy(t)?,
        (None, Some(path)) => {
            let curve = ThetaCurve::read_csv(File::open(path)?)?;
            let source = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            BaseProfile::fit(&curve, a.u0, source)?
        }
        (None, None) => return invalid("need --curve or --toy"),
    };
    let st = SmoothedTheta::build(base, a.u0, a.u1, a.u_star)?;
    let mut json = st.to_json()?;
    json.push('\n');
    std::fs::write(dir.join(&a.name), json)?;
    let failures = st.checks.failures();
    RunRecord::new("fit", a, vec![a.name.clone()], &st.checks).write(dir, "fit.json")?;
    Ok(if failures.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Gate(failures)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Ball,
    Box,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Profile JSON written by `fit`.
    #[arg(long, required_unless_present = "affine", conflicts_with = "affine")]
    pub profile: Option<PathBuf>,
    /// Affine toy `THETA_U:KAPPA` at level `u`.
    #[arg(long)]
    pub affine: Option<String>,
    /// `u_*` of the affine toy.
    #[arg(long, requires = "affine")]
    pub u_star: Option<f64>,
    /// Level of the problem.
    #[arg(long)]
    pub u: f64,
    /// Target or grid of targets.
    #[arg(long)]
    pub nu: String,
    /// Domain shape: Euclidean ball or sup-norm box.
    #[arg(long, value_enum, default_value_t = ShapeArg::Ball)]
    pub shape: ShapeArg,
    /// Radius or half width.
    #[arg(long, default_value_t = 1.0)]
    pub size: f64,
    /// Cells per radius or half width (default 1000 for balls, 4 for boxes).
    #[arg(long)]
    pub cells: Option<usize>,
    /// Mesh extent in units of the size (default 10 for balls, 2 for boxes).
    #[arg(long)]
    pub extent: Option<f64>,
    /// Fixed-point tolerance in sup norm.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Fixed-point damping factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    /// Fixed-point iteration cap.
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

/// A profile read from disk or built from flags.
#[derive(Debug, Clone)]
pub enum LoadedProfile {
    Smoothed(Box<SmoothedTheta>),
    Affine(AffineToy),
}

impl Profile for LoadedProfile {
    fn theta(&self, v: f64) -> f64 {
        match self {
            LoadedProfile::Smoothed(s) => s.theta(v),
            LoadedProfile::Affine(a) => a.theta(v),
        }
    }

    fn eta(&self, b: f64) -> f64 {
        match self {
            LoadedProfile::Smoothed(s) => s.eta(b),
            LoadedProfile::Affine(a) => a.eta(b),
        }
    }

    fn eta_prime(&self, b: f64) -> f64 {
        match self {
            LoadedProfile::Smoothed(s) => s.eta_prime(b),
            LoadedProfile::Affine(a) => a.eta_prime(b),
        }
    }

    fn eta_prime_sup(&self) -> f64 {
        match self {
            LoadedProfile::Smoothed(s) => s.eta_prime_sup,
            LoadedProfile::Affine(a) => a.eta_prime_sup(),
        }
    }

    fn u_star(&self) -> f64 {
        match self {
            LoadedProfile::Smoothed(s) => s.u_star,
            LoadedProfile::Affine(a) => a.u_star,
        }
    }

    fn fingerprint(&self) -> String {
        match self {
            LoadedProfile::Smoothed(s) => Profile::fingerprint(s.as_ref()),
            LoadedProfile::Affine(a) => a.fingerprint(),
        }
    }

    fn base_limit(&self) -> Option<f64> {
        match self {
            LoadedProfile::Smoothed(s) => Some(s.u0),
            LoadedProfile::Affine(_) => None,
        }
    }
}

fn load_profile(a: &SolveArgs) -> Result<LoadedProfile> {
    if let Some(path) = &a.profile {
        let s = std::fs::read_to_string(path)?;
        return Ok(LoadedProfile::Smoothed(Box::new(SmoothedTheta::from_json(
            &s,
        )?)));
    }
    let spec = a.affine.as_deref().unwrap_or_default();
    let Some((t, k)) = spec.split_once(':') else {
        return invalid(format!("affine toy {spec:?}: expected THETA_U:KAPPA"));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| crate::Error::InvalidArgument(format!("not a number: {s:?}")))
    };
    let Some(u_star) = a.u_star else {
        return invalid("--affine needs --u-star");
    };
    Ok(LoadedProfile::Affine(AffineToy::new(
        a.u,
        parse(t)?,
        parse(k)?,
        u_star,
    )?))
}

fn domain(a: &SolveArgs) -> Result<Domain> {
    let (shape, default) = match a.shape {
        ShapeArg::Ball => (Shape::Ball { radius: a.size }, MeshSpec::radial_default()),
        ShapeArg::Box => (Shape::Box { half_width: a.size }, MeshSpec::box_default()),
    };
    let spec = MeshSpec {
        cells: a.cells.unwrap_or(default.cells),
        extent: a.extent.unwrap_or(default.extent),
    };
    Domain::new(shape, spec)
}

#[derive(Debug, Serialize)]
struct JRow {
    nu: f64,
    j: f64,
    energy_dual: f64,
    lambda: f64,
    constraint: f64,
}

pub fn solve(a: &SolveArgs, dir: &Path) -> Result<Outcome> {
    let nus = parse_grid(&a.nu)?;
    let profile = load_profile(a)?;
    let dom = domain(a)?;
    let opts = SolveOptions {
        fixed_point: FixedPointOptions {
            damping: a.damping,
            tol: a.tol,
            max_iter: a.max_iter,
        },
        ..SolveOptions::default()
    };
    let results: Vec<MinimizerResult> = nus
        .par_iter()
        .map(|&nu| solve_min(a.u, nu, &profile, &dom, &opts))
        .collect::<Result<_>>()?;
    let mut outputs = Vec::new();
    let mut gates = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let name = if results.len() == 1 {
            "minimizer_profile.csv".to_string()
        } else {
            format!("minimizer_profile_{i}.csv")
        };
        r.write_profile_csv(create(dir, &name)?)?;
        outputs.push(name);
        gates.extend(
            r.properties
                .failures()
                .into_iter()
                .map(|f| format!("ν = {}: {f}", r.nu)),
        );
    }
    if results.len() > 1 {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(create(dir, "j_curve.csv")?);
        let e = |e: csv::Error| crate::Error::Format(e.to_string());
        for r in &results {
            wr.serialize(JRow {
                nu: r.nu,
                j: r.energy,
                energy_dual: r.energy_dual,
                lambda: r.lambda,
                constraint: r.constraint,
            })
            .map_err(e)?;
        }
        wr.flush()?;
        outputs.push("j_curve.csv".into());
        for w in results.windows(2) {
            if !(w[1].energy > w[0].energy) {
                gates.push(format!(
                    "J not increasing between ν = {} and ν = {}",
                    w[0].nu, w[1].nu
                ));
            }
        }
    }
    RunRecord::new("solve", a, outputs, &results).write(dir, "solve.json")?;
    Ok(if gates.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Gate(gates)
    })
}
