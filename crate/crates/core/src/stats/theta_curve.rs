//! Finite-volume percolation function `θ_{0,L}(u) = P[0 ↮ ∂B_L in 𝓥^u]`.
//!
//! `θ_{0,L}` increases to `θ₀` as `L → ∞`, so every estimate here brackets the
//! infinite-volume value from below.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ensemble::Ensemble;
use crate::error::{invalid, Error, Result};
use crate::sim::SoupConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCurve {
    pub levels: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub probe_radius: u32,
    pub window_radius: u32,
    pub soups: u64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    u: f64,
    theta_hat: f64,
    stderr: f64,
    #[serde(rename = "L")]
    l: u32,
    #[serde(rename = "N")]
    n: u32,
    n_soups: u64,
    seed: u64,
}

impl ThetaCurve {
    /// Averages the coupled indicators `1{u ≥ t_L}` of every soup.
    pub fn from_ensemble(ens: &Ensemble, levels: &[f64], l: u32) -> Result<Self> {
        ens.check_radius(l)?;
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("levels must be strictly ascending");
        }
        for &u in levels {
            ens.check_level(u)?;
        }
        let n = ens.len() as f64;
        let mut estimates = Vec::with_capacity(levels.len());
        let mut stderrs = Vec::with_capacity(levels.len());
        for &u in levels {
            let hits = ens
                .summaries
                .iter()
                .filter(|s| s.disconnected(l, u))
                .count() as f64;
            let p = hits / n;
            estimates.push(p);
            stderrs.push((p * (1.0 - p) / n).sqrt());
        }
        Ok(ThetaCurve {
            levels: levels.to_vec(),
            estimates,
            stderrs,
            probe_radius: l,
            window_radius: ens.window_radius(),
            soups: ens.len() as u64,
            seed: ens.seed,
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// True when estimates never decrease along the levels.
    pub fn is_monotone(&self) -> bool {
        self.estimates.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        for i in 0..self.len() {
            wr.serialize(Row {
                u: self.levels[i],
                theta_hat: self.estimates[i],
                stderr: self.stderrs[i],
                l: self.probe_radius,
                n: self.window_radius,
                n_soups: self.soups,
                seed: self.seed,
            })
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let rows: Vec<Row> = rd
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err)?;
        let first = rows
            .first()
            .ok_or_else(|| Error::Format("empty theta curve".into()))?;
        let (l, n, soups, seed) = (first.l, first.n, first.n_soups, first.seed);
        if rows
            .iter()
            .any(|r| r.l != l || r.n != n || r.n_soups != soups || r.seed != seed)
        {
            return Err(Error::Format("inconsistent metadata columns".into()));
        }
        Ok(ThetaCurve {
            levels: rows.iter().map(|r| r.u).collect(),
            estimates: rows.iter().map(|r| r.theta_hat).collect(),
            stderrs: rows.iter().map(|r| r.stderr).collect(),
            probe_radius: l,
            window_radius: n,
            soups,
            seed,
        })
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Samples an ensemble on `B_N` with `u_max` the largest level and estimates
/// the curve at probe radius `L`.
pub fn estimate_theta_curve(
    dim: usize,
    levels: &[f64],
    l: u32,
    n: u32,
    soups: u64,
    seed: u64,
) -> Result<ThetaCurve> {
    if l > n {
        return invalid(format!("probe radius {l} exceeds window radius {n}"));
    }
    let u_max = levels
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ens = Ensemble::simulate(SoupConfig::new(dim, n, u_max), soups, seed)?;
    ThetaCurve::from_ensemble(&ens, levels, l)
}
