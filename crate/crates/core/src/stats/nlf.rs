//! Large-finite-cluster decay scans.
//!
//! `P[0 ↔ ∂B_L, 0 ↮ ∂B_{2L}]` stands in for `P[0 ↔ ∂B_L, 0 ↮ ∞]`; replacing
//! infinity by `∂B_{2L}` can only enlarge the event, so the surrogate
//! overestimates the finite-cluster probability.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ensemble::Ensemble;
use super::theta_curve::csv_err;
use crate::error::{invalid, Error, Result};

/// Radii with fewer positive counts are excluded from the fit.
pub const MIN_FIT_COUNT: u64 = 10;
/// Smallest number of usable radii for a fit.
pub const MIN_FIT_RADII: usize = 4;

/// `log p ≈ log_prefactor − c0 · L^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlfFit {
    pub c0: f64,
    pub gamma: f64,
    pub log_prefactor: f64,
    /// Root-mean-square residual in `log p`.
    pub residual: f64,
    pub radii_used: usize,
}

impl NlfFit {
    /// `2 / c0`, the constant fixing the comparison radius for quotients.
    pub fn c3(&self) -> f64 {
        2.0 / self.c0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlfScan {
    pub u: f64,
    pub radii: Vec<u32>,
    pub outer_radii: Vec<u32>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub counts: Vec<u64>,
    pub window_radius: u32,
    pub soups: u64,
    pub seed: u64,
    pub fit: Option<NlfFit>,
    /// Why the fit is missing, when it is.
    pub fit_note: Option<String>,
}

#[derive(Serialize)]
struct Row {
    u: f64,
    #[serde(rename = "L")]
    l: u32,
    #[serde(rename = "L_outer")]
    l_outer: u32,
    p_hat: f64,
    stderr: f64,
    count: u64,
    #[serde(rename = "N")]
    n: u32,
    n_soups: u64,
    seed: u64,
}

impl NlfScan {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        Self::write_all_csv(std::slice::from_ref(self), w)
    }

    /// Rows of several scans under one header.
    pub fn write_all_csv<W: Write>(scans: &[NlfScan], w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        for s in scans {
            for i in 0..s.radii.len() {
                wr.serialize(Row {
                    u: s.u,
                    l: s.radii[i],
                    l_outer: s.outer_radii[i],
                    p_hat: s.estimates[i],
                    stderr: s.stderrs[i],
                    count: s.counts[i],
                    n: s.window_radius,
                    n_soups: s.soups,
                    seed: s.seed,
                })
                .map_err(csv_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn fit(&self) -> Result<NlfFit> {
        self.fit.ok_or_else(|| {
            Error::FitUnavailable(self.fit_note.clone().unwrap_or_else(|| "no fit".into()))
        })
    }
}

/// Estimates the surrogate probabilities at each radius and fits the
/// stretched exponential on radii with enough positive counts.
pub fn nlf_scan(ens: &Ensemble, u: f64, radii: &[u32]) -> Result<NlfScan> {
    ens.check_level(u)?;
    if radii.is_empty() {
        return invalid("no radii given");
    }
    for &l in radii {
        if l == 0 || 2 * l > ens.window_radius() {
            return invalid(format!(
                "radius {l}: need 1 ≤ L and 2L ≤ N = {}",
                ens.window_radius()
            ));
        }
    }
    let n = ens.len() as f64;
    let mut counts = Vec::new();
    for &l in radii {
        let c = ens
            .summaries
            .iter()
            .filter(|s| !s.disconnected(l, u) && s.disconnected(2 * l, u))
            .count() as u64;
        counts.push(c);
    }
    let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let stderrs = estimates
        .iter()
        .map(|p| (p * (1.0 - p) / n).sqrt())
        .collect();
    let usable: Vec<usize> = (0..radii.len())
        .filter(|&i| counts[i] >= MIN_FIT_COUNT)
        .collect();
    let (fit, fit_note) = if usable.len() < MIN_FIT_RADII {
        (
            None,
            Some(format!(
                "{} radii with at least {MIN_FIT_COUNT} positive counts, {MIN_FIT_RADII} needed",
                usable.len()
            )),
        )
    } else {
        let xs: Vec<f64> = usable.iter().map(|&i| radii[i] as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|&i| estimates[i].ln()).collect();
        match fit_stretched_exponential(&xs, &ys) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Ok(NlfScan {
        u,
        radii: radii.to_vec(),
        outer_radii: radii.iter().map(|l| 2 * l).collect(),
        estimates,
        stderrs,
        counts,
        window_radius: ens.window_radius(),
        soups: ens.len() as u64,
        seed: ens.seed,
        fit,
        fit_note,
    })
}

/// Least-squares line `y = a − c·x` and its residual sum of squares.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - slope * mx;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - slope * x).powi(2))
        .sum();
    (a, -slope, rss)
}

/// Fits `log p = a − c0 L^γ` with `γ ∈ (0, 1]`: a grid over `γ`, a golden
/// section refinement, and linear least squares for `(a, c0)` at each `γ`.
pub fn fit_stretched_exponential(radii: &[f64], log_p: &[f64]) -> Result<NlfFit> {
    if radii.len() < 3 || radii.len() != log_p.len() {
        return Err(Error::FitUnavailable("need at least three points".into()));
    }
    let rss_at = |g: f64| {
        let xs: Vec<f64> = radii.iter().map(|l| l.powf(g)).collect();
        line_fit(&xs, log_p)
    };
    let grid: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| rss_at(*a.1).2.total_cmp(&rss_at(*b.1).2))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    let mut lo = if best == 0 { 1e-3 } else { grid[best - 1] };
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if rss_at(a).2 <= rss_at(b).2 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let gamma = (0.5 * (lo + hi)).min(1.0);
    let (a, c0, rss) = rss_at(gamma);
    if c0 <= 0.0 {
        return Err(Error::FitUnavailable(format!(
            "no decay detected (c0 = {c0:.3e})"
        )));
    }
    Ok(NlfFit {
        c0,
        gamma,
        log_prefactor: a,
        residual: (rss / radii.len() as f64).sqrt(),
        radii_used: radii.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_stretched_exponential() {
        let radii = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0];
        for (c0, g) in [(0.7, 0.5), (1.3, 1.0), (0.2, 0.8)] {
            let ys: Vec<f64> = radii.iter().map(|l: &f64| -0.3 - c0 * l.powf(g)).collect();
            let f = fit_stretched_exponential(&radii, &ys).unwrap();
            assert!((f.gamma - g).abs() < 1e-4, "{f:?}");
            assert!((f.c0 - c0).abs() < 1e-3, "{f:?}");
            assert!(f.residual < 1e-6);
        }
    }

    #[test]
    fn increasing_data_has_no_fit() {
        let radii = [1.0, 2.0, 3.0, 4.0];
        let ys = [-3.0, -2.0, -1.0, -0.5];
        assert!(fit_stretched_exponential(&radii, &ys).is_err());
    }
}
