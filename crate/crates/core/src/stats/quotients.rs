//! Difference quotients of `θ_{0,L}` and the comparison bound between them.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::ensemble::mean_se;
use super::nlf::NlfFit;
use crate::error::{invalid, Error, Result};
use crate::lattice::{equilibrium_sample, LatticeBox, PotentialEstimate};
use crate::sim::{LevelMap, SoupSampler};

/// Quotients at probe radii tied to the level gaps through the decay fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub u: f64,
    pub u_prime: f64,
    pub u_second: f64,
    pub l_prime: u32,
    pub l_second: u32,
    /// Unclipped radius for `u'` before flooring.
    pub l_prime_raw: f64,
    pub delta_prime: f64,
    pub delta_prime_se: f64,
    pub delta_second: f64,
    pub delta_second_se: f64,
    /// `cap(B_{L'})`.
    pub cap: PotentialEstimate,
    /// Standard error of `Δ̃' − e^{(u''−u')cap} Δ̃''`, from per-soup differences.
    pub combined_se: f64,
    pub soups: u64,
    pub fit: NlfFit,
}

/// `floor((c3 · ln(1/gap))^{1/γ})`, clipped below at `l0`; `None` when it
/// exceeds `n`.
pub fn comparison_radius(fit: &NlfFit, gap: f64, l0: u32, n: u32) -> (f64, Option<u32>) {
    let log = (1.0 / gap).ln().max(0.0);
    let raw = (fit.c3() * log).powf(1.0 / fit.gamma);
    let l = raw.floor();
    if l > n as f64 {
        return (raw, None);
    }
    (raw, Some((l as u32).max(l0).max(1)))
}

/// Levels and budgets of a quotient run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientConfig {
    pub u: f64,
    pub u_prime: f64,
    pub u_second: f64,
    /// Lower clip `L₀` of both radii.
    pub l0: u32,
    pub soups: u64,
    pub seed: u64,
    /// Samples per boundary orbit for `cap(B_{L'})`.
    pub cap_samples: u64,
}

impl QuotientConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 <= self.u && self.u < self.u_prime && self.u_prime <= self.u_second) {
            return invalid("need 0 ≤ u < u' ≤ u''");
        }
        if self.soups == 0 || self.cap_samples == 0 {
            return invalid("soup and capacity budgets must be positive");
        }
        Ok(())
    }

    /// Unclipped `(L', L'')` before flooring.
    pub fn raw_radii(&self, fit: &NlfFit) -> (f64, f64) {
        let n = u32::MAX;
        (
            comparison_radius(fit, self.u_prime - self.u, self.l0, n).0,
            comparison_radius(fit, self.u_second - self.u, self.l0, n).0,
        )
    }

    /// Smallest window radius that is a multiple of 8 and holds both radii.
    pub fn required_window(&self, fit: &NlfFit) -> u32 {
        let (a, b) = self.raw_radii(fit);
        let need = a.max(b).floor().max(self.l0 as f64).max(1.0) as u32;
        need.div_ceil(8).saturating_mul(8)
    }
}

/// Estimates `Δ̃' = (θ_{0,L'}(u') − θ_{0,L'}(u))/(u'−u)` and the analogue at
/// `(u'', L'')` on coupled soups from `sampler`, plus `cap(B_{L'})`.
///
/// Each soup only needs connectivity at three levels, so the origin's cluster
/// is explored depth first with early exit instead of solving for every level.
pub fn difference_quotients(
    sampler: &SoupSampler,
    fit: &NlfFit,
    cfg: &QuotientConfig,
) -> Result<QuotientReport> {
    cfg.validate()?;
    let QuotientConfig {
        u,
        u_prime,
        u_second,
        ..
    } = *cfg;
    if u_second > sampler.config().u_max {
        return invalid(format!(
            "level {u_second} above sampler maximum {}",
            sampler.config().u_max
        ));
    }
    let n = sampler.config().window_radius;
    let (raw1, l1) = comparison_radius(fit, u_prime - u, cfg.l0, n);
    let (raw2, l2) = comparison_radius(fit, u_second - u, cfg.l0, n);
    let l1 = l1.ok_or(Error::WindowTooSmall {
        window: n,
        required: raw1,
    })?;
    let l2 = l2.ok_or(Error::WindowTooSmall {
        window: n,
        required: raw2,
    })?;
    let cap_box = LatticeBox::centered(sampler.config().dim, l1)?;
    let cap = equilibrium_sample(&cap_box, 8 * l1, cfg.cap_samples, cfg.seed)?.capacity;
    let reach_max = l1.max(l2);
    let pairs: Vec<(bool, bool)> = (0..cfg.soups)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let map = LevelMap::sample(sampler, SoupSampler::stream(cfg.seed, i))?;
            let hits = |v: f64, l: u32, scratch: &mut Vec<u32>| {
                map.reach(v, l, scratch).is_some_and(|r| r >= l)
            };
            let base = map.reach(u, reach_max, scratch);
            let at_u = |l: u32| base.is_some_and(|r| r >= l);
            let first = at_u(l1) && !hits(u_prime, l1, scratch);
            let second = at_u(l2) && !hits(u_second, l2, scratch);
            Ok((first, second))
        })
        .collect::<Result<_>>()?;
    let g1 = u_prime - u;
    let g2 = u_second - u;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let (d1, se1) = mean_se(pairs.iter().map(|p| ind(p.0) / g1));
    let (d2, se2) = mean_se(pairs.iter().map(|p| ind(p.1) / g2));
    let e = ((u_second - u_prime) * cap.value).exp();
    let (_, combined) = mean_se(pairs.iter().map(|p| ind(p.0) / g1 - e * ind(p.1) / g2));
    Ok(QuotientReport {
        u,
        u_prime,
        u_second,
        l_prime: l1,
        l_second: l2,
        l_prime_raw: raw1,
        delta_prime: d1,
        delta_prime_se: se1,
        delta_second: d2,
        delta_second_se: se2,
        cap,
        combined_se: combined,
        soups: cfg.soups,
        fit: *fit,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    /// Bound minus the observed discrepancy.
    pub slack: f64,
    pub bound: f64,
    pub discrepancy: f64,
    pub sigma: f64,
    /// `3σ` plus the finite-volume gaps `(u'−u) + e^{(u''−u')cap}(u''−u)`.
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares `|Δ̃' − e^{(u''−u')cap} Δ̃''|` with
/// `3(u''−u)(1 + cap²) e^{(u''−u')cap}`, `cap = cap(B_{L'})`.
pub fn verify_lemma13_bound(r: &QuotientReport) -> ComparisonVerdict {
    let cap = r.cap.value;
    let e = ((r.u_second - r.u_prime) * cap).exp();
    let bound = 3.0 * (r.u_second - r.u) * (1.0 + cap * cap) * e;
    let discrepancy = (r.delta_prime - e * r.delta_second).abs();
    let slack = bound - discrepancy;
    let sigma = r.combined_se;
    let tolerance = 3.0 * sigma + (r.u_prime - r.u) + e * (r.u_second - r.u);
    ComparisonVerdict {
        slack,
        bound,
        discrepancy,
        sigma,
        tolerance,
        holds: slack >= -tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_radius_clips_and_refuses() {
        let fit = NlfFit {
            c0: 1.0,
            gamma: 1.0,
            log_prefactor: 0.0,
            residual: 0.0,
            radii_used: 4,
        };
        // c3 = 2, ln(100) = 4.605 -> 9.21
        let (raw, l) = comparison_radius(&fit, 0.01, 2, 32);
        assert!((raw - 2.0 * 100f64.ln()).abs() < 1e-12);
        assert_eq!(l, Some(9));
        assert_eq!(comparison_radius(&fit, 0.9, 3, 32).1, Some(3));
        assert_eq!(comparison_radius(&fit, 1e-9, 1, 32).1, None);
    }

    #[test]
    fn equal_levels_give_trivial_bound() {
        let r = QuotientReport {
            u: 0.1,
            u_prime: 0.2,
            u_second: 0.2,
            l_prime: 4,
            l_second: 4,
            l_prime_raw: 4.0,
            delta_prime: 0.5,
            delta_prime_se: 0.01,
            delta_second: 0.5,
            delta_second_se: 0.01,
            cap: PotentialEstimate {
                value: 10.0,
                stderr: 0.1,
                samples: 1,
                escape_radius: 32,
            },
            combined_se: 0.0,
            soups: 1,
            fit: NlfFit {
                c0: 1.0,
                gamma: 1.0,
                log_prefactor: 0.0,
                residual: 0.0,
                radii_used: 4,
            },
        };
        let v = verify_lemma13_bound(&r);
        assert_eq!(v.discrepancy, 0.0);
        assert!((v.bound - 3.0 * 0.1 * 101.0).abs() < 1e-12);
        assert!(v.holds);
    }

    #[test]
    fn early_exit_matches_thresholds() {
        use crate::sim::SoupConfig;
        let sampler = SoupSampler::new(SoupConfig::new(3, 8, 1.2), 3).unwrap();
        let fit = NlfFit {
            c0: 1.0,
            gamma: 1.0,
            log_prefactor: 0.0,
            residual: 0.0,
            radii_used: 4,
        };
        let cfg = QuotientConfig {
            u: 0.4,
            u_prime: 0.7,
            u_second: 1.1,
            l0: 1,
            soups: 60,
            seed: 11,
            cap_samples: 50,
        };
        let r = difference_quotients(&sampler, &fit, &cfg).unwrap();
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..cfg.soups {
            let s = LevelMap::sample(&sampler, SoupSampler::stream(cfg.seed, i))
                .unwrap()
                .summary();
            let t1 = s.threshold(r.l_prime).unwrap();
            let t2 = s.threshold(r.l_second).unwrap();
            a += if cfg.u < t1 && t1 <= cfg.u_prime {
                1.0
            } else {
                0.0
            };
            b += if cfg.u < t2 && t2 <= cfg.u_second {
                1.0
            } else {
                0.0
            };
        }
        let n = cfg.soups as f64;
        assert!((r.delta_prime - a / n / 0.3).abs() < 1e-12);
        assert!((r.delta_second - b / n / 0.7).abs() < 1e-12);
        assert!(r.delta_prime > 0.0);
    }

    #[test]
    fn required_window_covers_radii() {
        let fit = NlfFit {
            c0: 0.2,
            gamma: 1.0,
            log_prefactor: 0.0,
            residual: 0.0,
            radii_used: 4,
        };
        let cfg = QuotientConfig {
            u: 0.1,
            u_prime: 0.11,
            u_second: 0.12,
            l0: 1,
            soups: 1,
            seed: 0,
            cap_samples: 1,
        };
        // 10 ln 100 = 46.05
        assert_eq!(cfg.required_window(&fit), 48);
    }
}
