//! Coupled soup ensembles reduced to per-soup summaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::PotentialEstimate;
use crate::sim::{LevelMap, SoupConfig, SoupSampler, SoupSummary};

/// Summaries of `soups` independent soups from one sampler.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: SoupConfig,
    pub seed: u64,
    pub capacity: PotentialEstimate,
    pub summaries: Vec<SoupSummary>,
}

/// Identity of an ensemble, embedded in every derived record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub dim: usize,
    pub window_radius: u32,
    pub guard_factor: u32,
    pub u_max: f64,
    pub soups: u64,
    pub seed: u64,
    pub capacity: f64,
    pub capacity_stderr: f64,
}

impl Ensemble {
    /// Builds a sampler from `config` and draws `soups` soups, soup `i` from
    /// its own stream of `seed`.
    pub fn simulate(config: SoupConfig, soups: u64, seed: u64) -> Result<Self> {
        let sampler = SoupSampler::new(config, seed)?;
        Self::from_sampler(&sampler, soups, seed)
    }

    pub fn from_sampler(sampler: &SoupSampler, soups: u64, seed: u64) -> Result<Self> {
        Ok(Self::from_sampler_with(sampler, soups, seed, |_, _| ())?.0)
    }

    /// As [`from_sampler`](Self::from_sampler), also applying `inspect` to
    /// each soup's level map before it is discarded.
    pub fn from_sampler_with<T, F>(
        sampler: &SoupSampler,
        soups: u64,
        seed: u64,
        inspect: F,
    ) -> Result<(Self, Vec<T>)>
    where
        T: Send,
        F: Fn(&LevelMap, &SoupSummary) -> T + Sync,
    {
        if soups == 0 {
            return invalid("need at least one soup");
        }
        let results: Vec<(SoupSummary, T)> = (0..soups)
            .into_par_iter()
            .map(|i| {
                let map = LevelMap::sample(sampler, SoupSampler::stream(seed, i))?;
                let s = map.summary();
                let t = inspect(&map, &s);
                Ok((s, t))
            })
            .collect::<Result<_>>()?;
        let (summaries, extra) = results.into_iter().unzip();
        Ok((
            Ensemble {
                config: *sampler.config(),
                seed,
                capacity: sampler.capacity(),
                summaries,
            },
            extra,
        ))
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    pub fn window_radius(&self) -> u32 {
        self.config.window_radius
    }

    pub fn meta(&self) -> EnsembleMeta {
        EnsembleMeta {
            dim: self.config.dim,
            window_radius: self.config.window_radius,
            guard_factor: self.config.guard_factor,
            u_max: self.config.u_max,
            soups: self.len() as u64,
            seed: self.seed,
            capacity: self.capacity.value,
            capacity_stderr: self.capacity.stderr,
        }
    }

    pub(crate) fn check_level(&self, u: f64) -> Result<()> {
        if !(0.0..=self.config.u_max).contains(&u) {
            return invalid(format!("level {u} outside [0, {}]", self.config.u_max));
        }
        Ok(())
    }

    pub(crate) fn check_radius(&self, l: u32) -> Result<()> {
        if l == 0 || l > self.window_radius() {
            return invalid(format!(
                "probe radius {l} outside 1..={}",
                self.window_radius()
            ));
        }
        Ok(())
    }

    /// Sample mean and standard error of `f` over soups.
    pub fn mean_se(&self, f: impl Fn(&SoupSummary) -> f64) -> (f64, f64) {
        mean_se(self.summaries.iter().map(f))
    }
}

pub fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        s += v;
        s2 += v * v;
    }
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let m = s / n;
    let var = if n > 1.0 {
        ((s2 - n * m * m) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (m, (var / n).sqrt())
}
