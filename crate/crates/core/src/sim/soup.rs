//! Window-restricted random interlacements.
//!
//! Restricted to the window `B_N`, the interlacement at level `u` is the trace
//! of `Poisson(u · cap(B_N))` independent walks entering through `ē_{B_N}`.
//! Giving every walk a uniform label on `(0, u_max]` couples all levels
//! `u ≤ u_max`: the level-`u` configuration keeps the walks with label `≤ u`.
//! Walks are followed until they leave the guard box `B_{mN}`; long
//! excursions outside the window are jumped over with exact box-exit tables.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{
    equilibrium_sample_with, Coords, EquilibriumMeasure, HopKit, LatticeBox, LatticePoint,
    PotentialEstimate, DEFAULT_STEP_CAP, MAX_DIM,
};
use crate::rng::{Rng, StreamId, StreamTag};

pub const DEFAULT_GUARD_FACTOR: u32 = 8;
pub const DEFAULT_CAP_SAMPLES: u64 = 4000;

/// Parameters of a soup sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoupConfig {
    pub dim: usize,
    pub window_radius: u32,
    pub guard_factor: u32,
    pub u_max: f64,
    /// Escape runs per boundary symmetry class for the capacity estimate.
    pub cap_samples: u64,
}

impl SoupConfig {
    pub fn new(dim: usize, window_radius: u32, u_max: f64) -> Self {
        SoupConfig {
            dim,
            window_radius,
            guard_factor: DEFAULT_GUARD_FACTOR,
            u_max,
            cap_samples: DEFAULT_CAP_SAMPLES,
        }
    }
}

/// Index arithmetic for the origin-centered window.
#[derive(Debug, Clone)]
pub(crate) struct WindowGeometry {
    pub dim: usize,
    pub radius: i64,
    pub stride: [i64; MAX_DIM],
    pub volume: usize,
    pub origin: usize,
    /// Sup-norm of every site.
    pub shell: Vec<u32>,
    /// Bit `2i` (`2i+1`) set when the site has no neighbour in direction
    /// `−e_i` (`+e_i`) inside the window.
    pub border: Vec<u16>,
}

impl WindowGeometry {
    pub fn new(window: &LatticeBox) -> Self {
        let d = window.dim();
        let side = window.side();
        let mut stride = [0i64; MAX_DIM];
        let mut s = 1i64;
        for st in stride.iter_mut().take(d) {
            *st = s;
            s *= side as i64;
        }
        let r = window.radius() as i64;
        let mut shell = Vec::with_capacity(window.volume());
        let mut border = Vec::with_capacity(window.volume());
        for i in 0..window.volume() {
            let x = window.array_at(i);
            shell.push(window.sup_from_center(&x) as u32);
            let mut m = 0u16;
            for (a, &c) in x.iter().enumerate().take(d) {
                if c == -r {
                    m |= 1 << (2 * a);
                }
                if c == r {
                    m |= 1 << (2 * a + 1);
                }
            }
            border.push(m);
        }
        WindowGeometry {
            dim: d,
            radius: window.radius() as i64,
            stride,
            volume: window.volume(),
            origin: window.volume() / 2,
            shell,
            border,
        }
    }

    #[inline]
    pub fn index(&self, x: &Coords) -> usize {
        let mut idx = 0i64;
        for i in 0..self.dim {
            idx += (x[i] + self.radius) * self.stride[i];
        }
        idx as usize
    }

    /// Calls `f` with each in-window nearest neighbour of `idx`.
    #[inline]
    pub fn for_neighbors(&self, idx: usize, mut f: impl FnMut(usize)) {
        let m = self.border[idx];
        for i in 0..self.dim {
            let st = self.stride[i] as usize;
            if m & (1 << (2 * i)) == 0 {
                f(idx - st);
            }
            if m & (1 << (2 * i + 1)) == 0 {
                f(idx + st);
            }
        }
    }
}

/// One labeled walk restricted to the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: f64,
    /// Window index of the entry site.
    pub entry: u32,
    /// Sorted distinct window indices visited.
    pub trace: Vec<u32>,
}

/// Labeled Poisson collection of walk traces in a window.
#[derive(Debug, Clone)]
pub struct TrajectorySoup {
    pub window: LatticeBox,
    pub guard: LatticeBox,
    pub u_max: f64,
    /// Poisson mean `u_max · cap(window)` the count was drawn from.
    pub intensity: f64,
    pub cap_estimate: PotentialEstimate,
    pub stream: StreamId,
    /// Sorted by ascending label.
    pub trajectories: Vec<Trajectory>,
}

impl TrajectorySoup {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.label).collect()
    }
}

/// Everything needed to draw soups for one window: the capacity estimate,
/// the entry distribution and the hop tables.
#[derive(Debug, Clone)]
pub struct SoupSampler {
    config: SoupConfig,
    window: LatticeBox,
    guard: LatticeBox,
    measure: EquilibriumMeasure,
    entries: Vec<Coords>,
    entry_index: Vec<u32>,
    entry_alias: WeightedAliasIndex<f64>,
    kit: HopKit,
    pub(crate) geometry: Arc<WindowGeometry>,
    step_cap: u64,
}

impl SoupSampler {
    /// Estimates `cap(B_N)` with escape truncated at the guard radius `mN`.
    ///
    /// Using the guard radius for both the capacity estimate and the walk
    /// cut-off makes the two truncations consistent: the sampled soup is the
    /// exact interlacement of the walk killed on leaving `B_{mN}`.
    pub fn new(config: SoupConfig, seed: u64) -> Result<Self> {
        if config.guard_factor < 4 {
            return invalid(format!("guard factor {} < 4", config.guard_factor));
        }
        if !(config.u_max > 0.0 && config.u_max.is_finite()) {
            return invalid("u_max must be positive and finite");
        }
        if config.window_radius == 0 {
            return invalid("window radius must be positive");
        }
        let window = LatticeBox::centered(config.dim, config.window_radius)?;
        let guard_radius = config
            .window_radius
            .checked_mul(config.guard_factor)
            .ok_or_else(|| Error::InvalidArgument("guard radius overflows".into()))?;
        let kit = HopKit::new(config.dim)?;
        let measure =
            equilibrium_sample_with(&window, guard_radius, config.cap_samples, seed, &kit)?;
        Self::from_measure(config, measure, kit)
    }

    /// Builds a sampler around an existing capacity estimate of the window.
    pub fn from_measure(
        config: SoupConfig,
        measure: EquilibriumMeasure,
        kit: HopKit,
    ) -> Result<Self> {
        let window = LatticeBox::centered(config.dim, config.window_radius)?;
        if measure.domain != window {
            return invalid("equilibrium measure is for a different box");
        }
        let guard = LatticeBox::centered(config.dim, config.window_radius * config.guard_factor)?;
        let geometry = Arc::new(WindowGeometry::new(&window));
        let weights = measure.site_weights();
        let entries: Vec<Coords> = weights.iter().map(|(p, _)| p.to_array()).collect();
        let entry_index = entries.iter().map(|x| geometry.index(x) as u32).collect();
        let entry_alias = WeightedAliasIndex::new(weights.iter().map(|(_, w)| *w).collect())
            .map_err(|e| Error::InvalidArgument(format!("entry distribution: {e}")))?;
        Ok(SoupSampler {
            config,
            window,
            guard,
            measure,
            entries,
            entry_index,
            entry_alias,
            kit,
            geometry,
            step_cap: DEFAULT_STEP_CAP,
        })
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn config(&self) -> &SoupConfig {
        &self.config
    }

    pub fn window(&self) -> &LatticeBox {
        &self.window
    }

    pub fn guard(&self) -> &LatticeBox {
        &self.guard
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        &self.measure
    }

    pub fn capacity(&self) -> PotentialEstimate {
        self.measure.capacity
    }

    pub fn intensity(&self) -> f64 {
        self.config.u_max * self.measure.capacity.value
    }

    /// Draws the count and sorted labels, then entry sites in label order.
    fn draw_headers(&self, rng: &mut Rng) -> Vec<(f64, usize)> {
        let lambda = self.intensity();
        let k = if lambda > 0.0 {
            Poisson::new(lambda)
                .expect("finite positive mean")
                .sample(rng) as usize
        } else {
            0
        };
        let mut labels: Vec<f64> = (0..k)
            .map(|_| self.config.u_max * (1.0 - rng.random::<f64>()))
            .collect();
        labels.sort_by(f64::total_cmp);
        labels
            .into_iter()
            .map(|l| (l, self.entry_alias.sample(rng)))
            .collect()
    }

    /// Follows one walk from entry `e` until it leaves the guard, calling
    /// `visit` with the window index of every in-window step.
    fn run_walk(&self, e: usize, rng: &mut Rng, mut visit: impl FnMut(u32)) -> Result<()> {
        let g = &self.geometry;
        let d = g.dim;
        let n = g.radius;
        let outer = self.guard.radius() as i64;
        let mut x = self.entries[e];
        let mut idx = self.entry_index[e] as i64;
        let mut steps = 0u64;
        loop {
            // inside the window: plain steps with incremental indexing
            loop {
                visit(idx as u32);
                let dir = rng.random_range(0..2 * d as u32) as usize;
                let a = dir >> 1;
                let s = if dir & 1 == 0 { 1 } else { -1 };
                x[a] += s;
                steps += 1;
                if x[a].abs() > n {
                    break;
                }
                idx += s * g.stride[a];
            }
            // outside: hop until re-entry or guard exit
            loop {
                if steps > self.step_cap {
                    return Err(Error::StepCap(self.step_cap));
                }
                let m = x[..d].iter().map(|c| c.abs()).max().unwrap_or(0);
                if m <= n {
                    idx = g.index(&x) as i64;
                    break;
                }
                if m > outer {
                    return Ok(());
                }
                let room = (m - n - 1).min(outer - m);
                if !self.kit.hop(&mut x, room, rng) {
                    let dir = rng.random_range(0..2 * d as u32) as usize;
                    x[dir >> 1] += if dir & 1 == 0 { 1 } else { -1 };
                }
                steps += 1;
            }
        }
    }

    /// Draws one soup with full traces.
    pub fn sample(&self, stream: StreamId) -> Result<TrajectorySoup> {
        let mut rng = stream.rng();
        let headers = self.draw_headers(&mut rng);
        let mut trajectories = Vec::with_capacity(headers.len());
        for (label, e) in headers {
            let mut trace = Vec::new();
            self.run_walk(e, &mut rng, |i| trace.push(i))?;
            trace.sort_unstable();
            trace.dedup();
            trajectories.push(Trajectory {
                label,
                entry: self.entry_index[e],
                trace,
            });
        }
        Ok(TrajectorySoup {
            window: self.window.clone(),
            guard: self.guard.clone(),
            u_max: self.config.u_max,
            intensity: self.intensity(),
            cap_estimate: self.capacity(),
            stream,
            trajectories,
        })
    }

    /// Draws the same soup as [`sample`](Self::sample) but only keeps, for
    /// each site, the index of the first (lowest-label) walk visiting it.
    pub fn sample_ranks(&self, stream: StreamId) -> Result<(Vec<f64>, Vec<u32>)> {
        let mut rng = stream.rng();
        let headers = self.draw_headers(&mut rng);
        let k = headers.len() as u32;
        let mut rank = vec![k; self.geometry.volume];
        for (i, &(_, e)) in headers.iter().enumerate() {
            let i = i as u32;
            self.run_walk(e, &mut rng, |s| {
                let r = &mut rank[s as usize];
                if *r > i {
                    *r = i;
                }
            })?;
        }
        Ok((headers.into_iter().map(|(l, _)| l).collect(), rank))
    }

    /// Stream identity of soup number `index` for run seed `seed`.
    pub fn stream(seed: u64, index: u64) -> StreamId {
        StreamId::new(seed, StreamTag::Soup, index)
    }

    pub fn entry_point(&self, index: u32) -> LatticePoint {
        self.window.point_at(index as usize)
    }
}

/// Builds a sampler for `B(0, window_radius)` with guard factor `m` and draws
/// soup number 0 of `seed`.
pub fn sample_soup(
    dim: usize,
    window_radius: u32,
    u_max: f64,
    guard_factor: u32,
    seed: u64,
) -> Result<TrajectorySoup> {
    let config = SoupConfig {
        guard_factor,
        ..SoupConfig::new(dim, window_radius, u_max)
    };
    SoupSampler::new(config, seed)?.sample(SoupSampler::stream(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SoupSampler {
        SoupSampler::new(
            SoupConfig {
                cap_samples: 500,
                ..SoupConfig::new(3, 4, 1.5)
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn traces_stay_in_window_and_contain_entry() {
        let s = small();
        let soup = s.sample(SoupSampler::stream(2, 0)).unwrap();
        let vol = s.window().volume() as u32;
        assert!(soup
            .trajectories
            .windows(2)
            .all(|w| w[0].label <= w[1].label));
        for t in &soup.trajectories {
            assert!(t.label > 0.0 && t.label <= 1.5);
            assert!(t.trace.binary_search(&t.entry).is_ok());
            assert!(t.trace.iter().all(|&i| i < vol));
            assert!(s.window().on_boundary(&s.entry_point(t.entry)));
        }
    }

    #[test]
    fn rank_path_matches_full_traces() {
        let s = small();
        for i in 0..5 {
            let st = SoupSampler::stream(3, i);
            let soup = s.sample(st).unwrap();
            let (labels, rank) = s.sample_ranks(st).unwrap();
            assert_eq!(labels, soup.labels());
            let k = labels.len() as u32;
            let mut expect = vec![k; rank.len()];
            for (j, t) in soup.trajectories.iter().enumerate() {
                for &x in &t.trace {
                    expect[x as usize] = expect[x as usize].min(j as u32);
                }
            }
            assert_eq!(rank, expect);
        }
    }

    #[test]
    fn rejects_small_guard_factor() {
        assert!(sample_soup(3, 4, 1.0, 3, 0).is_err());
        assert!(sample_soup(3, 4, 0.0, 8, 0).is_err());
    }

    #[test]
    fn step_cap_is_propagated() {
        let s = small().with_step_cap(3);
        let mut hit = false;
        for i in 0..20 {
            if let Err(Error::StepCap(3)) = s.sample(SoupSampler::stream(4, i)) {
                hit = true;
            }
        }
        assert!(hit);
    }
}
