//! All levels at once: first-visit ranks and disconnection thresholds.
//!
//! With labels sorted ascending, a site is occupied at level `u` iff the
//! lowest-label walk visiting it has label `≤ u`. A vacant path at level `u`
//! therefore exists iff its smallest rank has label `> u`, so the widest
//! (max-min rank) path from the origin decides `0 ↔ ∂B_L` for every `u`
//! simultaneously.

use std::sync::Arc;

use super::occupancy::{origin_reach_in, OccupancyGrid};
use super::soup::{SoupSampler, TrajectorySoup, WindowGeometry};
use crate::error::{invalid, Result};
use crate::lattice::LatticeBox;
use crate::rng::StreamId;

/// For every window site, the index of the first walk (in label order)
/// visiting it, or the walk count if none does.
#[derive(Debug, Clone)]
pub struct LevelMap {
    window: LatticeBox,
    pub(crate) geometry: Arc<WindowGeometry>,
    labels: Vec<f64>,
    rank: Vec<u32>,
}

impl LevelMap {
    pub fn from_soup(soup: &TrajectorySoup) -> Self {
        let geometry = Arc::new(WindowGeometry::new(&soup.window));
        let k = soup.len() as u32;
        let mut rank = vec![k; geometry.volume];
        for (i, t) in soup.trajectories.iter().enumerate() {
            for &s in &t.trace {
                let r = &mut rank[s as usize];
                *r = (*r).min(i as u32);
            }
        }
        LevelMap {
            window: soup.window.clone(),
            geometry,
            labels: soup.labels(),
            rank,
        }
    }

    pub fn sample(sampler: &SoupSampler, stream: StreamId) -> Result<Self> {
        let (labels, rank) = sampler.sample_ranks(stream)?;
        Ok(LevelMap {
            window: sampler.window().clone(),
            geometry: sampler.geometry.clone(),
            labels,
            rank,
        })
    }

    pub fn window(&self) -> &LatticeBox {
        &self.window
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    pub fn walk_count(&self) -> u32 {
        self.labels.len() as u32
    }

    /// Label of rank `r`, infinite for the "never visited" rank.
    pub fn label_of(&self, r: u32) -> f64 {
        self.labels
            .get(r as usize)
            .copied()
            .unwrap_or(f64::INFINITY)
    }

    /// Number of walks with label `≤ u`.
    pub fn walks_at(&self, u: f64) -> u32 {
        self.labels.partition_point(|&l| l <= u) as u32
    }

    #[inline]
    pub fn occupied(&self, index: usize, u: f64) -> bool {
        self.label_of(self.rank[index]) <= u
    }

    pub fn occupancy(&self, u: f64) -> OccupancyGrid {
        let cut = self.walks_at(u);
        OccupancyGrid::from_fn(self.window.clone(), u, |i| self.rank[i] < cut)
    }

    /// Max-min rank over paths from the origin, for every site.
    pub fn widest_path(&self) -> Vec<u32> {
        let g = &self.geometry;
        let k = self.walk_count() as usize;
        let mut best = vec![0u32; g.volume];
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); k + 1];
        let start = self.rank[g.origin];
        best[g.origin] = start;
        buckets[start as usize].push(g.origin as u32);
        for level in (1..=start as usize).rev() {
            while let Some(s) = buckets[level].pop() {
                let s = s as usize;
                if best[s] as usize != level {
                    continue;
                }
                g.for_neighbors(s, |t| {
                    let v = self.rank[t].min(level as u32);
                    if v > best[t] {
                        best[t] = v;
                        buckets[v as usize].push(t as u32);
                    }
                });
            }
        }
        best
    }

    /// `T_L` for `L = 0..=N`: the largest rank `r` such that the walks of
    /// rank `< r` leave a vacant path from the origin to `∂B_L`.
    pub fn disconnection_ranks(&self) -> Vec<u32> {
        let best = self.widest_path();
        let mut out = vec![0u32; self.geometry.radius as usize + 1];
        for (b, &sh) in best.iter().zip(&self.geometry.shell) {
            let o = &mut out[sh as usize];
            *o = (*o).max(*b);
        }
        out
    }

    /// Largest sup-norm reached by the origin's vacant cluster at level `u`,
    /// searching only until `∂B_L` is hit; `None` if the origin is occupied.
    pub fn reach(&self, u: f64, l: u32, scratch: &mut Vec<u32>) -> Option<u32> {
        let cut = self.walks_at(u);
        origin_reach_in(&self.geometry, |i| self.rank[i] < cut, l, scratch)
    }

    pub fn summary(&self) -> SoupSummary {
        let t = self.disconnection_ranks();
        SoupSummary {
            labels: self.labels.clone(),
            origin_label: self.label_of(self.rank[self.geometry.origin]),
            thresholds: t[1..].iter().map(|&r| self.label_of(r)).collect(),
        }
    }
}

/// Per-soup statistics sufficient for every level-`u` estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SoupSummary {
    /// Sorted walk labels.
    pub labels: Vec<f64>,
    /// Smallest label of a walk visiting the origin (`∞` if none).
    pub origin_label: f64,
    /// `thresholds[L-1] = t_L`: the origin is cut off from `∂B_L` in the
    /// vacant set at level `u` iff `u ≥ t_L` (`∞` if never within the soup).
    pub thresholds: Vec<f64>,
}

impl SoupSummary {
    pub fn window_radius(&self) -> u32 {
        self.thresholds.len() as u32
    }

    pub fn threshold(&self, l: u32) -> Result<f64> {
        if l == 0 || l > self.window_radius() {
            return invalid(format!(
                "probe radius {l} outside 1..={}",
                self.window_radius()
            ));
        }
        Ok(self.thresholds[l as usize - 1])
    }

    /// `1{0 ↮ ∂B_L in 𝓥^u}`.
    pub fn disconnected(&self, l: u32, u: f64) -> bool {
        u >= self.thresholds[l as usize - 1]
    }

    pub fn origin_occupied(&self, u: f64) -> bool {
        self.origin_label <= u
    }

    /// Number of labels in `(a, b]`.
    pub fn labels_in(&self, a: f64, b: f64) -> usize {
        self.labels.partition_point(|&l| l <= b) - self.labels.partition_point(|&l| l <= a)
    }
}
