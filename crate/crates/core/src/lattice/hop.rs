//! Exact exit-distribution jumps for long excursions.
//!
//! A walk started at the center of a sup-box of radius ρ leaves it through a
//! site at sup-distance ρ+1. The law of that site is tabulated once per
//! (d, ρ) from the spectral decomposition of the killed Green function, so a
//! walk far from anything of interest can jump straight to the exit site
//! instead of simulating ~ρ² steps. Only the trace inside the box is lost.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng as _;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::{check_dim, Coords};
use crate::error::{invalid, Result};
use crate::rng::Rng;

/// Upper bound on the number of sites on one face of a tabulated box.
pub const HOP_FACE_LIMIT: usize = 20_000;

const CANDIDATE_RADII: [u32; 12] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64];

struct HopTable {
    rho: u32,
    side: usize,
    alias: WeightedAliasIndex<f64>,
}

type TableCache = Mutex<HashMap<(usize, u32), Arc<HopTable>>>;

fn cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exit probabilities through the face `x_0 = ρ+1` from the box center,
/// indexed by transverse offsets (row-major, first transverse axis fastest).
/// The total over the face is `1/(2d)`.
fn face_distribution(d: usize, rho: u32) -> Vec<f64> {
    let n = 2 * rho as usize + 1;
    let m = d - 1;
    let nf = (n + 1) as f64;
    let center = rho as usize + 1;
    let norm = 2.0 / nf;
    // psi_k(j) psi_k(center) for modes k = 1..n and sites j = 1..n
    let cosk: Vec<f64> = (1..=n).map(|k| (k as f64 * PI / nf).cos()).collect();
    let mut pair = vec![0.0; n * n];
    for k in 0..n {
        let sc = ((k + 1) as f64 * PI * center as f64 / nf).sin();
        for j in 0..n {
            pair[j * n + k] = norm * sc * ((k + 1) as f64 * PI * (j + 1) as f64 / nf).sin();
        }
    }
    let count = n.pow(m as u32);
    let df = d as f64;
    // normal-axis resolvent for each transverse mode multi-index
    let mut field = vec![0.0; count];
    for (idx, slot) in field.iter_mut().enumerate() {
        let mut rest = idx;
        let mut mu = 0.0;
        for _ in 0..m {
            mu += cosk[rest % n];
            rest /= n;
        }
        mu /= df;
        *slot = (0..n)
            .map(|k| pair[(n - 1) * n + k] / (1.0 - cosk[k] / df - mu))
            .sum();
    }
    // separable inverse transform along each transverse axis
    let mut buf = vec![0.0; n];
    let mut stride = 1;
    for _ in 0..m {
        for base in 0..count {
            if (base / stride) % n != 0 {
                continue;
            }
            for (j, b) in buf.iter_mut().enumerate() {
                *b = (0..n)
                    .map(|k| pair[j * n + k] * field[base + k * stride])
                    .sum();
            }
            for (j, b) in buf.iter().enumerate() {
                field[base + j * stride] = *b;
            }
        }
        stride *= n;
    }
    let scale = 1.0 / (2.0 * df);
    field.iter().map(|g| (g * scale).max(0.0)).collect()
}

fn table(d: usize, rho: u32) -> Arc<HopTable> {
    let key = (d, rho);
    if let Some(t) = cache().lock().expect("hop cache poisoned").get(&key) {
        return t.clone();
    }
    let weights = face_distribution(d, rho);
    let t = Arc::new(HopTable {
        rho,
        side: 2 * rho as usize + 1,
        alias: WeightedAliasIndex::new(weights).expect("face weights are positive"),
    });
    cache()
        .lock()
        .expect("hop cache poisoned")
        .entry(key)
        .or_insert(t)
        .clone()
}

/// Set of box-exit tables for one dimension.
#[derive(Clone)]
pub struct HopKit {
    dim: usize,
    tables: Vec<Arc<HopTable>>,
}

impl std::fmt::Debug for HopKit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HopKit")
            .field("dim", &self.dim)
            .field("radii", &self.radii())
            .finish()
    }
}

impl HopKit {
    pub fn new(d: usize) -> Result<Self> {
        check_dim(d)?;
        let tables = CANDIDATE_RADII
            .iter()
            .filter(|&&r| (2 * r as usize + 1).pow(d as u32 - 1) <= HOP_FACE_LIMIT)
            .map(|&r| table(d, r))
            .collect();
        Ok(HopKit { dim: d, tables })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radii(&self) -> Vec<u32> {
        self.tables.iter().map(|t| t.rho).collect()
    }

    pub fn max_radius(&self) -> u32 {
        self.tables.last().map_or(0, |t| t.rho)
    }

    /// Exact exit-face probabilities of the radius-`rho` box, if tabulated.
    pub fn face_weights(&self, rho: u32) -> Result<Vec<f64>> {
        if !self.tables.iter().any(|t| t.rho == rho) {
            return invalid(format!(
                "radius {rho} is not tabulated for d = {}",
                self.dim
            ));
        }
        Ok(face_distribution(self.dim, rho))
    }

    /// Replaces the walk inside `B(x, ρ)` by its exit site, for the largest
    /// tabulated `ρ ≤ max_rho`. Returns `false` (and leaves `x`) if none fits.
    #[inline]
    pub(crate) fn hop(&self, x: &mut Coords, max_rho: i64, rng: &mut Rng) -> bool {
        let pos = self.tables.partition_point(|t| (t.rho as i64) <= max_rho);
        if pos == 0 {
            return false;
        }
        let t = &self.tables[pos - 1];
        let d = self.dim;
        let face = rng.random_range(0..2 * d as u32) as usize;
        let axis = face >> 1;
        let r = t.rho as i64;
        let mut trans = t.alias.sample(rng);
        for i in (0..d).filter(|&i| i != axis) {
            x[i] += (trans % t.side) as i64 - r;
            trans /= t.side;
        }
        x[axis] += if face & 1 == 0 { r + 1 } else { -(r + 1) };
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{walk::step, MAX_DIM};
    use crate::rng::{stream_rng, StreamTag};

    #[test]
    fn radii_respect_face_limit() {
        assert_eq!(HopKit::new(3).unwrap().max_radius(), 64);
        assert_eq!(HopKit::new(4).unwrap().max_radius(), 12);
        assert_eq!(HopKit::new(5).unwrap().max_radius(), 4);
    }

    #[test]
    fn face_mass_is_one_over_2d() {
        for d in 3..=5 {
            for rho in [1, 2, 4] {
                let w = face_distribution(d, rho);
                let s: f64 = w.iter().sum();
                assert!(
                    (s * 2.0 * d as f64 - 1.0).abs() < 1e-12,
                    "d={d} rho={rho} s={s}"
                );
            }
        }
    }

    #[test]
    fn radius_one_matches_first_step_analysis() {
        // From the center of a 3^3 box: exit through the middle of a face
        // either directly from a face-adjacent site or via longer paths.
        // Compare with a brute-force linear solve by value iteration.
        let d = 3;
        let w = face_distribution(d, 1);
        let n = 3usize;
        let vol = n.pow(3);
        let idx = |a: [i64; 3]| -> Option<usize> {
            if a.iter().all(|&c| (0..n as i64).contains(&c)) {
                Some((a[0] + 3 * a[1] + 9 * a[2]) as usize)
            } else {
                None
            }
        };
        // expected visits from center, by value iteration of G = I + PG
        let mut g = vec![0.0; vol];
        for _ in 0..2000 {
            let mut next = vec![0.0; vol];
            next[idx([1, 1, 1]).unwrap()] = 1.0;
            for z in 0..vol {
                let a = [(z % 3) as i64, ((z / 3) % 3) as i64, (z / 9) as i64];
                for ax in 0..3 {
                    for s in [-1, 1] {
                        let mut b = a;
                        b[ax] += s;
                        if let Some(j) = idx(b) {
                            next[j] += g[z] / 6.0;
                        }
                    }
                }
            }
            g = next;
        }
        for t1 in 0..3 {
            for t2 in 0..3 {
                let expect = g[idx([2, t1 as i64, t2 as i64]).unwrap()] / 6.0;
                assert!((w[t1 + 3 * t2] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hop_matches_simulated_exit() {
        let kit = HopKit::new(3).unwrap();
        let mut rng = stream_rng(5, StreamTag::Test, 0);
        let rho = 2i64;
        let trials = 40_000;
        let mut hist_hop = HashMap::new();
        let mut hist_walk = HashMap::new();
        for _ in 0..trials {
            let mut x = [0i64; MAX_DIM];
            assert!(kit.hop(&mut x, rho, &mut rng));
            let key = (
                x[0].abs().max(x[1].abs()).max(x[2].abs()),
                x[0].abs() + x[1].abs() + x[2].abs(),
            );
            *hist_hop.entry(key).or_insert(0u32) += 1;
            let mut y = [0i64; MAX_DIM];
            while y[..3].iter().all(|c| c.abs() <= rho) {
                step(&mut y, 3, &mut rng);
            }
            let key = (
                y[0].abs().max(y[1].abs()).max(y[2].abs()),
                y[0].abs() + y[1].abs() + y[2].abs(),
            );
            *hist_walk.entry(key).or_insert(0u32) += 1;
        }
        for (k, &a) in &hist_hop {
            assert_eq!(k.0, rho + 1);
            let b = *hist_walk.get(k).unwrap_or(&0) as f64;
            let a = a as f64;
            let sd = (a + b).sqrt().max(1.0);
            assert!((a - b).abs() < 5.0 * sd, "{k:?}: {a} vs {b}");
        }
    }
}
