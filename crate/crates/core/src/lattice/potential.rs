//! Equilibrium measure and capacity of boxes by truncated escape runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hop::HopKit, walk::step, Coords, LatticeBox, LatticePoint, MAX_DIM};
use crate::error::{invalid, Result};
use crate::rng::{stream_rng, Rng, StreamTag};

/// A Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub escape_radius: u32,
}

/// Escape statistics for one symmetry class of boundary sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitEstimate {
    /// Offset from the box center with sorted nonnegative coordinates.
    pub representative: Vec<i64>,
    /// Number of boundary sites in the class.
    pub size: u64,
    /// Neighbours of a member site lying outside the box.
    pub outside_neighbors: u32,
    pub escapes: u64,
    pub samples: u64,
}

impl OrbitEstimate {
    fn step_factor(&self, d: usize) -> f64 {
        self.outside_neighbors as f64 / (2 * d) as f64
    }

    /// Escape probability `e_B(x)` of each member site.
    pub fn escape(&self, d: usize) -> f64 {
        self.step_factor(d) * self.escapes as f64 / self.samples as f64
    }

    pub fn stderr(&self, d: usize) -> f64 {
        let p = self.escapes as f64 / self.samples as f64;
        self.step_factor(d) * (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

/// Estimated equilibrium measure of a box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    pub domain: LatticeBox,
    pub capacity: PotentialEstimate,
    pub orbits: Vec<OrbitEstimate>,
}

impl EquilibriumMeasure {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Every boundary site with its estimated `e_B(x)`.
    pub fn site_weights(&self) -> Vec<(LatticePoint, f64)> {
        let d = self.dim();
        let c = self.domain.center().coords();
        let mut out = Vec::new();
        for o in &self.orbits {
            let e = o.escape(d);
            for offs in orbit_members(&o.representative) {
                let p = offs.iter().zip(c).map(|(a, b)| a + b).collect();
                out.push((LatticePoint::new(p).expect("dimension checked"), e));
            }
        }
        out
    }

    /// Every boundary site with its normalized weight; the weights sum to 1.
    pub fn normalized(&self) -> Vec<(LatticePoint, f64)> {
        let mut w = self.site_weights();
        let total: f64 = w.iter().map(|(_, e)| e).sum();
        if total > 0.0 {
            for (_, e) in &mut w {
                *e /= total;
            }
        }
        w
    }

    /// Bound on the relative overestimate caused by truncating escape at
    /// radius `R`: `cap(B) · R^{2-d}` up to a lattice constant.
    pub fn truncation_bias_bound(&self) -> f64 {
        let d = self.dim() as i32;
        self.capacity.value * (self.capacity.escape_radius as f64).powi(2 - d)
    }
}

/// Sorted offsets (ascending, nonnegative) of the orbits of `∂B(0,L)` under
/// the symmetry group of the cube.
fn boundary_orbits(d: usize, l: i64) -> Vec<Vec<i64>> {
    fn rec(prefix: &mut Vec<i64>, d: usize, l: i64, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == d - 1 {
            let mut v = prefix.clone();
            v.push(l);
            out.push(v);
            return;
        }
        let lo = prefix.last().copied().unwrap_or(0);
        for a in lo..=l {
            prefix.push(a);
            rec(prefix, d, l, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), d, l, &mut out);
    out
}

/// All signed permutations of a sorted nonnegative offset, without repeats.
fn orbit_members(rep: &[i64]) -> Vec<Vec<i64>> {
    let mut perms: Vec<Vec<i64>> = vec![rep.to_vec()];
    // distinct permutations via next-permutation on the sorted vector
    let mut cur = rep.to_vec();
    while next_permutation(&mut cur) {
        perms.push(cur.clone());
    }
    let mut out = Vec::new();
    for p in perms {
        let nz: Vec<usize> = (0..p.len()).filter(|&i| p[i] != 0).collect();
        for mask in 0..(1u32 << nz.len()) {
            let mut q = p.clone();
            for (bit, &i) in nz.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    q[i] = -q[i];
                }
            }
            out.push(q);
        }
    }
    out
}

fn next_permutation(v: &mut [i64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn orbit_size(rep: &[i64]) -> u64 {
    let d = rep.len();
    let mut size: u64 = (1..=d as u64).product();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && rep[j] == rep[i] {
            j += 1;
        }
        size /= (1..=(j - i) as u64).product::<u64>();
        i = j;
    }
    size << rep.iter().filter(|&&a| a != 0).count()
}

/// Runs a walk from `start` (outside `B(0,L)`) until it enters `B(0,L)` or
/// leaves `B(0,R)`; true on escape.
pub(crate) fn escapes(
    start: &Coords,
    d: usize,
    l: i64,
    r: i64,
    kit: &HopKit,
    rng: &mut Rng,
) -> bool {
    let mut x = *start;
    loop {
        let m = x[..d].iter().map(|c| c.abs()).max().unwrap_or(0);
        if m <= l {
            return false;
        }
        if m > r {
            return true;
        }
        let room = (m - l - 1).min(r - m);
        if !kit.hop(&mut x, room, rng) {
            step(&mut x, d, rng);
        }
    }
}

/// Estimates `e_B` and `cap(B)` with `samples` escape runs per symmetry class
/// of `∂B`, truncating escape at sup-distance `escape_radius` from the center.
pub fn equilibrium_sample(
    domain: &LatticeBox,
    escape_radius: u32,
    samples: u64,
    seed: u64,
) -> Result<EquilibriumMeasure> {
    let kit = HopKit::new(domain.dim())?;
    equilibrium_sample_with(domain, escape_radius, samples, seed, &kit)
}

/// As [`equilibrium_sample`], reusing prebuilt hop tables.
pub fn equilibrium_sample_with(
    domain: &LatticeBox,
    escape_radius: u32,
    samples: u64,
    seed: u64,
    kit: &HopKit,
) -> Result<EquilibriumMeasure> {
    let d = domain.dim();
    let l = domain.radius() as i64;
    let r = escape_radius as i64;
    if kit.dim() != d {
        return invalid("hop tables built for a different dimension");
    }
    if r <= 2 * l {
        return invalid(format!(
            "escape radius {r} must exceed twice the box radius {l}"
        ));
    }
    if samples == 0 {
        return invalid("sample budget must be positive");
    }
    let reps = boundary_orbits(d, l);
    let orbits: Vec<OrbitEstimate> = reps
        .into_par_iter()
        .enumerate()
        .map(|(i, rep)| {
            let mut rng = stream_rng(seed, StreamTag::Equilibrium, i as u64);
            let outside: Vec<Coords> = (0..d)
                .filter(|&a| rep[a] == l)
                .map(|a| {
                    let mut y: Coords = [0; MAX_DIM];
                    y[..d].copy_from_slice(&rep);
                    y[a] += 1;
                    y
                })
                .collect();
            // rep = 0 only for the single-site box, where every axis has two
            // outside neighbours; by symmetry one representative per axis suffices
            let k = if l == 0 { 2 * d } else { outside.len() };
            let escapes_count = (0..samples)
                .filter(|_| {
                    let y = &outside[rand::Rng::random_range(&mut rng, 0..outside.len())];
                    escapes(y, d, l, r, kit, &mut rng)
                })
                .count() as u64;
            OrbitEstimate {
                size: orbit_size(&rep),
                representative: rep,
                outside_neighbors: k as u32,
                escapes: escapes_count,
                samples,
            }
        })
        .collect();
    let value: f64 = orbits.iter().map(|o| o.size as f64 * o.escape(d)).sum();
    let var: f64 = orbits
        .iter()
        .map(|o| (o.size as f64 * o.stderr(d)).powi(2))
        .sum();
    Ok(EquilibriumMeasure {
        domain: domain.clone(),
        capacity: PotentialEstimate {
            value,
            stderr: var.sqrt(),
            samples: samples * orbits.len() as u64,
            escape_radius,
        },
        orbits,
    })
}
