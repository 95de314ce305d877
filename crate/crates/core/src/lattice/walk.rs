use rand::Rng as _;

use super::{Coords, LatticeBox, LatticePoint};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

/// Moves `x` to a uniformly chosen nearest neighbour.
#[inline]
pub(crate) fn step(x: &mut Coords, d: usize, rng: &mut Rng) {
    let dir = rng.random_range(0..2 * d as u32) as usize;
    x[dir >> 1] += if dir & 1 == 0 { 1 } else { -1 };
}

/// Visited-site sequence of a walk, exit site included.
#[derive(Debug, Clone)]
pub struct WalkPath {
    dim: usize,
    coords: Vec<i64>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of steps taken (sites visited minus one).
    pub fn steps(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn site(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn last(&self) -> LatticePoint {
        LatticePoint::new(self.site(self.len() - 1).to_vec()).expect("dimension checked")
    }
}

/// Runs a simple random walk from `start` until it first leaves `guard`.
pub fn walk_until_exit(
    start: &LatticePoint,
    guard: &LatticeBox,
    rng: &mut Rng,
    step_cap: u64,
) -> Result<WalkPath> {
    let d = guard.dim();
    if start.dim() != d {
        return invalid("start and guard have different dimensions");
    }
    if !guard.contains(start) {
        return invalid("walk must start inside the guard box");
    }
    let r = guard.radius() as i64;
    let mut x = start.to_array();
    let mut coords = start.coords().to_vec();
    let mut steps = 0u64;
    while guard.sup_from_center(&x) <= r {
        if steps >= step_cap {
            return Err(Error::StepCap(step_cap));
        }
        step(&mut x, d, rng);
        steps += 1;
        coords.extend_from_slice(&x[..d]);
    }
    Ok(WalkPath { dim: d, coords })
}
