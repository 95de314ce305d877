//! Occupied and vacant sets at a fixed level, and vacant clusters.

use std::collections::VecDeque;

use super::soup::{TrajectorySoup, WindowGeometry};
use crate::error::{invalid, Result};
use crate::lattice::LatticeBox;

/// `𝓘^u ∩ B_N` as a bitset; the vacant set is its complement in the window.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    window: LatticeBox,
    level: f64,
    bits: Vec<u64>,
}

impl OccupancyGrid {
    pub fn empty(window: LatticeBox, level: f64) -> Self {
        let words = window.volume().div_ceil(64);
        OccupancyGrid {
            window,
            level,
            bits: vec![0; words],
        }
    }

    pub(crate) fn from_fn(window: LatticeBox, level: f64, f: impl Fn(usize) -> bool) -> Self {
        let mut g = Self::empty(window, level);
        for i in 0..g.window.volume() {
            if f(i) {
                g.set(i);
            }
        }
        g
    }

    pub fn window(&self) -> &LatticeBox {
        &self.window
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn set(&mut self, index: usize) {
        self.bits[index >> 6] |= 1 << (index & 63);
    }

    pub fn is_occupied(&self, index: usize) -> bool {
        self.bits[index >> 6] >> (index & 63) & 1 == 1
    }

    pub fn is_vacant(&self, index: usize) -> bool {
        !self.is_occupied(index)
    }

    pub fn occupied_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn vacant_count(&self) -> usize {
        self.window.volume() - self.occupied_count()
    }

    /// True iff every occupied site of `self` is occupied in `other`.
    pub fn is_subset_of(&self, other: &OccupancyGrid) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn origin_index(&self) -> usize {
        self.window.volume() / 2
    }
}

/// Union of the traces with label `≤ u`.
pub fn occupancy_at_level(soup: &TrajectorySoup, u: f64) -> Result<OccupancyGrid> {
    if !(0.0..=soup.u_max).contains(&u) {
        return invalid(format!("level {u} outside [0, {}]", soup.u_max));
    }
    let mut g = OccupancyGrid::empty(soup.window.clone(), u);
    for t in soup.trajectories.iter().take_while(|t| t.label <= u) {
        for &s in &t.trace {
            g.set(s as usize);
        }
    }
    Ok(g)
}

/// Vacant components of a grid and the origin's connection to `∂B_L`.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    /// Component id of every site; `None` for occupied sites.
    pub component: Vec<Option<u32>>,
    pub sizes: Vec<u64>,
    pub probe_radius: u32,
    pub origin_in_vacant: bool,
    pub origin_connected_to_boundary: bool,
}

/// Labels the vacant components by breadth-first search.
pub fn cluster_report(grid: &OccupancyGrid, l: u32) -> Result<ClusterReport> {
    if l == 0 || l > grid.window.radius() {
        return invalid(format!(
            "probe radius {l} must lie in 1..={}",
            grid.window.radius()
        ));
    }
    let g = WindowGeometry::new(&grid.window);
    let mut component = vec![None; g.volume];
    let mut sizes = Vec::new();
    let mut reach = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..g.volume {
        if grid.is_occupied(s) || component[s].is_some() {
            continue;
        }
        let id = sizes.len() as u32;
        component[s] = Some(id);
        queue.push_back(s);
        let (mut size, mut far) = (0u64, 0u32);
        while let Some(x) = queue.pop_front() {
            size += 1;
            far = far.max(g.shell[x]);
            g.for_neighbors(x, |y| {
                if component[y].is_none() && grid.is_vacant(y) {
                    component[y] = Some(id);
                    queue.push_back(y);
                }
            });
        }
        sizes.push(size);
        reach.push(far);
    }
    let origin = component[g.origin];
    Ok(ClusterReport {
        origin_in_vacant: origin.is_some(),
        // sup-norm changes by at most one per step, so reaching beyond
        // radius L means crossing ∂B_L
        origin_connected_to_boundary: origin.is_some_and(|c| reach[c as usize] >= l),
        component,
        sizes,
        probe_radius: l,
    })
}

/// Largest sup-norm reached by the origin's vacant cluster, exploring depth
/// first and stopping as soon as `∂B_L` is hit. `None` if the origin is
/// occupied. The cluster crosses `∂B_K` for `K ≤ L` iff the result is `≥ K`.
pub fn origin_reach(
    occupied: impl Fn(usize) -> bool,
    window: &LatticeBox,
    l: u32,
    scratch: &mut Vec<u32>,
) -> Option<u32> {
    let g = WindowGeometry::new(window);
    origin_reach_in(&g, occupied, l, scratch)
}

pub(crate) fn origin_reach_in(
    g: &WindowGeometry,
    occupied: impl Fn(usize) -> bool,
    l: u32,
    seen: &mut Vec<u32>,
) -> Option<u32> {
    if occupied(g.origin) {
        return None;
    }
    // generation stamps let `seen` be reused without clearing
    if seen.len() != g.volume + 1 {
        seen.clear();
        seen.resize(g.volume + 1, 0);
    }
    let stamp_slot = g.volume;
    seen[stamp_slot] = seen[stamp_slot].wrapping_add(1);
    if seen[stamp_slot] == 0 {
        seen.iter_mut().for_each(|s| *s = 0);
        seen[stamp_slot] = 1;
    }
    let stamp = seen[stamp_slot];
    let mut stack = vec![g.origin];
    seen[g.origin] = stamp;
    let mut far = 0;
    while let Some(x) = stack.pop() {
        far = far.max(g.shell[x]);
        if far >= l {
            return Some(far);
        }
        g.for_neighbors(x, |y| {
            if seen[y] != stamp && !occupied(y) {
                seen[y] = stamp;
                stack.push(y);
            }
        });
    }
    Some(far)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: u32) -> OccupancyGrid {
        OccupancyGrid::empty(LatticeBox::centered(3, l).unwrap(), 0.0)
    }

    #[test]
    fn fully_vacant_connects_everywhere() {
        let g = grid(4);
        for l in 1..=4 {
            let r = cluster_report(&g, l).unwrap();
            assert!(r.origin_connected_to_boundary);
            assert_eq!(r.sizes, vec![729]);
        }
    }

    #[test]
    fn occupied_origin_is_disconnected() {
        let mut g = grid(3);
        let o = g.origin_index();
        g.set(o);
        let r = cluster_report(&g, 2).unwrap();
        assert!(!r.origin_in_vacant);
        assert!(!r.origin_connected_to_boundary);
        assert_eq!(
            origin_reach(|i| g.is_occupied(i), g.window(), 2, &mut Vec::new()),
            None
        );
    }

    #[test]
    fn occupied_shell_encloses_origin() {
        // 5^3 window with the sup-norm-1 shell occupied
        let mut g = grid(2);
        let b = g.window().clone();
        for i in 0..b.volume() {
            if b.point_at(i).coords().iter().map(|c| c.abs()).max() == Some(1) {
                g.set(i);
            }
        }
        let r = cluster_report(&g, 2).unwrap();
        assert!(r.origin_in_vacant);
        assert!(!r.origin_connected_to_boundary);
        assert_eq!(r.sizes.len(), 2);
        let mut sizes = r.sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![1, 125 - 27]);
        // exhaustive check: no vacant nearest-neighbour path leaves the origin
        let reach = origin_reach(|i| g.is_occupied(i), &b, 2, &mut Vec::new());
        assert_eq!(reach, Some(0));
    }

    #[test]
    fn rejects_bad_probe_radius() {
        let g = grid(2);
        assert!(cluster_report(&g, 0).is_err());
        assert!(cluster_report(&g, 3).is_err());
    }

    #[test]
    fn component_ids_partition_vacant_sites() {
        let mut g = grid(3);
        for i in (0..g.window().volume()).step_by(3) {
            g.set(i);
        }
        let r = cluster_report(&g, 3).unwrap();
        let total: u64 = r.sizes.iter().sum();
        assert_eq!(total as usize, g.vacant_count());
        for i in 0..g.window().volume() {
            assert_eq!(r.component[i].is_some(), g.is_vacant(i));
        }
    }
}
