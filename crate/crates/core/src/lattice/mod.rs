//! Simple random walk on ℤ^d and discrete potential theory.

mod green;
mod hop;
mod potential;
mod walk;

pub(crate) use green::gauss_legendre;
pub use green::{green_origin, never_return_frequency, NeverReturnEstimate};
pub use hop::{HopKit, HOP_FACE_LIMIT};
pub use potential::{
    equilibrium_sample, equilibrium_sample_with, EquilibriumMeasure, PotentialEstimate,
};
pub use walk::{walk_until_exit, WalkPath, DEFAULT_STEP_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

pub(crate) type Coords = [i64; MAX_DIM];

/// A site of ℤ^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    coords: Vec<i64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        check_dim(coords.len())?;
        Ok(LatticePoint { coords })
    }

    pub fn origin(d: usize) -> Result<Self> {
        Self::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub(crate) fn to_array(&self) -> Coords {
        let mut a = [0; MAX_DIM];
        a[..self.dim()].copy_from_slice(&self.coords);
        a
    }

    pub(crate) fn from_array(a: &Coords, d: usize) -> Self {
        LatticePoint {
            coords: a[..d].to_vec(),
        }
    }

    pub fn sup_dist(&self, other: &LatticePoint) -> i64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 3 {
        return invalid(format!(
            "dimension {d} < 3: the simple random walk is recurrent"
        ));
    }
    if d > MAX_DIM {
        return invalid(format!("dimension {d} exceeds supported maximum {MAX_DIM}"));
    }
    Ok(())
}

/// Closed sup-norm ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    center: LatticePoint,
    radius: u32,
}

impl LatticeBox {
    pub fn new(center: LatticePoint, radius: u32) -> Self {
        LatticeBox { center, radius }
    }

    pub fn centered(d: usize, radius: u32) -> Result<Self> {
        Ok(LatticeBox::new(LatticePoint::origin(d)?, radius))
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn center(&self) -> &LatticePoint {
        &self.center
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    /// Number of sites, `(2L+1)^d`.
    pub fn volume(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn contains(&self, x: &LatticePoint) -> bool {
        x.dim() == self.dim() && x.sup_dist(&self.center) <= self.radius as i64
    }

    pub fn on_boundary(&self, x: &LatticePoint) -> bool {
        x.dim() == self.dim() && x.sup_dist(&self.center) == self.radius as i64
    }

    /// Row-major index of a member site (first coordinate fastest).
    pub fn index_of(&self, x: &LatticePoint) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(self.index_of_array(&x.to_array()))
    }

    pub(crate) fn index_of_array(&self, x: &Coords) -> usize {
        let side = self.side() as i64;
        let r = self.radius as i64;
        let c = self.center.coords();
        let mut idx = 0i64;
        for i in (0..self.dim()).rev() {
            idx = idx * side + (x[i] - c[i] + r);
        }
        idx as usize
    }

    pub fn point_at(&self, index: usize) -> LatticePoint {
        LatticePoint::from_array(&self.array_at(index), self.dim())
    }

    pub(crate) fn array_at(&self, mut index: usize) -> Coords {
        let side = self.side();
        let r = self.radius as i64;
        let c = self.center.coords();
        let mut a = [0; MAX_DIM];
        for (i, slot) in a.iter_mut().enumerate().take(self.dim()) {
            *slot = (index % side) as i64 - r + c[i];
            index /= side;
        }
        a
    }

    /// Sup-distance of `x` from the center.
    pub(crate) fn sup_from_center(&self, x: &Coords) -> i64 {
        let c = self.center.coords();
        (0..self.dim())
            .map(|i| (x[i] - c[i]).abs())
            .max()
            .unwrap_or(0)
    }

    /// Internal boundary: member sites adjacent to the complement.
    pub fn boundary(&self) -> Vec<LatticePoint> {
        (0..self.volume())
            .map(|i| self.point_at(i))
            .filter(|x| self.on_boundary(x))
            .collect()
    }

    pub fn is_subset_of(&self, other: &LatticeBox) -> bool {
        self.dim() == other.dim()
            && self.center.sup_dist(&other.center) + self.radius as i64 <= other.radius as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_volume_and_boundary() {
        let b = LatticeBox::centered(3, 2).unwrap();
        assert_eq!(b.volume(), 125);
        assert_eq!(b.boundary().len(), 125 - 27);
        let single = LatticeBox::centered(3, 0).unwrap();
        assert_eq!(single.boundary(), vec![LatticePoint::origin(3).unwrap()]);
    }

    #[test]
    fn index_round_trip() {
        let c = LatticePoint::new(vec![3, -1, 2, 0]).unwrap();
        let b = LatticeBox::new(c, 2);
        for i in 0..b.volume() {
            let p = b.point_at(i);
            assert!(b.contains(&p));
            assert_eq!(b.index_of(&p), Some(i));
        }
    }

    #[test]
    fn rejects_low_dimension() {
        assert!(LatticePoint::origin(2).is_err());
        assert!(LatticePoint::origin(3).is_ok());
    }

    #[test]
    fn subset_relation() {
        let small = LatticeBox::centered(3, 2).unwrap();
        let big = LatticeBox::centered(3, 5).unwrap();
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
    }
}
