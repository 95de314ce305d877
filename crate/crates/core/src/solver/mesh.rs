//! Discretized domains in `ℝ³` and fields on them.
//!
//! Balls use a radial mesh `r_k = k h` out to `r_max` with exact shell
//! volumes as weights; boxes use a uniform grid of cubic cells whose centers
//! carry the values.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball {
        radius: f64,
    },
    /// Sup-norm ball `[−w, w]³`.
    Box {
        half_width: f64,
    },
}

/// Mesh resolution: radial spacing as a fraction of the radius and extent as
/// a multiple of it, or box cells per half width and extent multiple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// Cells per radius (ball) or per half width (box).
    pub cells: usize,
    /// Mesh extent in units of the radius or half width.
    pub extent: f64,
}

impl MeshSpec {
    /// `h = 10⁻³ R`, `r_max = 10 R`.
    pub fn radial_default() -> Self {
        MeshSpec {
            cells: 1000,
            extent: 10.0,
        }
    }

    pub fn box_default() -> Self {
        MeshSpec {
            cells: 4,
            extent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Radial {
        h: f64,
        /// Index of the node at `r = R`.
        boundary: usize,
        r: Vec<f64>,
    },
    Cartesian {
        h: f64,
        /// Cells per side of the whole mesh.
        side: usize,
        centers: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub shape: Shape,
    pub spec: MeshSpec,
    pub grid: Grid,
    /// Volume attached to each node.
    pub weights: Vec<f64>,
    /// Volume of each node's cell inside `D`.
    pub domain_weights: Vec<f64>,
    /// `|D|`.
    pub volume: f64,
}

/// Nonnegative-or-not values on a domain's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(dom: &Domain) -> Self {
        Field {
            values: vec![0.0; dom.len()],
        }
    }

    pub fn constant(dom: &Domain, c: f64) -> Self {
        Field {
            values: vec![c; dom.len()],
        }
    }

    pub fn from_fn(dom: &Domain, f: impl Fn(f64) -> f64) -> Self {
        Field {
            values: (0..dom.len()).map(|i| f(dom.radius_of(i))).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }
}

fn shell_volume(a: f64, b: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * (b.powi(3) - a.powi(3))
}

impl Domain {
    pub fn ball(radius: f64, spec: MeshSpec) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || spec.cells == 0 || spec.extent < 1.0 {
            return invalid("ball needs a positive radius, cells ≥ 1 and extent ≥ 1");
        }
        let h = radius / spec.cells as f64;
        let n = (spec.extent * spec.cells as f64).round() as usize;
        let r: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let r_max = r[n];
        let cell = |k: usize, top: f64| {
            let lo = (r[k] - h / 2.0).max(0.0);
            let hi = (r[k] + h / 2.0).min(top);
            if hi > lo {
                shell_volume(lo, hi)
            } else {
                0.0
            }
        };
        let weights = (0..=n).map(|k| cell(k, r_max)).collect();
        let domain_weights = (0..=n).map(|k| cell(k, radius)).collect();
        Ok(Domain {
            shape: Shape::Ball { radius },
            spec,
            grid: Grid::Radial {
                h,
                boundary: spec.cells,
                r,
            },
            weights,
            domain_weights,
            volume: shell_volume(0.0, radius),
        })
    }

    pub fn cube(half_width: f64, spec: MeshSpec) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || spec.cells == 0 || spec.extent < 1.0 {
            return invalid("box needs a positive half width, cells ≥ 1 and extent ≥ 1");
        }
        let h = half_width / spec.cells as f64;
        let half_side = (spec.extent * spec.cells as f64).round() as usize;
        let side = 2 * half_side;
        let lo = -(half_side as f64) * h;
        let mut centers = Vec::with_capacity(side.pow(3));
        for k in 0..side {
            for j in 0..side {
                for i in 0..side {
                    let c = |t: usize| lo + (t as f64 + 0.5) * h;
                    centers.push([c(i), c(j), c(k)]);
                }
            }
        }
        let cell = h.powi(3);
        let weights = vec![cell; centers.len()];
        let domain_weights = centers
            .iter()
            .map(|x| {
                if x.iter().all(|c| c.abs() < half_width) {
                    cell
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Domain {
            shape: Shape::Box { half_width },
            spec,
            grid: Grid::Cartesian { h, side, centers },
            weights,
            domain_weights,
            volume: (2.0 * half_width).powi(3),
        })
    }

    pub fn new(shape: Shape, spec: MeshSpec) -> Result<Self> {
        match shape {
            Shape::Ball { radius } => Self::ball(radius, spec),
            Shape::Box { half_width } => Self::cube(half_width, spec),
        }
    }

    /// Unit ball with the default radial mesh.
    pub fn unit_ball() -> Self {
        Self::ball(1.0, MeshSpec::radial_default()).expect("valid defaults")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.grid, Grid::Radial { .. })
    }

    /// Radius (ball) or half width (box).
    pub fn scale(&self) -> f64 {
        match self.shape {
            Shape::Ball { radius } => radius,
            Shape::Box { half_width } => half_width,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.grid {
            Grid::Radial { h, .. } | Grid::Cartesian { h, .. } => h,
        }
    }

    /// Euclidean distance of node `i` from the origin.
    pub fn radius_of(&self, i: usize) -> f64 {
        match &self.grid {
            Grid::Radial { r, .. } => r[i],
            Grid::Cartesian { centers, .. } => {
                let c = centers[i];
                (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
            }
        }
    }

    pub fn contains_node(&self, i: usize) -> bool {
        self.domain_weights[i] > 0.0
    }

    pub(crate) fn check(&self, f: &Field) -> Result<()> {
        if f.values.len() != self.len() {
            return invalid(format!(
                "field has {} values, mesh has {} nodes",
                f.values.len(),
                self.len()
            ));
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return invalid("field has non-finite values");
        }
        Ok(())
    }

    /// `⨍_D f`.
    pub fn domain_mean(&self, f: &Field) -> f64 {
        self.domain_weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            / self.volume
    }

    /// `∫ f g` over the whole mesh.
    pub fn inner(&self, f: &Field, g: &Field) -> f64 {
        self.weights
            .iter()
            .zip(f.values.iter().zip(&g.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `∫_D f g`.
    pub fn inner_domain(&self, f: &Field, g: &Field) -> f64 {
        self.domain_weights
            .iter()
            .zip(f.values.iter().zip(&g.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `1_D` on the nodes.
    pub fn indicator(&self) -> Field {
        Field {
            values: self
                .domain_weights
                .iter()
                .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}
