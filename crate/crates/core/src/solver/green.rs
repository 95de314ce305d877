//! Convolution with the Green function of `(1/2d)Δ` in `ℝ³`,
//! `G(z) = (3/2π) |z|⁻¹`.

use super::mesh::{Domain, Field, Grid};
use crate::error::{invalid, Result};

/// `d Γ(d/2 − 1) / (2π^{d/2})` at `d = 3`.
pub const KERNEL_CONSTANT: f64 = 3.0 / (2.0 * std::f64::consts::PI);

/// `∫_{[−1/2,1/2]³} |z|⁻¹ dz`.
pub fn unit_cube_potential() -> f64 {
    3.0 * (2.0 + 3f64.sqrt()).ln() - std::f64::consts::FRAC_PI_2
}

/// `Gρ` on every mesh node for `ρ` supported in `D`.
///
/// Radial meshes use Newton's shell decomposition
/// `Gρ(r) = 6 (r⁻¹ ∫_0^r ρ s² ds + ∫_r^∞ ρ s ds)` with trapezoidal sums;
/// box meshes sum the kernel over source cells, the self cell contributing
/// its exact cell average.
pub fn green_convolve(rho: &Field, dom: &Domain) -> Result<Field> {
    dom.check(rho)?;
    if let Some(i) = (0..dom.len()).find(|&i| rho.values[i] != 0.0 && !dom.contains_node(i)) {
        return invalid(format!(
            "density is nonzero at r = {} outside the domain",
            dom.radius_of(i)
        ));
    }
    Ok(match &dom.grid {
        Grid::Radial { h, r, boundary } => radial(&rho.values, r, *h, *boundary),
        Grid::Cartesian { h, side, .. } => cartesian(&rho.values, dom, *h, *side),
    })
}

fn radial(rho: &[f64], r: &[f64], h: f64, boundary: usize) -> Field {
    let n = r.len();
    // cells past the boundary node carry no density
    let cell = |k: usize| k < boundary;
    let c = 4.0 * std::f64::consts::PI * KERNEL_CONSTANT;
    // inner[k] = ∫_0^{r_k} ρ s² ds, outer[k] = ∫_{r_k}^{r_max} ρ s ds
    let mut inner = vec![0.0; n];
    for k in 1..n {
        let add = if cell(k - 1) {
            0.5 * h * (rho[k - 1] * r[k - 1] * r[k - 1] + rho[k] * r[k] * r[k])
        } else {
            0.0
        };
        inner[k] = inner[k - 1] + add;
    }
    let mut outer = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let add = if cell(k) {
            0.5 * h * (rho[k] * r[k] + rho[k + 1] * r[k + 1])
        } else {
            0.0
        };
        outer[k] = outer[k + 1] + add;
    }
    let values = (0..n)
        .map(|k| {
            let first = if k == 0 { 0.0 } else { inner[k] / r[k] };
            c * (first + outer[k])
        })
        .collect();
    Field { values }
}

fn cartesian(rho: &[f64], dom: &Domain, h: f64, side: usize) -> Field {
    let cell = h.powi(3);
    let w = 2 * side - 1;
    // kernel table indexed by the offset (dx, dy, dz) shifted into 0..2side−1
    let mut table = vec![0.0; w * w * w];
    for z in 0..w {
        for y in 0..w {
            for x in 0..w {
                let (dx, dy, dz) = (
                    x as f64 - (side - 1) as f64,
                    y as f64 - (side - 1) as f64,
                    z as f64 - (side - 1) as f64,
                );
                let d = (dx * dx + dy * dy + dz * dz).sqrt() * h;
                table[(z * w + y) * w + x] = if d == 0.0 {
                    KERNEL_CONSTANT * h * h * unit_cube_potential()
                } else {
                    KERNEL_CONSTANT * cell / d
                };
            }
        }
    }
    let coords = |i: usize| (i % side, (i / side) % side, i / (side * side));
    let sources: Vec<(usize, f64)> = (0..dom.len())
        .filter(|&j| rho[j] != 0.0)
        .map(|j| (j, rho[j]))
        .collect();
    let values = (0..dom.len())
        .map(|i| {
            let (xi, yi, zi) = coords(i);
            sources
                .iter()
                .map(|&(j, q)| {
                    let (xj, yj, zj) = coords(j);
                    let x = xi + side - 1 - xj;
                    let y = yi + side - 1 - yj;
                    let z = zi + side - 1 - zj;
                    q * table[(z * w + y) * w + x]
                })
                .sum()
        })
        .collect();
    Field { values }
}

/// `G1_D`, exact for balls (`3R² − r²` inside, `2R³/r` outside) and
/// numerical for boxes.
pub fn green_of_indicator(dom: &Domain) -> Field {
    match dom.shape {
        super::mesh::Shape::Ball { radius } => Field::from_fn(dom, |r| {
            if r <= radius {
                3.0 * radius * radius - r * r
            } else {
                2.0 * radius.powi(3) / r
            }
        }),
        super::mesh::Shape::Box { .. } => {
            green_convolve(&dom.indicator(), dom).expect("indicator is supported in D")
        }
    }
}

/// `(⨍_D G1_D, sup G1_D)`.
pub fn indicator_potential_stats(dom: &Domain) -> (f64, f64) {
    let g = green_of_indicator(dom);
    (dom.domain_mean(&g), g.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::mesh::MeshSpec;

    #[test]
    fn unit_ball_newton_potential() {
        let dom = Domain::unit_ball();
        let g = green_convolve(&dom.indicator(), &dom).unwrap();
        let exact = green_of_indicator(&dom);
        let err = g
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        let pairing = dom.inner_domain(&dom.indicator(), &g);
        let target = 16.0 * std::f64::consts::PI / 5.0;
        assert!(((pairing - target) / target).abs() < 1e-3);
    }

    #[test]
    fn linear_in_density() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 200,
                extent: 3.0,
            },
        )
        .unwrap();
        let rho = Field::from_fn(&dom, |r| if r <= 1.0 { 1.0 + r } else { 0.0 });
        let g = green_convolve(&rho, &dom).unwrap();
        let g3 = green_convolve(&rho.scaled(3.0), &dom).unwrap();
        for (a, b) in g.values.iter().zip(&g3.values) {
            assert!((3.0 * a - b).abs() <= 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_support_outside_domain() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 10,
                extent: 2.0,
            },
        )
        .unwrap();
        assert!(green_convolve(&Field::constant(&dom, 1.0), &dom).is_err());
    }

    #[test]
    fn cube_potential_at_center() {
        // unit cube: G1(0) = (3/2π) · ∫_{[−1/2,1/2]³} |z|⁻¹
        let dom = Domain::cube(
            0.5,
            MeshSpec {
                cells: 6,
                extent: 1.5,
            },
        )
        .unwrap();
        let g = green_convolve(&dom.indicator(), &dom).unwrap();
        let center = KERNEL_CONSTANT * unit_cube_potential();
        let near = (0..dom.len())
            .min_by(|&a, &b| dom.radius_of(a).total_cmp(&dom.radius_of(b)))
            .unwrap();
        assert!(((g.values[near] - center) / center).abs() < 0.02);
    }
}
