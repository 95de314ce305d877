//! Dirichlet energy `(1/2d) ∫ |∇φ|²` and its dual form `λ ⟨ρ, φ⟩`.

use super::mesh::{Domain, Field, Grid, DIM};
use crate::error::{Error, Result};
use crate::lattice::gauss_legendre;

/// Dual-gap budget of a converged solve.
pub const DUAL_GAP_TOLERANCE: f64 = 1e-2;
/// Gap beyond which the mesh is declared too coarse.
pub const MESH_GAP_LIMIT: f64 = 5e-2;

/// `∫_{|z|_∞ > 1} |z|⁻⁴ dz = 6 ∫_{[−1,1]²} (1 + y² + z²)⁻² dy dz`.
fn cube_exterior_constant() -> f64 {
    let gl = gauss_legendre(32);
    let mut s = 0.0;
    for &(y, wy) in &gl {
        for &(z, wz) in &gl {
            s += wy * wz / (1.0 + y * y + z * z).powi(2);
        }
    }
    6.0 * s
}

/// Energy on the mesh plus the harmonic tail beyond it.
///
/// Radial meshes difference adjacent shells and weight by exact shell
/// volumes; the tail of `C/r` past `r_max` adds `4π C²/r_max`. Box meshes
/// difference adjacent cells and add the tail of the monopole fitted on the
/// outer layer.
pub fn dirichlet_energy(phi: &Field, dom: &Domain) -> Result<f64> {
    dom.check(phi)?;
    let v = &phi.values;
    let pi = std::f64::consts::PI;
    let scale = 1.0 / (2.0 * DIM as f64);
    Ok(match &dom.grid {
        Grid::Radial { h, r, .. } => {
            let mut e = 0.0;
            for k in 0..r.len() - 1 {
                let g = (v[k + 1] - v[k]) / h;
                e += g * g * 4.0 / 3.0 * pi * (r[k + 1].powi(3) - r[k].powi(3));
            }
            let n = r.len() - 1;
            let c = r[n] * v[n];
            scale * (e + 4.0 * pi * c * c / r[n])
        }
        Grid::Cartesian { h, side, centers } => {
            let s = *side;
            let idx = |x: usize, y: usize, z: usize| (z * s + y) * s + x;
            let mut e = 0.0;
            let (mut q_sum, mut q_n) = (0.0, 0.0);
            for z in 0..s {
                for y in 0..s {
                    for x in 0..s {
                        let i = idx(x, y, z);
                        for (ok, j) in [
                            (x + 1 < s, idx(x + 1, y, z)),
                            (y + 1 < s, idx(x, y + 1, z)),
                            (z + 1 < s, idx(x, y, z + 1)),
                        ] {
                            if ok {
                                let g = (v[j] - v[i]) / h;
                                e += g * g * h.powi(3);
                            }
                        }
                        if [x, y, z].iter().any(|&c| c == 0 || c == s - 1) {
                            let c = centers[i];
                            q_sum += v[i] * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                            q_n += 1.0;
                        }
                    }
                }
            }
            let q = q_sum / q_n;
            // differences stop at the outermost centers, where the tail starts
            let extent = (s - 1) as f64 * h / 2.0;
            scale * (e + q * q * cube_exterior_constant() / extent)
        }
    })
}

/// `(energy, λ⟨ρ, φ⟩)` for `ρ` supported in `D`; fails when the relative gap exceeds
/// [`MESH_GAP_LIMIT`].
pub fn energy_pair(phi: &Field, lambda: f64, rho: &Field, dom: &Domain) -> Result<(f64, f64)> {
    let e = dirichlet_energy(phi, dom)?;
    dom.check(rho)?;
    let dual = lambda * dom.inner_domain(rho, phi);
    let gap = relative_gap(e, dual);
    if gap > MESH_GAP_LIMIT {
        return Err(Error::MeshResolution(gap));
    }
    Ok((e, dual))
}

pub fn relative_gap(energy: f64, dual: f64) -> f64 {
    if energy == 0.0 && dual == 0.0 {
        0.0
    } else {
        (energy - dual).abs() / energy.abs().max(dual.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::green::{green_convolve, green_of_indicator};
    use crate::solver::mesh::MeshSpec;

    #[test]
    fn cube_constant_below_sphere() {
        let k = cube_exterior_constant();
        // between the inscribed (4π) and circumscribed (4π/√3) spheres
        assert!(k < 4.0 * std::f64::consts::PI && k > 4.0 * std::f64::consts::PI / 3f64.sqrt());
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 10,
                extent: 2.0,
            },
        )
        .unwrap();
        let z = Field::zeros(&dom);
        assert_eq!(energy_pair(&z, 0.0, &z, &dom).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn newton_potential_energy() {
        let dom = Domain::unit_ball();
        let lambda = 0.05;
        let phi = green_of_indicator(&dom).scaled(lambda);
        let (e, dual) = energy_pair(&phi, lambda, &dom.indicator(), &dom).unwrap();
        let exact = lambda * lambda * 16.0 * std::f64::consts::PI / 5.0;
        assert!(((e - exact) / exact).abs() < 1e-5, "{e}");
        assert!(((dual - exact) / exact).abs() < 1e-5, "{dual}");
    }

    #[test]
    fn refinement_shrinks_gap() {
        let gap = |cells: usize| {
            let dom = Domain::ball(1.0, MeshSpec { cells, extent: 4.0 }).unwrap();
            let rho = Field::from_fn(&dom, |r| if r <= 1.0 { 1.0 + r * r } else { 0.0 });
            let phi = green_convolve(&rho, &dom).unwrap();
            let (e, d) = energy_pair(&phi, 1.0, &rho, &dom).unwrap();
            relative_gap(e, d)
        };
        let (g1, g2) = (gap(20), gap(40));
        assert!(g2 <= g1 / 2.0, "{g1} {g2}");
    }

    #[test]
    fn box_energy_close_to_dual() {
        let dom = Domain::cube(
            0.5,
            MeshSpec {
                cells: 4,
                extent: 2.0,
            },
        )
        .unwrap();
        let rho = dom.indicator();
        let phi = green_convolve(&rho, &dom).unwrap();
        let (e, d) = energy_pair(&phi, 1.0, &rho, &dom).unwrap();
        assert!(relative_gap(e, d) < MESH_GAP_LIMIT, "{e} {d}");
    }
}
