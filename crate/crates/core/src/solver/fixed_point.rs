//! Damped iteration of `φ ↦ λ G(η̃′(√u + φ) 1_D)`.

use serde::{Deserialize, Serialize};

use super::green::green_convolve;
use super::mesh::{Domain, Field};
use crate::error::{invalid, Error, Result};
use crate::theta::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Relaxation weight `ω ∈ (0, 1]`.
    pub damping: f64,
    /// Sup-norm change below which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            damping: 1.0,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub phi: Field,
    /// `η̃′(√u + φ) 1_D` at the returned `φ`.
    pub rho: Field,
    /// `G ρ`.
    pub potential: Field,
    pub iterations: usize,
    /// `‖φ − λGρ‖_∞`.
    pub residual: f64,
}

/// `η̃′(√u + φ) 1_D`.
pub fn density(p: &impl Profile, u: f64, phi: &Field, dom: &Domain) -> Field {
    let s = u.sqrt();
    Field {
        values: phi
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if dom.contains_node(i) {
                    p.eta_prime(s + v)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

/// Iterates from `φ ≡ 0` until the sup-norm change drops below `tol`.
pub fn el_fixed_point(
    lambda: f64,
    u: f64,
    p: &impl Profile,
    dom: &Domain,
    opts: &FixedPointOptions,
) -> Result<FixedPoint> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return invalid("λ must be finite and nonnegative");
    }
    if !(u > 0.0) {
        return invalid("level u must be positive");
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) || !(opts.tol > 0.0) {
        return invalid("need damping in (0, 1] and tol > 0");
    }
    let w = opts.damping;
    let mut phi = Field::zeros(dom);
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        let rho = density(p, u, &phi, dom);
        let g = green_convolve(&rho, dom)?;
        let mut change = 0.0f64;
        for (x, gv) in phi.values.iter_mut().zip(&g.values) {
            let next = (1.0 - w) * *x + w * lambda * gv;
            change = change.max((next - *x).abs());
            *x = next;
        }
        history.push(change);
        if !change.is_finite() {
            break;
        }
        if change < opts.tol {
            let rho = density(p, u, &phi, dom);
            let potential = green_convolve(&rho, dom)?;
            let residual = phi
                .values
                .iter()
                .zip(&potential.values)
                .map(|(a, b)| (a - lambda * b).abs())
                .fold(0.0, f64::max);
            return Ok(FixedPoint {
                phi,
                rho,
                potential,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::green::green_of_indicator;
    use crate::solver::mesh::MeshSpec;
    use crate::theta::{build_smoothed_theta, AffineToy, BaseProfile};

    #[test]
    fn zero_multiplier_gives_zero() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 50,
                extent: 2.0,
            },
        )
        .unwrap();
        let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0).unwrap();
        let fp = el_fixed_point(0.0, 0.5, &toy, &dom, &Default::default()).unwrap();
        assert_eq!(fp.phi.sup_norm(), 0.0);
    }

    #[test]
    fn affine_closed_form() {
        let dom = Domain::unit_ball();
        let toy = AffineToy::new(0.5, 0.3, 2.0, 3.0).unwrap();
        let fp = el_fixed_point(0.05, 0.5, &toy, &dom, &Default::default()).unwrap();
        let exact = green_of_indicator(&dom).scaled(0.05 * 2.0);
        let err = fp
            .phi
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!((fp.phi.values[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn nonlinear_solve_satisfies_residual_and_sup_bound() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 200,
                extent: 5.0,
            },
        )
        .unwrap();
        let st = build_smoothed_theta(BaseProfile::linear(0.5).unwrap(), 0.5, 0.9, 3.0).unwrap();
        let opts = FixedPointOptions {
            damping: 0.8,
            ..Default::default()
        };
        let fp = el_fixed_point(0.05, 0.2, &st, &dom, &opts).unwrap();
        assert!(fp.residual <= 10.0 * opts.tol);
        assert!(fp.phi.values.iter().all(|&v| v >= 0.0));
        let bound = 0.05 * st.eta_prime_sup * green_of_indicator(&dom).sup_norm();
        assert!(fp.phi.sup_norm() <= bound);
    }

    #[test]
    fn divergence_is_reported() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 20,
                extent: 2.0,
            },
        )
        .unwrap();
        let st = build_smoothed_theta(BaseProfile::linear(0.5).unwrap(), 0.5, 0.9, 3.0).unwrap();
        let opts = FixedPointOptions {
            max_iter: 2,
            ..Default::default()
        };
        match el_fixed_point(5.0, 0.2, &st, &dom, &opts) {
            Err(Error::NoConvergence { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
