//! Profiles seen through `η̃`, and the constraint map
//! `Ã(φ) = ⨍_D η̃(√u + φ)` with its differential.

use serde::{Deserialize, Serialize};

use super::smoothed::SmoothedTheta;
use crate::error::{invalid, Result};
use crate::solver::mesh::{Domain, Field};

/// What the solver needs from a profile.
pub trait Profile: Sync {
    fn theta(&self, v: f64) -> f64;
    fn eta(&self, b: f64) -> f64;
    fn eta_prime(&self, b: f64) -> f64;
    /// `sup |η̃′|` over the arguments the solver can reach.
    fn eta_prime_sup(&self) -> f64;
    fn u_star(&self) -> f64;
    /// Identity of the profile recorded in solver outputs.
    fn fingerprint(&self) -> String;
    /// End of the range where the profile is the unmodified base, if any.
    fn base_limit(&self) -> Option<f64> {
        None
    }
}

impl Profile for SmoothedTheta {
    fn theta(&self, v: f64) -> f64 {
        SmoothedTheta::theta(self, v)
    }

    fn eta(&self, b: f64) -> f64 {
        SmoothedTheta::eta(self, b)
    }

    fn eta_prime(&self, b: f64) -> f64 {
        SmoothedTheta::eta_prime(self, b)
    }

    fn eta_prime_sup(&self) -> f64 {
        self.eta_prime_sup
    }

    fn u_star(&self) -> f64 {
        self.u_star
    }

    fn fingerprint(&self) -> String {
        self.bridge_hash.clone()
    }

    fn base_limit(&self) -> Option<f64> {
        Some(self.u0)
    }
}

/// `η̃(b) = θ̃(u) + κ (b − √u)`: affine in `b` on `[√u, ∞)`, so `η̃′ ≡ κ`
/// wherever the solver evaluates it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineToy {
    pub u: f64,
    pub theta_u: f64,
    pub kappa: f64,
    pub u_star: f64,
}

impl AffineToy {
    pub fn new(u: f64, theta_u: f64, kappa: f64, u_star: f64) -> Result<Self> {
        if !(u > 0.0 && kappa > 0.0 && u_star > u && (0.0..1.0).contains(&theta_u)) {
            return invalid("affine toy needs u > 0, κ > 0, u_star > u and θ̃(u) ∈ [0, 1)");
        }
        Ok(AffineToy {
            u,
            theta_u,
            kappa,
            u_star,
        })
    }
}

impl Profile for AffineToy {
    fn theta(&self, v: f64) -> f64 {
        self.eta(v.max(0.0).sqrt())
    }

    fn eta(&self, b: f64) -> f64 {
        self.theta_u + self.kappa * (b.abs() - self.u.sqrt())
    }

    fn eta_prime(&self, b: f64) -> f64 {
        if b < 0.0 {
            -self.kappa
        } else {
            self.kappa
        }
    }

    fn eta_prime_sup(&self) -> f64 {
        self.kappa
    }

    fn u_star(&self) -> f64 {
        self.u_star
    }

    fn fingerprint(&self) -> String {
        format!(
            "affine:u={},theta={},kappa={},u_star={}",
            self.u, self.theta_u, self.kappa, self.u_star
        )
    }
}

fn check_args(u: f64, phi: &Field, dom: &Domain) -> Result<()> {
    if !(u > 0.0) {
        return invalid("level u must be positive");
    }
    dom.check(phi)?;
    if let Some(v) = phi.values.iter().find(|&&v| v < -1e-12) {
        return invalid(format!("field takes negative value {v}"));
    }
    Ok(())
}

/// `Ã(φ) = ⨍_D η̃(√u + φ)`.
pub fn constraint_functional(p: &impl Profile, u: f64, phi: &Field, dom: &Domain) -> Result<f64> {
    check_args(u, phi, dom)?;
    let s = u.sqrt();
    let mapped = Field {
        values: phi.values.iter().map(|v| p.eta(s + v)).collect(),
    };
    Ok(dom.domain_mean(&mapped))
}

/// `A′(φ)ψ = ⨍_D η̃′(√u + φ) ψ`.
pub fn directional_derivative(
    p: &impl Profile,
    u: f64,
    phi: &Field,
    psi: &Field,
    dom: &Domain,
) -> Result<f64> {
    check_args(u, phi, dom)?;
    dom.check(psi)?;
    let s = u.sqrt();
    let mapped = Field {
        values: phi
            .values
            .iter()
            .zip(&psi.values)
            .map(|(v, w)| p.eta_prime(s + v) * w)
            .collect(),
    };
    Ok(dom.domain_mean(&mapped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::mesh::MeshSpec;
    use crate::theta::{build_smoothed_theta, BaseProfile};

    fn setup() -> (SmoothedTheta, Domain) {
        let st = build_smoothed_theta(BaseProfile::linear(0.5).unwrap(), 0.5, 0.9, 3.0).unwrap();
        (
            st,
            Domain::ball(
                1.0,
                MeshSpec {
                    cells: 100,
                    extent: 2.0,
                },
            )
            .unwrap(),
        )
    }

    #[test]
    fn zero_field_gives_theta() {
        let (st, dom) = setup();
        let a = constraint_functional(&st, 0.3, &Field::zeros(&dom), &dom).unwrap();
        assert!((a - st.theta(0.3)).abs() < 1e-14);
    }

    #[test]
    fn affine_regime_constant_field() {
        let (st, dom) = setup();
        let c = 2.5;
        let a = constraint_functional(&st, 0.3, &Field::constant(&dom, c), &dom).unwrap();
        assert!((a - (0.3f64.sqrt() + c)).abs() < 1e-12);
        let psi = Field::from_fn(&dom, |r| 1.0 + r);
        let d = directional_derivative(&st, 0.3, &Field::constant(&dom, c), &psi, &dom).unwrap();
        assert!((d - dom.domain_mean(&psi)).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotients() {
        let (st, dom) = setup();
        let phi = Field::from_fn(&dom, |r| 0.4 * (-r * r).exp());
        let psi = Field::from_fn(&dom, |r| 1.0 - 0.3 * r);
        let d = directional_derivative(&st, 0.3, &phi, &psi, &dom).unwrap();
        let a0 = constraint_functional(&st, 0.3, &phi, &dom).unwrap();
        for t in [1e-3, 1e-4] {
            let moved = Field {
                values: phi
                    .values
                    .iter()
                    .zip(&psi.values)
                    .map(|(a, b)| a + t * b)
                    .collect(),
            };
            let q = (constraint_functional(&st, 0.3, &moved, &dom).unwrap() - a0) / t;
            assert!((q - d).abs() < 50.0 * t, "t = {t}: {q} vs {d}");
        }
        let zero = directional_derivative(&st, 0.3, &phi, &Field::zeros(&dom), &dom).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn rejects_negative_fields() {
        let (st, dom) = setup();
        assert!(constraint_functional(&st, 0.3, &Field::constant(&dom, -1e-9), &dom).is_err());
        assert!(constraint_functional(&st, 0.3, &Field::constant(&dom, -1e-13), &dom).is_ok());
    }
}
