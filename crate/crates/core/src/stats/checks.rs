//! Level-increment identities and Poisson statistics of soups.

use serde::{Deserialize, Serialize};

use super::ensemble::Ensemble;
use crate::error::{invalid, Result};
use crate::lattice::green_origin;
use crate::sim::{LevelMap, SoupSummary};

/// Independence check between the vacant connection at level `u` and
/// occupation of the origin by walks with labels in `(u, u+ε]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IncrementReport {
    pub u: f64,
    pub eps: f64,
    pub probe_radius: u32,
    pub theta_u: f64,
    pub theta_u_se: f64,
    /// `1 − e^{−ε/g(0,0)}`.
    pub occupation_factor: f64,
    /// `P[0 ↔ ∂B_L at u, 0 ∈ 𝓘^{u,u+ε}]`.
    pub joint: f64,
    pub joint_se: f64,
    /// `(1 − θ̂(u)) (1 − e^{−ε/g})`.
    pub product: f64,
    /// Standard error of `joint − product` from per-soup differences.
    pub identity_se: f64,
    /// Effect of stopping walks at the guard: `g` is replaced by the Green
    /// function killed on leaving the guard, which is smaller by at most
    /// the Green function at the guard radius.
    pub finite_volume_slack: f64,
    /// `(θ̂(u+ε) − θ̂(u))/ε`.
    pub quotient: f64,
    /// `(1 − θ̂(u))(1 − e^{−ε/g})/ε`.
    pub quotient_lower: f64,
    /// Standard error of `quotient − quotient_lower`.
    pub quotient_se: f64,
}

impl IncrementReport {
    pub fn identity_holds(&self) -> bool {
        (self.joint - self.product).abs() <= 3.0 * self.identity_se + self.finite_volume_slack
    }

    pub fn lower_bound_holds(&self) -> bool {
        self.quotient >= self.quotient_lower - 3.0 * self.quotient_se
    }
}

/// `Γ(x)` for positive integers and half-integers.
fn gamma_half_integer(x: f64) -> f64 {
    if x <= 0.5 + 1e-12 {
        return std::f64::consts::PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma_half_integer(x - 1.0)
}

/// Continuum Green constant: `g(x) ~ c_d |x|^{2−d}`.
pub(crate) fn green_tail_constant(d: usize) -> f64 {
    let df = d as f64;
    df * gamma_half_integer(df / 2.0 - 1.0) / (2.0 * std::f64::consts::PI.powf(df / 2.0))
}

pub fn lemma11_identity_check(ens: &Ensemble, u: f64, eps: f64, l: u32) -> Result<IncrementReport> {
    if eps <= 0.0 {
        return invalid("ε must be positive");
    }
    ens.check_radius(l)?;
    ens.check_level(u)?;
    ens.check_level(u + eps)?;
    let d = ens.config.dim;
    let g = green_origin(d)?;
    let f = 1.0 - (-eps / g).exp();
    let li = l as usize - 1;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let (theta_u, theta_u_se) = ens.mean_se(|s| ind(u >= s.thresholds[li]));
    let joint_of = |s: &crate::sim::SoupSummary| {
        ind(s.thresholds[li] > u && s.origin_label > u && s.origin_label <= u + eps)
    };
    let (joint, joint_se) = ens.mean_se(joint_of);
    let (diff, identity_se) = ens.mean_se(|s| joint_of(s) - (1.0 - ind(u >= s.thresholds[li])) * f);
    let product = joint - diff;
    let guard = (ens.window_radius() * ens.config.guard_factor) as f64 + 1.0;
    let dg = green_tail_constant(d) * guard.powf(2.0 - d as f64);
    let finite_volume_slack = (1.0 - theta_u) * eps * dg / (g * (g - dg));
    let (quotient, _) = ens.mean_se(|s| {
        let t = s.thresholds[li];
        ind(u < t && t <= u + eps) / eps
    });
    let (q_diff, quotient_se) = ens.mean_se(|s| {
        let t = s.thresholds[li];
        (ind(u < t && t <= u + eps) + f * ind(t <= u)) / eps
    });
    let quotient_lower = quotient - (q_diff - f / eps);
    Ok(IncrementReport {
        u,
        eps,
        probe_radius: l,
        theta_u,
        theta_u_se,
        occupation_factor: f,
        joint,
        joint_se,
        product,
        identity_se,
        finite_volume_slack,
        quotient,
        quotient_lower,
        quotient_se,
    })
}

/// Frequency of two or more labels in a window of width `λ/cap`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoissonTailCheck {
    pub lambda: f64,
    pub u: f64,
    pub width: f64,
    pub frequency: f64,
    pub stderr: f64,
    /// Exact `1 − e^{−λ} − λe^{−λ}`.
    pub exact: f64,
    /// `λ²/2`.
    pub bound: f64,
}

impl PoissonTailCheck {
    pub fn holds(&self) -> bool {
        self.frequency <= self.bound + 3.0 * self.stderr
    }
}

pub fn poisson_tail_check(ens: &Ensemble, u: f64, lambda: f64) -> Result<PoissonTailCheck> {
    if lambda <= 0.0 {
        return invalid("λ must be positive");
    }
    let width = lambda / ens.capacity.value;
    ens.check_level(u)?;
    ens.check_level(u + width)?;
    let (frequency, stderr) = ens.mean_se(|s| {
        if s.labels_in(u, u + width) >= 2 {
            1.0
        } else {
            0.0
        }
    });
    Ok(PoissonTailCheck {
        lambda,
        u,
        width,
        frequency,
        stderr,
        exact: 1.0 - (-lambda).exp() - lambda * (-lambda).exp(),
        bound: lambda * lambda / 2.0,
    })
}

/// Empirical `P[0 ∈ 𝓘^u]` against `1 − e^{−u/g(0,0)}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub u: f64,
    pub frequency: f64,
    pub stderr: f64,
    pub expected: f64,
}

impl MarginalCheck {
    pub fn holds(&self) -> bool {
        (self.frequency - self.expected).abs() <= 3.0 * self.stderr
    }
}

pub fn origin_marginal_check(ens: &Ensemble, u: f64) -> Result<MarginalCheck> {
    ens.check_level(u)?;
    let g = green_origin(ens.config.dim)?;
    let (frequency, stderr) = ens.mean_se(|s| if s.origin_occupied(u) { 1.0 } else { 0.0 });
    Ok(MarginalCheck {
        u,
        frequency,
        stderr,
        expected: 1.0 - (-u / g).exp(),
    })
}

/// Mean walk count against the Poisson mean `u_max · cap`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CountCheck {
    pub mean: f64,
    pub stderr: f64,
    pub intensity: f64,
}

impl CountCheck {
    pub fn holds(&self) -> bool {
        (self.mean - self.intensity).abs() <= 3.0 * self.stderr
    }
}

pub fn trajectory_count_check(ens: &Ensemble) -> CountCheck {
    let (mean, stderr) = ens.mean_se(|s| s.labels.len() as f64);
    CountCheck {
        mean,
        stderr,
        intensity: ens.config.u_max * ens.capacity.value,
    }
}

/// Per-soup monotonicity violations of `{0 ↮ ∂B_L}` recomputed by direct
/// cluster search at every (level, radius) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingViolations {
    /// Connected at a higher level but not at a lower one.
    pub level: u64,
    /// Connected to `∂B_L` but not to `∂B_K` for some `K < L`.
    pub radius: u64,
    /// Direct search disagrees with the summary's thresholds.
    pub threshold: u64,
}

impl CouplingViolations {
    pub fn total(&self) -> u64 {
        self.level + self.radius + self.threshold
    }

    pub fn add(&mut self, o: &CouplingViolations) {
        self.level += o.level;
        self.radius += o.radius;
        self.threshold += o.threshold;
    }
}

/// Counts violations on one soup over ascending `levels` and `radii`.
pub fn coupling_violations(
    map: &LevelMap,
    summary: &SoupSummary,
    levels: &[f64],
    radii: &[u32],
    scratch: &mut Vec<u32>,
) -> CouplingViolations {
    let mut v = CouplingViolations::default();
    let connected: Vec<Vec<bool>> = levels
        .iter()
        .map(|&u| {
            radii
                .iter()
                .map(|&l| map.reach(u, l, scratch).is_some_and(|r| r >= l))
                .collect()
        })
        .collect();
    for (i, row) in connected.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == summary.disconnected(radii[j], levels[i]) {
                v.threshold += 1;
            }
            if j > 0 && c && !row[j - 1] {
                v.radius += 1;
            }
            if i > 0 && c && !connected[i - 1][j] {
                v.level += 1;
            }
        }
    }
    v
}
