//! The C¹ extension `θ̃` of a percolation profile and `η̃(b) = θ̃(b²)`.
//!
//! `θ̃` is the base on `[0, u₀]`, the base plus `a (v − u₀)²` on `[u₀, u₁]`
//! with `a` fixed by `θ̃(u₁) = 1`, a monotone three-segment cubic bridge on
//! `[u₁, u₂]`, and `√v` from `u₂ = max(u_*, 4)` on.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::base::{BaseProfile, ThetaBar};
use super::hermite::Hermite;
use crate::error::{invalid, Error, Result};

/// Number of grid points for the invariant checks.
pub const CHECK_GRID: usize = 10_000;
/// Largest admissible one-sided derivative mismatch at piece boundaries.
pub const JOIN_TOLERANCE: f64 = 1e-8;

/// Numerical verdicts of the construction invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Smallest base derivative on `[0, u₀]`.
    pub base_min_slope: f64,
    /// Smallest `θ̃′` on `[0, u₂]`.
    pub min_slope: f64,
    /// Largest `|θ̃′|` on `[0, u₂]`.
    pub max_slope: f64,
    pub value_at_u1: f64,
    /// Largest one-sided value or derivative mismatch at `u₀, u₁, u₂`.
    pub join_mismatch: f64,
    /// Largest `|θ̃(v) − √v|` on `[u₂, 2u₂]`.
    pub tail_error: f64,
    /// Largest `|θ̃ − θ₀|` on `[0, u₀]`.
    pub gamma_below_u0: f64,
    /// Smallest `θ̃ − θ̄₀` on `(u₀, u₂]`.
    pub gamma_min_above_u0: f64,
    /// Smallest `θ̃ − θ̄₀` on `[0, u₂]`.
    pub dominance_margin: f64,
    pub monotone: bool,
}

impl InvariantReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.base_min_slope <= 0.0 {
            out.push(format!(
                "base slope {:.3e} not positive on [0,u0]",
                self.base_min_slope
            ));
        }
        if self.min_slope <= 0.0 {
            out.push(format!("theta slope {:.3e} not positive", self.min_slope));
        }
        if (self.value_at_u1 - 1.0).abs() > 1e-12 {
            out.push(format!("theta(u1) = {}", self.value_at_u1));
        }
        if self.join_mismatch > JOIN_TOLERANCE {
            out.push(format!("C1 join mismatch {:.3e}", self.join_mismatch));
        }
        if self.tail_error > 1e-12 {
            out.push(format!("sqrt tail error {:.3e}", self.tail_error));
        }
        if self.gamma_below_u0 != 0.0 {
            out.push(format!("gamma {:.3e} on [0,u0]", self.gamma_below_u0));
        }
        if self.gamma_min_above_u0 <= 0.0 {
            out.push(format!(
                "gamma {:.3e} not positive above u0",
                self.gamma_min_above_u0
            ));
        }
        if self.dominance_margin < 0.0 {
            out.push(format!(
                "theta below theta-bar by {:.3e}",
                -self.dominance_margin
            ));
        }
        if !self.monotone {
            out.push("theta not nondecreasing".into());
        }
        out
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedTheta {
    pub base: BaseProfile,
    pub u0: f64,
    pub u1: f64,
    pub u2: f64,
    pub u_star: f64,
    /// Quadratic coefficient on `[u₀, u₁]`.
    pub a: f64,
    pub bridge: Hermite,
    /// `sup |η̃′|`.
    pub eta_prime_sup: f64,
    pub checks: InvariantReport,
    /// SHA-256 of the piece boundaries and bridge knots.
    pub bridge_hash: String,
    pub provenance: String,
}

/// Three-segment monotone Hermite bridge from `(x0, y0, d0)` to
/// `(x1, y1, d1)`. The outer segments have end-slope to secant ratio 2 and
/// the inner knots carry harmonic-mean slopes, which keeps every segment
/// strictly increasing.
fn bridge(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64) -> Result<Hermite> {
    let rise = y1 - y0;
    let span = x1 - x0;
    if !(rise > 0.0 && span > 0.0 && d0 > 0.0 && d1 > 0.0) {
        return invalid("bridge needs increasing ends with positive slopes");
    }
    let h1 = (span / 3.0).min(2.0 * rise / (3.0 * d0));
    let h3 = (span / 3.0).min(2.0 * rise / (3.0 * d1));
    let (w1, w3) = (d0 * h1 / 2.0, d1 * h3 / 2.0);
    let (h2, w2) = (span - h1 - h3, rise - w1 - w3);
    let (s1, s2, s3) = (w1 / h1, w2 / h2, w3 / h3);
    let m1 = 2.0 * s1 * s2 / (s1 + s2);
    let m2 = 2.0 * s2 * s3 / (s2 + s3);
    Hermite::new(
        vec![x0, x0 + h1, x1 - h3, x1],
        vec![y0, y0 + w1, y1 - w3, y1],
        vec![d0, m1, m2, d1],
    )
}

fn hash_hex(parts: &[f64]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl SmoothedTheta {
    pub fn build(base: BaseProfile, u0: f64, u1: f64, u_star: f64) -> Result<Self> {
        if !(u0 > 0.0 && u0 < u1 && u1 < u_star && u_star.is_finite()) {
            return invalid(format!(
                "need 0 < u0 < u1 < u_star, got u0 = {u0}, u1 = {u1}, u_star = {u_star}"
            ));
        }
        let grid = |lo: f64, hi: f64| {
            (0..=CHECK_GRID).map(move |i| lo + (hi - lo) * i as f64 / CHECK_GRID as f64)
        };
        let base_min_slope = grid(0.0, u0)
            .map(|v| base.derivative(v))
            .fold(f64::INFINITY, f64::min);
        if base_min_slope <= 0.0 {
            return invalid(format!(
                "base derivative {base_min_slope:.3e} is not positive on [0, u0]"
            ));
        }
        let t1 = base.value(u1);
        if t1 >= 1.0 {
            return invalid(format!("base reaches {t1} ≥ 1 at u1; need θ₀(u1) < 1"));
        }
        let a = (1.0 - t1) / (u1 - u0).powi(2);
        let u2 = u_star.max(4.0);
        let d_left = base.derivative(u1) + 2.0 * a * (u1 - u0);
        let d_right = 0.5 / u2.sqrt();
        let bridge = bridge(u1, 1.0, d_left, u2, u2.sqrt(), d_right)?;
        let mut knots = vec![u0, u1, u2, u_star, a];
        for i in 0..bridge.knots.len() {
            knots.extend([bridge.knots[i], bridge.values[i], bridge.slopes[i]]);
        }
        let mut st = SmoothedTheta {
            provenance: base.provenance(),
            base,
            u0,
            u1,
            u2,
            u_star,
            a,
            bridge,
            eta_prime_sup: 0.0,
            checks: InvariantReport {
                base_min_slope,
                min_slope: 0.0,
                max_slope: 0.0,
                value_at_u1: 0.0,
                join_mismatch: 0.0,
                tail_error: 0.0,
                gamma_below_u0: 0.0,
                gamma_min_above_u0: 0.0,
                dominance_margin: 0.0,
                monotone: false,
            },
            bridge_hash: hash_hex(&knots),
        };
        let bridge_min = grid(u1, u2)
            .map(|v| st.bridge.derivative(v))
            .fold(f64::INFINITY, f64::min);
        if bridge_min <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bridge derivative {bridge_min:.3e} is not positive"
            )));
        }
        st.checks = st.verify();
        // η̃′(b) = 2b θ̃′(b²) and equals 1 past √u₂
        st.eta_prime_sup = grid(0.0, u2.sqrt())
            .map(|b| st.eta_prime(b).abs())
            .fold(1.0, f64::max);
        Ok(st)
    }

    fn verify(&self) -> InvariantReport {
        let n = CHECK_GRID;
        let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / n as f64;
        let bar = ThetaBar {
            base: self.base.clone(),
            u_star: self.u_star,
        };
        let (mut min_slope, mut max_slope) = (f64::INFINITY, 0.0f64);
        let mut gamma_min_above = f64::INFINITY;
        let mut dominance = f64::INFINITY;
        let mut monotone = true;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=n {
            let v = at(0.0, self.u2, i);
            let t = self.theta(v);
            let d = self.theta_prime(v);
            min_slope = min_slope.min(d);
            max_slope = max_slope.max(d.abs());
            monotone &= t >= prev;
            prev = t;
            let g = t - bar.value(v);
            dominance = dominance.min(g);
            if v > self.u0 {
                gamma_min_above = gamma_min_above.min(g);
            }
        }
        let gamma_below = (0..=n)
            .map(|i| at(0.0, self.u0, i))
            .map(|v| (self.theta(v) - self.base.value(v)).abs())
            .fold(0.0, f64::max);
        let tail_error = (0..=n)
            .map(|i| at(self.u2, 2.0 * self.u2, i))
            .map(|v| (self.theta(v) - v.sqrt()).abs())
            .fold(0.0, f64::max);
        let quad = |v: f64| self.base.value(v) + self.a * (v - self.u0).powi(2);
        let quad_d = |v: f64| self.base.derivative(v) + 2.0 * self.a * (v - self.u0);
        let b = &self.bridge;
        let joins = [
            (quad(self.u0) - self.base.value(self.u0)).abs(),
            (quad_d(self.u0) - self.base.derivative(self.u0)).abs(),
            (quad(self.u1) - b.value(self.u1)).abs(),
            (quad_d(self.u1) - b.derivative(self.u1)).abs(),
            (b.value(self.u2) - self.u2.sqrt()).abs(),
            (b.derivative(self.u2) - 0.5 / self.u2.sqrt()).abs(),
        ];
        InvariantReport {
            base_min_slope: self.checks.base_min_slope,
            min_slope,
            max_slope,
            value_at_u1: self.theta(self.u1),
            join_mismatch: joins.into_iter().fold(0.0, f64::max),
            tail_error,
            gamma_below_u0: gamma_below,
            gamma_min_above_u0: gamma_min_above,
            dominance_margin: dominance,
            monotone,
        }
    }

    pub fn theta_bar(&self) -> ThetaBar {
        ThetaBar {
            base: self.base.clone(),
            u_star: self.u_star,
        }
    }

    /// `θ̃(v)` for `v ≥ 0`; negative arguments are clamped to 0.
    pub fn theta(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        if v <= self.u0 {
            self.base.value(v)
        } else if v <= self.u1 {
            self.base.value(v) + self.a * (v - self.u0).powi(2)
        } else if v < self.u2 {
            self.bridge.value(v)
        } else {
            v.sqrt()
        }
    }

    pub fn theta_prime(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        if v <= self.u0 {
            self.base.derivative(v)
        } else if v <= self.u1 {
            self.base.derivative(v) + 2.0 * self.a * (v - self.u0)
        } else if v < self.u2 {
            self.bridge.derivative(v)
        } else {
            0.5 / v.sqrt()
        }
    }

    /// `γ̃ = θ̃ − θ̄₀`.
    pub fn gamma(&self, v: f64) -> f64 {
        self.theta(v) - self.theta_bar().value(v)
    }

    /// `η̃(b) = θ̃(b²)`, even in `b`.
    pub fn eta(&self, b: f64) -> f64 {
        if b.abs() >= self.u2.sqrt() {
            return b.abs();
        }
        self.theta(b * b)
    }

    /// `η̃′(b) = 2b θ̃′(b²)`, odd in `b`.
    pub fn eta_prime(&self, b: f64) -> f64 {
        if b.abs() >= self.u2.sqrt() {
            return b.signum();
        }
        2.0 * b * self.theta_prime(b * b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a profile and checks its hash against its knots.
    pub fn from_json(s: &str) -> Result<Self> {
        let st: SmoothedTheta = serde_json::from_str(s)?;
        let mut knots = vec![st.u0, st.u1, st.u2, st.u_star, st.a];
        for i in 0..st.bridge.knots.len() {
            knots.extend([st.bridge.knots[i], st.bridge.values[i], st.bridge.slopes[i]]);
        }
        if hash_hex(&knots) != st.bridge_hash {
            return Err(Error::Format(
                "profile hash does not match its knots".into(),
            ));
        }
        Ok(st)
    }
}

pub fn build_smoothed_theta(
    base: BaseProfile,
    u0: f64,
    u1: f64,
    u_star: f64,
) -> Result<SmoothedTheta> {
    SmoothedTheta::build(base, u0, u1, u_star)
}
