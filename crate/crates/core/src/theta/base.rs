//! Percolation-function profiles on `[0, u₀]` and beyond.

use serde::{Deserialize, Serialize};

use super::hermite::{isotonic, Hermite};
use crate::error::{invalid, Error, Result};
use crate::stats::ThetaCurve;

/// Slope added to fitted profiles so their derivative stays positive.
pub const FIT_SLOPE_FLOOR: f64 = 1e-3;
/// Smallest number of curve levels inside `[0, u₀]` for a fit.
pub const MIN_FIT_LEVELS: usize = 8;

/// A C¹ nondecreasing stand-in for `θ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseProfile {
    /// `θ₀(v) = slope · v`.
    Linear { slope: f64 },
    /// Monotone cubic through isotonic-regressed estimates plus
    /// `FIT_SLOPE_FLOOR · v`.
    Fitted { curve: Hermite, source: String },
}

impl BaseProfile {
    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return invalid("linear profile needs a positive finite slope");
        }
        Ok(BaseProfile::Linear { slope })
    }

    /// Parses `linear:<slope>`.
    pub fn toy(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            Some(("linear", s)) => {
                let slope = s
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("toy slope {s:?}: {e}")))?;
                Self::linear(slope)
            }
            _ => invalid(format!(
                "unknown toy profile {spec:?}; expected linear:<slope>"
            )),
        }
    }

    /// Fits the estimates of `curve` on levels up to `u0`, which must hold at
    /// least [`MIN_FIT_LEVELS`] levels starting at 0.
    pub fn fit(curve: &ThetaCurve, u0: f64, source: impl Into<String>) -> Result<Self> {
        let idx: Vec<usize> = (0..curve.len())
            .filter(|&i| curve.levels[i] <= u0 + 1e-12)
            .collect();
        if idx.len() < MIN_FIT_LEVELS {
            return invalid(format!(
                "curve has {} levels in [0, {u0}], {MIN_FIT_LEVELS} needed",
                idx.len()
            ));
        }
        if curve.levels[0] != 0.0 {
            return invalid("curve must start at level 0");
        }
        let xs: Vec<f64> = idx.iter().map(|&i| curve.levels[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| curve.estimates[i]).collect();
        let ws: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let se = curve.stderrs[i];
                if se > 0.0 {
                    1.0 / (se * se)
                } else {
                    1.0 / (1e-4f64).powi(2)
                }
            })
            .collect();
        let iso = isotonic(&ys, &ws);
        let base = Hermite::monotone(xs.clone(), iso)?;
        let slopes = base.slopes.iter().map(|m| m + FIT_SLOPE_FLOOR).collect();
        let values = xs
            .iter()
            .zip(&base.values)
            .map(|(x, y)| y + FIT_SLOPE_FLOOR * x)
            .collect();
        Ok(BaseProfile::Fitted {
            curve: Hermite::new(xs, values, slopes)?,
            source: source.into(),
        })
    }

    pub fn value(&self, v: f64) -> f64 {
        match self {
            BaseProfile::Linear { slope } => slope * v,
            BaseProfile::Fitted { curve, .. } => curve.value(v),
        }
    }

    pub fn derivative(&self, v: f64) -> f64 {
        match self {
            BaseProfile::Linear { slope } => *slope,
            BaseProfile::Fitted { curve, .. } => curve.derivative(v),
        }
    }

    /// `toy:<name>` or `fit:<source>`.
    pub fn provenance(&self) -> String {
        match self {
            BaseProfile::Linear { slope } => format!("toy:linear:{slope}"),
            BaseProfile::Fitted { source, .. } => format!("fit:{source}"),
        }
    }
}

/// `θ̄₀`: the base clipped to `[0, 1]` below `u_*` and 1 from `u_*` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBar {
    pub base: BaseProfile,
    pub u_star: f64,
}

impl ThetaBar {
    pub fn new(base: BaseProfile, u_star: f64) -> Result<Self> {
        if !(u_star > 0.0 && u_star.is_finite()) {
            return invalid("u_* must be positive and finite");
        }
        Ok(ThetaBar { base, u_star })
    }

    pub fn value(&self, u: f64) -> f64 {
        if u >= self.u_star {
            1.0
        } else {
            self.base.value(u).clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(levels: Vec<f64>, estimates: Vec<f64>) -> ThetaCurve {
        let n = levels.len();
        ThetaCurve {
            levels,
            estimates,
            stderrs: vec![0.01; n],
            probe_radius: 4,
            window_radius: 8,
            soups: 100,
            seed: 0,
        }
    }

    #[test]
    fn toy_parsing() {
        assert_eq!(
            BaseProfile::toy("linear:0.5").unwrap(),
            BaseProfile::Linear { slope: 0.5 }
        );
        assert!(BaseProfile::toy("linear:-1").is_err());
        assert!(BaseProfile::toy("cubic:1").is_err());
        assert!(BaseProfile::toy("linear:x").is_err());
    }

    #[test]
    fn fit_is_increasing_and_starts_at_zero() {
        let levels: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let est = vec![0.0, 0.05, 0.04, 0.1, 0.1, 0.2, 0.25, 0.24, 0.3, 0.4, 0.45];
        let b = BaseProfile::fit(&curve(levels, est), 1.0, "c.csv").unwrap();
        assert_eq!(b.value(0.0), 0.0);
        for i in 0..=1000 {
            let v = i as f64 * 1e-3;
            assert!(b.derivative(v) >= FIT_SLOPE_FLOOR * (1.0 - 1e-12), "{v}");
        }
        assert_eq!(b.provenance(), "fit:c.csv");
    }

    #[test]
    fn fit_needs_enough_levels() {
        let levels: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        assert!(BaseProfile::fit(&curve(levels, vec![0.0; 5]), 1.0, "c").is_err());
    }

    #[test]
    fn theta_bar_jumps_to_one() {
        let tb = ThetaBar::new(BaseProfile::linear(0.1).unwrap(), 3.0).unwrap();
        assert!((tb.value(2.0) - 0.2).abs() < 1e-15);
        assert_eq!(tb.value(3.0), 1.0);
    }
}
