//! Piecewise-cubic Hermite curves, monotone slopes and isotonic regression.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Piecewise cubic with prescribed values and slopes at knots; linear
/// extrapolation with the end slopes outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hermite {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl Hermite {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || values.len() != knots.len() || slopes.len() != knots.len() {
            return invalid("Hermite curve needs ≥ 2 knots with matching values and slopes");
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("knots must be strictly increasing");
        }
        if knots
            .iter()
            .chain(&values)
            .chain(&slopes)
            .any(|v| !v.is_finite())
        {
            return invalid("non-finite knot data");
        }
        Ok(Hermite {
            knots,
            values,
            slopes,
        })
    }

    /// Monotone interpolant of nondecreasing data with Fritsch–Carlson slopes.
    pub fn monotone(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.windows(2).any(|w| w[1] < w[0]) {
            return invalid("monotone interpolation needs nondecreasing values");
        }
        let slopes = monotone_slopes(&knots, &values)?;
        Self::new(knots, values, slopes)
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().expect("≥ 2 knots")
    }

    fn segment(&self, x: f64) -> usize {
        let i = self.knots.partition_point(|&k| k <= x);
        i.clamp(1, self.knots.len() - 1) - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] + self.slopes[0] * (x - self.knots[0]);
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1] + self.slopes[n - 1] * (x - self.knots[n - 1]);
        }
        let i = self.segment(x);
        let h = self.knots[i + 1] - self.knots[i];
        let t = (x - self.knots[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h * h10 * self.slopes[i]
            + h01 * self.values[i + 1]
            + h * h11 * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.slopes[0];
        }
        if x >= self.knots[n - 1] {
            return self.slopes[n - 1];
        }
        let i = self.segment(x);
        let h = self.knots[i + 1] - self.knots[i];
        let t = (x - self.knots[i]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.values[i]
            + d10 * self.slopes[i]
            + d01 * self.values[i + 1]
            + d11 * self.slopes[i + 1]
    }
}

/// Fritsch–Carlson slopes: weighted harmonic means inside, one-sided
/// three-point estimates at the ends, zero at local extrema.
pub fn monotone_slopes(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return invalid("need at least two points with matching lengths");
    }
    let mut h = Vec::with_capacity(n - 1);
    let mut delta = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let hi = x[i + 1] - x[i];
        if hi <= 0.0 {
            return invalid("abscissae must be strictly increasing");
        }
        h.push(hi);
        delta.push((y[i + 1] - y[i]) / hi);
    }
    if n == 2 {
        return Ok(vec![delta[0]; 2]);
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if m.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            m
        }
    };
    let mut m = vec![0.0; n];
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        m[i] = (w1 + w2) / (w1 / a + w2 / b);
    }
    Ok(m)
}

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
pub fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().expect("two blocks") = ((m1 * w1 + m2 * w2) / w, w, n1 + n2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect()
}
