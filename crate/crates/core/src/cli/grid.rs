//! Level and radius grids: `a:b:step` (inclusive), single values, and
//! comma-separated lists of either.

use crate::error::{invalid, Result};

/// Rounding applied to grid points so that `0:1:0.1` yields `0.3`, not
/// `0.30000000000000004`.
const SNAP: f64 = 1e12;
/// Slack within which the upper end counts as reached.
const END_SLACK: f64 = 1e-12;

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| crate::Error::InvalidArgument(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return invalid(format!("not finite: {s:?}"));
    }
    Ok(v)
}

fn snap(v: f64) -> f64 {
    let s = (v * SNAP).round() / SNAP;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Parses a real grid into strictly ascending values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [v] => out.push(number(v)?),
            [a, b, step] => {
                let (a, b, step) = (number(a)?, number(b)?, number(step)?);
                if !(step > 0.0) || b < a {
                    return invalid(format!("grid {part:?} needs step > 0 and a ≤ b"));
                }
                let n = ((b - a) / step + END_SLACK).floor() as usize;
                out.extend((0..=n).map(|k| snap(a + k as f64 * step)));
            }
            _ => return invalid(format!("grid {part:?}: expected a, or a:b:step")),
        }
    }
    if out.is_empty() {
        return invalid("empty grid");
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("grid {spec:?} is not strictly ascending"));
    }
    Ok(out)
}

/// Parses a grid of positive integer radii.
pub fn parse_radii(spec: &str) -> Result<Vec<u32>> {
    let vals = parse_grid(spec)?;
    vals.iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                invalid(format!("radius {v} is not a positive integer"))
            }
        })
        .collect()
}
