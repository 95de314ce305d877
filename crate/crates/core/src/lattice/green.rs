//! Green function at the origin and Monte Carlo escape frequencies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, hop::HopKit, walk::step, Coords, MAX_DIM};
use crate::error::{invalid, Result};
use crate::rng::{stream_rng, StreamTag};

/// `e^{-x} I_0(x)` for `x ≥ 0`.
pub(crate) fn scaled_bessel_i0(x: f64) -> f64 {
    if x <= 25.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        asymptotic_series(x, &bessel_asymptotic_coeffs(30))
            / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Coefficients `a_k` of `e^{-x} I_0(x) ~ (2πx)^{-1/2} Σ a_k x^{-k}`.
fn bessel_asymptotic_coeffs(n: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    for k in 1..n {
        let t = (2 * k - 1) as f64;
        a.push(a[k - 1] * t * t / (8.0 * k as f64));
    }
    a
}

fn asymptotic_series(x: f64, a: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut xp = 1.0;
    for &c in a {
        let t = c * xp;
        if t.abs() > prev {
            break;
        }
        sum += t;
        prev = t.abs();
        xp /= x;
    }
    sum
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Expected number of visits to the origin of the simple random walk on
/// ℤ^d started there.
///
/// Uses `g = d ∫_0^∞ (e^{-s} I_0(s))^d ds`, the time integral of the
/// continuous-time return probability, which factorizes over coordinates.
/// The integral is split into geometric Gauss–Legendre panels up to `s = 512`
/// and a tail integrated term-wise from the asymptotic Bessel series.
pub fn green_origin(d: usize) -> Result<f64> {
    check_dim(d)?;
    let nodes = gauss_legendre(24);
    let f = |s: f64| scaled_bessel_i0(s).powi(d as i32);
    let mut edges = vec![0.0, 0.25, 0.5];
    while *edges.last().expect("nonempty") < 512.0 {
        let e = edges.last().expect("nonempty") * 2.0;
        edges.push(e);
    }
    let mut body = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        body += half
            * nodes
                .iter()
                .map(|&(x, wt)| wt * f(mid + half * x))
                .sum::<f64>();
    }
    // (Σ a_k s^{-k})^d as a power series in 1/s
    let s_max = *edges.last().expect("nonempty");
    let a = bessel_asymptotic_coeffs(8);
    let mut pow = vec![1.0];
    for _ in 0..d {
        let mut next = vec![0.0; a.len()];
        for (i, p) in pow.iter().enumerate() {
            for (j, c) in a.iter().enumerate() {
                if i + j < next.len() {
                    next[i + j] += p * c;
                }
            }
        }
        pow = next;
    }
    let half_d = d as f64 / 2.0;
    let tail: f64 = pow
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let e = half_d + j as f64 - 1.0;
            b * s_max.powf(-e) / e
        })
        .sum::<f64>()
        / (2.0 * std::f64::consts::PI).powf(half_d);
    Ok(d as f64 * (body + tail))
}

/// Monte Carlo estimate of the never-return probability `1/g(0,0)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeverReturnEstimate {
    /// Extrapolated never-return probability.
    pub value: f64,
    pub stderr: f64,
    pub walks: u64,
    /// Inner truncation radius `R`; the outer one is `2R`.
    pub radius: u32,
    /// Fraction escaping `B(0,R)` before returning.
    pub escape_inner: f64,
    /// Fraction escaping `B(0,2R)` before returning.
    pub escape_outer: f64,
}

const WALK_BATCH: u64 = 10_000;

/// Runs `walks` walks from the origin, each until it returns or leaves
/// `B(0, 2R)`, recording escape from both `B(0,R)` and `B(0,2R)`.
///
/// Truncated escape overestimates the never-return probability by a term of
/// order `R^{2-d}`; the two coupled radii cancel it to leading order by
/// Richardson extrapolation with weight `2^{d-2}`.
pub fn never_return_frequency(
    d: usize,
    walks: u64,
    radius: u32,
    seed: u64,
) -> Result<NeverReturnEstimate> {
    check_dim(d)?;
    if walks == 0 || radius < 2 {
        return invalid("need at least one walk and radius ≥ 2");
    }
    let kit = HopKit::new(d)?;
    let batches = walks.div_ceil(WALK_BATCH);
    let (inner, outer) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, StreamTag::NeverReturn, b);
            let n = WALK_BATCH.min(walks - b * WALK_BATCH);
            let r1 = radius as i64;
            let r2 = 2 * r1;
            let (mut c1, mut c2) = (0u64, 0u64);
            for _ in 0..n {
                let mut x: Coords = [0; MAX_DIM];
                step(&mut x, d, &mut rng);
                let mut past_inner = false;
                loop {
                    let m = x[..d].iter().map(|c| c.abs()).max().unwrap_or(0);
                    if m == 0 {
                        break;
                    }
                    if !past_inner && m > r1 {
                        past_inner = true;
                        c1 += 1;
                    }
                    if m > r2 {
                        c2 += 1;
                        break;
                    }
                    let target = if past_inner { r2 } else { r1 };
                    let room = (m - 1).min(target - m);
                    if !kit.hop(&mut x, room, &mut rng) {
                        step(&mut x, d, &mut rng);
                    }
                }
            }
            (c1, c2)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = walks as f64;
    let p1 = inner as f64 / n;
    let p2 = outer as f64 / n;
    let w = 2f64.powi(d as i32 - 2);
    let value = (w * p2 - p1) / (w - 1.0);
    // outer escape implies inner escape, so E[Z²] has no cross term beyond p2
    let second = (w * w * p2 - 2.0 * w * p2 + p1) / ((w - 1.0) * (w - 1.0));
    let var = (second - value * value).max(0.0);
    Ok(NeverReturnEstimate {
        value,
        stderr: (var / n).sqrt(),
        walks,
        radius,
        escape_inner: p1,
        escape_outer: p2,
    })
}
