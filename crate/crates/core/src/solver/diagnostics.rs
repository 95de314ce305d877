//! Sweeps and structural checks built on [`solve_min`]: multiplier scaling,
//! rearrangement, dilation, the `ν ↦ J` curve and the affine threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::dirichlet_energy;
use super::green::indicator_potential_stats;
use super::mesh::{Domain, Field, Grid, Shape, DIM};
use super::minimize::{solve_min, MinimizerResult, SolveOptions, CONSTRAINT_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::theta::{AffineToy, Profile};

/// Accepted range of the log-log slope of `λ̃` against `ν − θ̃(u)`.
pub const SLOPE_RANGE: (f64, f64) = (0.9, 1.1);
/// Relative tolerance of the dilation energy law.
pub const DILATION_TOLERANCE: f64 = 1e-2;

fn solve_all(
    u: f64,
    p: &impl Profile,
    dom: &Domain,
    nus: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<MinimizerResult>> {
    nus.par_iter()
        .map(|&nu| solve_min(u, nu, p, dom, opts))
        .collect()
}

fn check_grid(nus: &[f64], min: usize) -> Result<()> {
    if nus.len() < min {
        return invalid(format!("need at least {min} ν values, got {}", nus.len()));
    }
    if nus.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("ν grid must be strictly increasing");
    }
    Ok(())
}

/// Least-squares slope and intercept.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScaling {
    /// `(ν − θ̃(u), λ̃)` per sweep point.
    pub points: Vec<(f64, f64)>,
    /// Slope of `log λ̃` against `log(ν − θ̃(u))`.
    pub slope: f64,
    pub intercept: f64,
    /// `min λ̃ / (ν − θ̃(u))`.
    pub c_lower: f64,
    /// `max λ̃ / (ν − θ̃(u))`.
    pub c_upper: f64,
    /// `1 / (sup η̃′² ⨍_D G1_D)`.
    pub lower_bound: f64,
    pub lower_bound_ok: bool,
    pub slope_ok: bool,
}

/// Regresses `log λ̃` on `log(ν − θ̃(u))` over a sweep of at least three
/// points above `θ̃(u)`.
pub fn lambda_scaling_check(
    u: f64,
    p: &impl Profile,
    dom: &Domain,
    nus: &[f64],
    opts: &SolveOptions,
) -> Result<LambdaScaling> {
    check_grid(nus, 3)?;
    let theta_u = p.theta(u);
    if nus[0] <= theta_u {
        return invalid(format!("sweep must lie above θ̃(u) = {theta_u}"));
    }
    let results = solve_all(u, p, dom, nus, opts)?;
    let points: Vec<(f64, f64)> = results.iter().map(|r| (r.nu - theta_u, r.lambda)).collect();
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let ratios = points.iter().map(|p| p.1 / p.0);
    let c_lower = ratios.clone().fold(f64::INFINITY, f64::min);
    let c_upper = ratios.fold(0.0, f64::max);
    let (mean_g, _) = indicator_potential_stats(dom);
    let sup = p.eta_prime_sup();
    let lower_bound = 1.0 / (sup * sup * mean_g);
    let lower_bound_ok = points
        .iter()
        .all(|&(excess, lambda)| lambda >= (excess - CONSTRAINT_TOLERANCE) * lower_bound);
    Ok(LambdaScaling {
        points,
        slope,
        intercept,
        c_lower,
        c_upper,
        lower_bound,
        lower_bound_ok,
        slope_ok: (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope),
    })
}

fn radial_mesh(dom: &Domain) -> Result<&[f64]> {
    match &dom.grid {
        Grid::Radial { r, .. } => Ok(r),
        Grid::Cartesian { .. } => invalid("operation needs a ball domain"),
    }
}

/// Symmetric decreasing rearrangement on a radial mesh.
///
/// Node values are sorted in decreasing order and laid out by volume: node
/// `k` takes the sorted value whose cumulative volume covers the midpoint
/// of `k`'s shell.
pub fn rearrange_radial(phi: &Field, dom: &Domain) -> Result<Field> {
    radial_mesh(dom)?;
    dom.check(phi)?;
    if phi.values.iter().any(|&v| v < 0.0) {
        return invalid("rearrangement needs φ ≥ 0");
    }
    let mut order: Vec<usize> = (0..dom.len()).collect();
    order.sort_by(|&a, &b| phi.values[b].total_cmp(&phi.values[a]).then(a.cmp(&b)));
    let mut cumulative = Vec::with_capacity(order.len());
    let mut total = 0.0;
    for &i in &order {
        total += dom.weights[i];
        cumulative.push(total);
    }
    let mut values = Vec::with_capacity(dom.len());
    let mut before = 0.0;
    let mut j = 0;
    for k in 0..dom.len() {
        let mid = before + 0.5 * dom.weights[k];
        while j + 1 < order.len() && cumulative[j] < mid {
            j += 1;
        }
        values.push(phi.values[order[j]]);
        before += dom.weights[k];
    }
    Ok(Field { values })
}

/// Largest gap, in radius units, between the balls whose volumes are the
/// distribution functions `|{f > t}|` and `|{g > t}|`, over all thresholds
/// `t` taken by either field.
pub fn distribution_mismatch(f: &Field, g: &Field, dom: &Domain) -> Result<f64> {
    dom.check(f)?;
    dom.check(g)?;
    let sorted = |x: &Field| {
        let mut v: Vec<(f64, f64)> = x
            .values
            .iter()
            .cloned()
            .zip(dom.weights.iter().cloned())
            .collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        v
    };
    let (a, b) = (sorted(f), sorted(g));
    let radius = |m: f64| (3.0 * m / (4.0 * std::f64::consts::PI)).cbrt();
    let mut thresholds: Vec<f64> = a.iter().chain(&b).map(|p| p.0).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut worst = 0.0f64;
    let prefix = |v: &[(f64, f64)]| {
        let mut s = Vec::with_capacity(v.len() + 1);
        s.push(0.0);
        for p in v {
            s.push(s.last().unwrap() + p.1);
        }
        s
    };
    let (pa, pb) = (prefix(&a), prefix(&b));
    // |{x > t}| is the prefix up to the first value ≤ t
    let count_above = |v: &[(f64, f64)], t: f64| v.partition_point(|p| p.0 > t);
    for &t in &thresholds {
        let da = pa[count_above(&a, t)];
        let db = pb[count_above(&b, t)];
        worst = worst.max((radius(da) - radius(db)).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub scale: f64,
    pub energy: f64,
    pub dilated_energy: f64,
    /// `scale^{d−2}`.
    pub expected_ratio: f64,
    pub ratio: f64,
    pub relative_error: f64,
    pub energy_ok: bool,
    pub constraint_error: f64,
    pub saturated: bool,
}

/// Value of `φ` at a point of space, interpolated on the mesh and
/// continued harmonically past it.
fn sample(phi: &Field, dom: &Domain, x: [f64; 3]) -> f64 {
    let v = &phi.values;
    match &dom.grid {
        Grid::Radial { h, r, .. } => {
            let rad = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let n = r.len() - 1;
            if rad >= r[n] {
                return v[n] * r[n] / rad;
            }
            let k = ((rad / h).floor() as usize).min(n - 1);
            let t = (rad - r[k]) / h;
            (1.0 - t) * v[k] + t * v[k + 1]
        }
        Grid::Cartesian { h, side, centers } => {
            let s = *side;
            let lo = centers[0][0];
            let hi = centers[centers.len() - 1][0];
            if x.iter().any(|&c| c < lo || c > hi) {
                let (q, _) = monopole(phi, dom);
                let rad = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                return q / rad;
            }
            let mut idx = [0usize; 3];
            let mut frac = [0.0; 3];
            for a in 0..3 {
                let t = (x[a] - lo) / h;
                let i = (t.floor() as usize).min(s - 2);
                idx[a] = i;
                frac[a] = t - i as f64;
            }
            let mut out = 0.0;
            for corner in 0..8usize {
                let mut w = 1.0;
                let mut at = [0usize; 3];
                for a in 0..3 {
                    let up = (corner >> a) & 1;
                    at[a] = idx[a] + up;
                    w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                }
                out += w * v[(at[2] * s + at[1]) * s + at[0]];
            }
            out
        }
    }
}

/// Mean of `|z| φ(z)` over the outer layer of a box mesh.
fn monopole(phi: &Field, dom: &Domain) -> (f64, usize) {
    let Grid::Cartesian { side, centers, .. } = &dom.grid else {
        return (0.0, 0);
    };
    let s = *side;
    let (mut q, mut n) = (0.0, 0);
    for (i, c) in centers.iter().enumerate() {
        let (x, y, z) = (i % s, (i / s) % s, i / (s * s));
        if [x, y, z].iter().any(|&t| t == 0 || t == s - 1) {
            q += phi.values[i] * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            n += 1;
        }
    }
    (q / n as f64, n)
}

/// `φ(·/s)` on the same mesh.
pub fn dilate(phi: &Field, dom: &Domain, scale: f64) -> Result<Field> {
    if !(scale > 0.0 && scale <= 1.0) {
        return invalid("dilation scale must lie in (0, 1]");
    }
    dom.check(phi)?;
    let values = (0..dom.len())
        .map(|i| {
            let x = match &dom.grid {
                Grid::Radial { r, .. } => [r[i], 0.0, 0.0],
                Grid::Cartesian { centers, .. } => centers[i],
            };
            sample(phi, dom, [x[0] / scale, x[1] / scale, x[2] / scale])
        })
        .collect();
    Ok(Field { values })
}

/// Compares the energy of `φ(·/s)` with `s^{d−2}` times that of `φ`, and
/// confirms the minimizer saturates its constraint.
pub fn dilation_check(
    result: &MinimizerResult,
    dom: &Domain,
    scale: f64,
) -> Result<DilationReport> {
    let phi = result.field();
    let dilated = dilate(&phi, dom, scale)?;
    let energy = dirichlet_energy(&phi, dom)?;
    let dilated_energy = dirichlet_energy(&dilated, dom)?;
    let expected_ratio = scale.powi(DIM as i32 - 2);
    let (ratio, relative_error) = if energy == 0.0 {
        (
            expected_ratio,
            if dilated_energy == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
        )
    } else {
        let ratio = dilated_energy / energy;
        (ratio, (ratio - expected_ratio).abs() / expected_ratio)
    };
    let constraint_error = (result.constraint - result.nu).abs();
    Ok(DilationReport {
        scale,
        energy,
        dilated_energy,
        expected_ratio,
        ratio,
        relative_error,
        energy_ok: relative_error <= DILATION_TOLERANCE,
        constraint_error,
        saturated: constraint_error <= CONSTRAINT_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JPoint {
    pub nu: f64,
    pub j: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCurve {
    pub points: Vec<JPoint>,
    /// `J(ν_i) − chord` at interior points; negative where locally convex.
    pub convexity_gaps: Vec<f64>,
    /// `(δ, |J(ν₀ + δ) − J(ν₀)|)` for halving `δ`.
    pub continuity: Vec<(f64, f64)>,
    /// Continuity gaps shrink with every halving.
    pub continuity_ok: bool,
}

/// Solves along an increasing `ν` grid; any pair with `J` not strictly
/// increasing is a [`Error::NonMonotone`] failure.
pub fn j_curve(
    u: f64,
    p: &impl Profile,
    dom: &Domain,
    nus: &[f64],
    opts: &SolveOptions,
) -> Result<JCurve> {
    check_grid(nus, 2)?;
    let results = solve_all(u, p, dom, nus, opts)?;
    let points: Vec<JPoint> = results
        .iter()
        .map(|r| JPoint {
            nu: r.nu,
            j: r.energy,
            lambda: r.lambda,
        })
        .collect();
    if let Some(w) = points.windows(2).find(|w| !(w[1].j > w[0].j)) {
        return Err(Error::NonMonotone(format!(
            "J({}) = {} does not exceed J({}) = {}",
            w[1].nu, w[1].j, w[0].nu, w[0].j
        )));
    }
    let convexity_gaps = points
        .windows(3)
        .map(|w| {
            let t = (w[1].nu - w[0].nu) / (w[2].nu - w[0].nu);
            w[1].j - ((1.0 - t) * w[0].j + t * w[2].j)
        })
        .collect();
    let base = points[0].j;
    let d0 = 0.5 * (nus[1] - nus[0]);
    let deltas: Vec<f64> = (0..3).map(|k| d0 / 2f64.powi(k)).collect();
    let probes: Vec<f64> = deltas.iter().map(|d| nus[0] + d).collect();
    let probe_results = solve_all(u, p, dom, &probes, opts)?;
    let continuity: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&probe_results)
        .map(|(d, r)| (*d, (r.energy - base).abs()))
        .collect();
    let continuity_ok = continuity.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(JCurve {
        points,
        convexity_gaps,
        continuity,
        continuity_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub nu_threshold: f64,
    /// `ν_threshold − θ̃(u)`.
    pub excess: f64,
    /// `⨍_D G1_D`.
    pub mean_potential: f64,
    /// `sup G1_D`.
    pub max_potential: f64,
    pub reachable: bool,
    pub message: String,
}

impl ThresholdReport {
    /// `ν` beyond the threshold leaves the box constraint.
    pub fn is_large_excess(&self, nu: f64) -> bool {
        nu > self.nu_threshold
    }
}

/// The `ν` at which the affine minimizer `λκ G1_D` reaches `√u_* − √u`:
/// `ν − θ̃(u) = κ (√u_* − √u) ⨍G1_D / sup G1_D`.
pub fn threshold_scan(toy: &AffineToy, dom: &Domain) -> Result<ThresholdReport> {
    let (mean_potential, max_potential) = match dom.shape {
        Shape::Ball { radius } => (2.4 * radius * radius, 3.0 * radius * radius),
        Shape::Box { .. } => indicator_potential_stats(dom),
    };
    let room = toy.u_star.sqrt() - toy.u.sqrt();
    let excess = toy.kappa * room * mean_potential / max_potential;
    let nu_threshold = toy.theta_u + excess;
    let reachable = nu_threshold < 1.0;
    let message = if reachable {
        format!("large-excess regime for ν > {nu_threshold}")
    } else {
        "threshold unreachable below ν = 1".to_string()
    };
    Ok(ThresholdReport {
        nu_threshold,
        excess,
        mean_potential,
        max_potential,
        reachable,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::mesh::MeshSpec;
    use crate::solver::minimize::Regime;
    use crate::theta::{build_smoothed_theta, BaseProfile};

    fn toy(kappa: f64) -> AffineToy {
        AffineToy::new(0.5, 0.3, kappa, 3.0).unwrap()
    }

    #[test]
    fn affine_scaling_is_linear() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 200,
                extent: 4.0,
            },
        )
        .unwrap();
        let nus = [0.31, 0.32, 0.34, 0.38];
        for kappa in [1.0, 2.0] {
            let s =
                lambda_scaling_check(0.5, &toy(kappa), &dom, &nus, &Default::default()).unwrap();
            assert!((s.slope - 1.0).abs() < 1e-6, "{}", s.slope);
            let c = 1.0 / (2.4 * kappa * kappa);
            assert!(((s.c_lower - c) / c).abs() < 1e-3);
            assert!(s.lower_bound_ok && s.slope_ok);
        }
        assert!(
            lambda_scaling_check(0.5, &toy(1.0), &dom, &nus[..2], &Default::default()).is_err()
        );
    }

    #[test]
    fn rearrangement_of_decreasing_field_is_identity() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 100,
                extent: 2.0,
            },
        )
        .unwrap();
        let f = Field::from_fn(&dom, |r| (1.0 - r).max(0.0));
        let g = rearrange_radial(&f, &dom).unwrap();
        let err = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-2 + 1e-12, "{err}");
        assert!(distribution_mismatch(&f, &g, &dom).unwrap() <= dom.spacing());
    }

    #[test]
    fn rearrangement_is_decreasing_and_lowers_energy() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 100,
                extent: 2.0,
            },
        )
        .unwrap();
        let f = Field::from_fn(&dom, |r| {
            (-(r - 0.7).powi(2) * 50.0).exp() * (r < 1.5) as u8 as f64
        });
        let g = rearrange_radial(&f, &dom).unwrap();
        assert!(g.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(distribution_mismatch(&f, &g, &dom).unwrap() <= dom.spacing());
        let (ef, eg) = (
            dirichlet_energy(&f, &dom).unwrap(),
            dirichlet_energy(&g, &dom).unwrap(),
        );
        assert!(eg <= ef * 1.01, "{ef} {eg}");
        assert!(rearrange_radial(&f.scaled(-1.0), &dom).is_err());
    }

    #[test]
    fn dilation_halves_energy() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 400,
                extent: 10.0,
            },
        )
        .unwrap();
        let r = solve_min(0.5, 0.42, &toy(1.0), &dom, &Default::default()).unwrap();
        let d = dilation_check(&r, &dom, 0.5).unwrap();
        assert!(d.energy_ok && d.saturated, "{d:?}");
        let id = dilation_check(&r, &dom, 1.0).unwrap();
        assert!(id.relative_error < 1e-12);
    }

    #[test]
    fn affine_j_curve_matches_closed_form() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 400,
                extent: 10.0,
            },
        )
        .unwrap();
        let nus = [0.32, 0.34, 0.36, 0.38];
        let c = toy(1.0);
        let curve = j_curve(0.5, &c, &dom, &nus, &Default::default()).unwrap();
        for p in &curve.points {
            let exact =
                (p.nu - 0.3f64).powi(2) * (16.0 * std::f64::consts::PI / 5.0) / 2.4f64.powi(2);
            assert!(((p.j - exact) / exact).abs() < 1e-3, "{} {}", p.j, exact);
        }
        assert!(curve.convexity_gaps.iter().all(|&g| g < 0.0));
        assert!(curve.continuity_ok);
        assert!(j_curve(0.5, &c, &dom, &[0.34, 0.32], &Default::default()).is_err());
    }

    #[test]
    fn nonlinear_j_curve_increases() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 200,
                extent: 5.0,
            },
        )
        .unwrap();
        let st = build_smoothed_theta(BaseProfile::linear(0.5).unwrap(), 0.5, 0.9, 3.0).unwrap();
        let t = st.theta(0.2);
        let nus: Vec<f64> = (1..=4).map(|k| t + 0.005 * k as f64).collect();
        let curve = j_curve(0.2, &st, &dom, &nus, &Default::default()).unwrap();
        assert_eq!(curve.points.len(), 4);
    }

    #[test]
    fn threshold_closed_form() {
        let dom = Domain::unit_ball();
        let c = AffineToy::new(0.5, 0.3, 1.0, 1.5).unwrap();
        let t = threshold_scan(&c, &dom).unwrap();
        let exact = 0.3 + 0.8 * (1.5f64.sqrt() - 0.5f64.sqrt());
        assert!((t.nu_threshold - exact).abs() < 1e-12);
        assert!(t.reachable);
        // excess grows linearly in κ
        let t2 = threshold_scan(&AffineToy::new(0.5, 0.3, 2.0, 1.5).unwrap(), &dom).unwrap();
        assert!((t2.excess - 2.0 * t.excess).abs() < 1e-12);
        assert!(!t2.reachable);
        // just past the threshold the minimizer leaves the box
        let beyond = solve_min(0.5, t.nu_threshold + 0.01, &c, &dom, &Default::default()).unwrap();
        assert_eq!(beyond.regime, Regime::AuxiliaryOnly);
        let below = solve_min(0.5, t.nu_threshold - 0.01, &c, &dom, &Default::default()).unwrap();
        assert_eq!(below.regime, Regime::SmallExcess);
    }
}
