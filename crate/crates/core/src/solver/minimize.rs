//! Multiplier search for `Ã(φ_λ) = ν` and the checks every minimizer must
//! pass.

use serde::{Deserialize, Serialize};

use super::energy::{energy_pair, relative_gap, DUAL_GAP_TOLERANCE};
use super::fixed_point::{density, el_fixed_point, FixedPoint, FixedPointOptions};
use super::green::{indicator_potential_stats, KERNEL_CONSTANT};
use super::mesh::{Domain, Field, Grid, MeshSpec, Shape};
use crate::error::{invalid, Error, Result};
use crate::theta::{constraint_functional, Profile};

/// Largest accepted `|Ã(φ) − ν|`.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-6;
/// Largest relative spread of `r φ(r)` outside a ball.
pub const EXTERIOR_TOLERANCE: f64 = 1e-3;
/// Largest relative spread of `r φ(r)` on `[2R, r_max]`.
pub const DECAY_TOLERANCE: f64 = 1e-2;
/// Largest relative spread of `φ / Gρ` where `φ > 10⁻⁸`.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-3;
/// Largest `h² |Δ_h φ| / ‖φ‖_∞` outside a box.
pub const HARMONIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub fixed_point: FixedPointOptions,
    /// Bisection target for `|Ã − ν|`.
    pub constraint_tol: f64,
    pub max_bisections: usize,
    pub max_doublings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            fixed_point: FixedPointOptions::default(),
            constraint_tol: 1e-10,
            max_bisections: 200,
            max_doublings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `0 ≤ φ ≤ √u_* − √u`: the auxiliary minimizer also solves the
    /// original problems.
    SmallExcess,
    /// The box constraint fails; only the auxiliary problem is solved.
    AuxiliaryOnly,
}

/// Itemized minimizer property checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub min_phi: f64,
    pub max_phi: f64,
    /// `√u_* − √u`.
    pub box_limit: f64,
    /// Ball: relative spread of `r φ(r)` for `r > R`. Box: largest
    /// `h² |Δ_h φ| / ‖φ‖_∞` at exterior nodes.
    pub exterior_spread: f64,
    /// Relative spread of `r φ(r)` on `[2R, r_max]` (balls only).
    pub decay_spread: f64,
    /// `sup |z| φ(z)` over the mesh.
    pub decay_sup: f64,
    /// The supremum is attained within two cells of `∂D`.
    pub decay_sup_near_boundary: bool,
    /// `λ ‖η̃′‖_∞ ‖G1_D‖_∞`.
    pub sup_bound: f64,
    /// `‖φ‖_∞ / (ν − θ̃(u))`, 0 at zero excess.
    pub excess_ratio: f64,
    pub constraint_error: f64,
    pub dual_gap: f64,
    pub residual: f64,
    pub residual_limit: f64,
    /// Relative spread of `φ / Gρ` where `φ > 10⁻⁸`.
    pub optimality_spread: f64,
}

impl PropertyReport {
    pub fn box_ok(&self) -> bool {
        self.min_phi >= -1e-12 && self.max_phi <= self.box_limit + 1e-8
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.box_ok() {
            out.push(format!(
                "phi in [{:.3e}, {:.6}] leaves [0, {:.6}]",
                self.min_phi, self.max_phi, self.box_limit
            ));
        }
        let tol = if self.decay_spread.is_nan() {
            HARMONIC_TOLERANCE
        } else {
            EXTERIOR_TOLERANCE
        };
        if self.exterior_spread > tol {
            out.push(format!(
                "exterior harmonicity defect {:.3e}",
                self.exterior_spread
            ));
        }
        if self.decay_spread > DECAY_TOLERANCE {
            out.push(format!("exterior decay spread {:.3e}", self.decay_spread));
        }
        if !self.decay_sup.is_finite() || !self.decay_sup_near_boundary {
            out.push(format!(
                "sup |z|phi = {:.6} not attained near the boundary",
                self.decay_sup
            ));
        }
        if self.max_phi > self.sup_bound * (1.0 + 1e-9) + 1e-15 {
            out.push(format!(
                "sup-norm {:.6} above lambda-bound {:.6}",
                self.max_phi, self.sup_bound
            ));
        }
        if self.constraint_error > CONSTRAINT_TOLERANCE {
            out.push(format!("constraint error {:.3e}", self.constraint_error));
        }
        if self.dual_gap > DUAL_GAP_TOLERANCE {
            out.push(format!("dual-energy gap {:.3e}", self.dual_gap));
        }
        if self.residual > self.residual_limit {
            out.push(format!("fixed-point residual {:.3e}", self.residual));
        }
        if self.optimality_spread > OPTIMALITY_TOLERANCE {
            out.push(format!(
                "optimality ratio spread {:.3e}",
                self.optimality_spread
            ));
        }
        out
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    pub u: f64,
    pub nu: f64,
    /// `θ̃(u)`.
    pub theta_u: f64,
    pub lambda: f64,
    pub energy: f64,
    pub energy_dual: f64,
    /// `Ã(φ)`.
    pub constraint: f64,
    pub iterations: usize,
    pub bisections: usize,
    pub residual: f64,
    pub options: SolveOptions,
    pub shape: Shape,
    pub mesh: MeshSpec,
    /// Fingerprint of the profile solved against.
    pub profile_hash: String,
    pub regime: Regime,
    pub properties: PropertyReport,
    /// `(λ, Ã(φ_λ))` for every multiplier tried, ascending in `λ`.
    pub lambda_trace: Vec<(f64, f64)>,
    /// `(|z|, φ(z))` per mesh node, in mesh order.
    pub profile: Vec<(f64, f64)>,
}

impl MinimizerResult {
    /// `r,phi` rows with a header.
    pub fn write_profile_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let e = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["r", "phi"]).map_err(e)?;
        for (r, v) in &self.profile {
            wr.write_record([r.to_string(), v.to_string()]).map_err(e)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn field(&self) -> Field {
        Field {
            values: self.profile.iter().map(|p| p.1).collect(),
        }
    }
}

/// Solves `min (1/2d)∫|∇φ|²` subject to `Ã(φ) = ν` through the
/// Euler–Lagrange fixed point: doubles `λ` until `Ã(φ_λ) ≥ ν`, then bisects.
pub fn solve_min(
    u: f64,
    nu: f64,
    p: &impl Profile,
    dom: &Domain,
    opts: &SolveOptions,
) -> Result<MinimizerResult> {
    if !(u > 0.0) {
        return invalid("level u must be positive");
    }
    if let Some(u0) = p.base_limit() {
        if u >= u0 {
            return invalid(format!("need u < u0 = {u0}, got {u}"));
        }
    }
    let theta_u = p.theta(u);
    if nu < theta_u {
        return invalid(format!("ν = {nu} below θ̃(u) = {theta_u}"));
    }
    if nu >= 1.0 {
        return invalid(format!("ν = {nu} must be below 1"));
    }
    let eval = |lambda: f64| -> Result<(FixedPoint, f64)> {
        let fp = el_fixed_point(lambda, u, p, dom, &opts.fixed_point)?;
        let a = constraint_functional(p, u, &fp.phi, dom)?;
        Ok((fp, a))
    };
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut bisections = 0;
    let (lambda, fp, a) = if nu == theta_u {
        let (fp, a) = eval(0.0)?;
        trace.push((0.0, a));
        (0.0, fp, a)
    } else {
        let (mean_g, _) = indicator_potential_stats(dom);
        let sup = p.eta_prime_sup();
        let mut lo = (0.0, theta_u);
        let mut hi_l = (nu - theta_u) / (sup * sup * mean_g);
        let mut best_a = theta_u;
        let mut hi = None;
        for _ in 0..=opts.max_doublings {
            match eval(hi_l) {
                Ok((fp, a)) => {
                    trace.push((hi_l, a));
                    best_a = best_a.max(a);
                    if a >= nu {
                        hi = Some((hi_l, fp, a));
                        break;
                    }
                    lo = (hi_l, a);
                    hi_l *= 2.0;
                }
                Err(Error::NoConvergence { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        let Some(mut best) = hi else {
            return Err(Error::OutsideSmallExcess {
                target: nu,
                achieved: best_a,
            });
        };
        let mut upper = best.0;
        let mut lower = lo.0;
        while (best.2 - nu).abs() > opts.constraint_tol && bisections < opts.max_bisections {
            let mid = 0.5 * (lower + upper);
            if mid <= lower || mid >= upper {
                break;
            }
            bisections += 1;
            let (fp, a) = eval(mid)?;
            trace.push((mid, a));
            if a < nu {
                lower = mid;
            } else {
                upper = mid;
            }
            if (a - nu).abs() < (best.2 - nu).abs() {
                best = (mid, fp, a);
            }
        }
        best
    };
    trace.sort_by(|x, y| x.0.total_cmp(&y.0));
    if let Some(w) = trace.windows(2).find(|w| w[1].1 < w[0].1 - 1e-12) {
        return Err(Error::NonMonotone(format!(
            "Ã(φ_λ) decreases from {} at λ = {} to {} at λ = {}",
            w[0].1, w[0].0, w[1].1, w[1].0
        )));
    }
    let (energy, energy_dual) = energy_pair(&fp.phi, lambda, &fp.rho, dom)?;
    let mut result = MinimizerResult {
        u,
        nu,
        theta_u,
        lambda,
        energy,
        energy_dual,
        constraint: a,
        iterations: fp.iterations,
        bisections,
        residual: fp.residual,
        options: *opts,
        shape: dom.shape,
        mesh: dom.spec,
        profile_hash: p.fingerprint(),
        regime: Regime::SmallExcess,
        properties: empty_report(),
        lambda_trace: trace,
        profile: (0..dom.len())
            .map(|i| (dom.radius_of(i), fp.phi.values[i]))
            .collect(),
    };
    result.properties = check_minimizer_props(&result, p, dom)?;
    if !result.properties.box_ok() {
        result.regime = Regime::AuxiliaryOnly;
    }
    Ok(result)
}

fn empty_report() -> PropertyReport {
    PropertyReport {
        min_phi: 0.0,
        max_phi: 0.0,
        box_limit: 0.0,
        exterior_spread: 0.0,
        decay_spread: 0.0,
        decay_sup: 0.0,
        decay_sup_near_boundary: true,
        sup_bound: 0.0,
        excess_ratio: 0.0,
        constraint_error: 0.0,
        dual_gap: 0.0,
        residual: 0.0,
        residual_limit: 0.0,
        optimality_spread: 0.0,
    }
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || hi == 0.0 {
        return 0.0;
    }
    (hi - lo) / hi.abs()
}

/// Largest `h² |Δφ| / ‖φ‖_∞` over mesh nodes at least one cell outside the
/// box, with `φ = λ G ρ` evaluated off the grid by direct kernel sums and a
/// fourth-order stencil of width `h/100`.
fn box_harmonic_defect(rho: &Field, lambda: f64, dom: &Domain, sup: f64) -> f64 {
    let Grid::Cartesian { h, centers, .. } = &dom.grid else {
        return 0.0;
    };
    if sup == 0.0 {
        return 0.0;
    }
    let w = dom.scale();
    let sources: Vec<([f64; 3], f64)> = (0..dom.len())
        .filter(|&j| rho.values[j] != 0.0)
        .map(|j| (centers[j], rho.values[j] * h.powi(3)))
        .collect();
    let at = |x: [f64; 3]| {
        lambda
            * KERNEL_CONSTANT
            * sources
                .iter()
                .map(|(c, q)| {
                    let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2))
                        .sqrt();
                    q / d
                })
                .sum::<f64>()
    };
    let delta = h / 100.0;
    let mut worst = 0.0f64;
    for x in centers {
        if x.iter().map(|c| c.abs()).fold(0.0, f64::max) < w + h {
            continue;
        }
        let f0 = at(*x);
        let mut lap = 0.0;
        for a in 0..3 {
            let shifted = |t: f64| {
                let mut y = *x;
                y[a] += t;
                at(y)
            };
            lap += (-shifted(2.0 * delta) + 16.0 * shifted(delta) - 30.0 * f0
                + 16.0 * shifted(-delta)
                - shifted(-2.0 * delta))
                / (12.0 * delta * delta);
        }
        worst = worst.max(h * h * lap.abs() / sup);
    }
    worst
}

/// Box constraint, exterior harmonicity and decay, the sup-norm bound,
/// constraint saturation, dual gap, fixed-point residual and the
/// first-order optimality ratio.
pub fn check_minimizer_props(
    r: &MinimizerResult,
    p: &impl Profile,
    dom: &Domain,
) -> Result<PropertyReport> {
    let phi = r.field();
    dom.check(&phi)?;
    let rho = density(p, r.u, &phi, dom);
    let g = super::green::green_convolve(&rho, dom)?;
    let (_, max_g) = indicator_potential_stats(dom);
    let max_phi = phi.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_phi = phi.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup = phi.sup_norm();
    let rad = |i: usize| dom.radius_of(i);
    let scale = dom.scale();
    let h = dom.spacing();
    let (exterior_spread, decay_spread) = match dom.shape {
        Shape::Ball { radius } => {
            let r_max = rad(dom.len() - 1);
            let ext = spread(
                (0..dom.len())
                    .filter(|&i| rad(i) > radius)
                    .map(|i| rad(i) * phi.values[i]),
            );
            let decay = spread(
                (0..dom.len())
                    .filter(|&i| rad(i) >= 2.0 * radius && rad(i) <= r_max)
                    .map(|i| rad(i) * phi.values[i]),
            );
            (ext, decay)
        }
        Shape::Box { .. } => (box_harmonic_defect(&rho, r.lambda, dom, sup), f64::NAN),
    };
    let weighted: Vec<f64> = (0..dom.len()).map(|i| rad(i) * phi.values[i]).collect();
    let decay_sup = weighted.iter().cloned().fold(0.0, f64::max);
    let near = (0..dom.len())
        .filter(|&i| match dom.shape {
            Shape::Ball { radius } => (rad(i) - radius).abs() <= 2.0 * h,
            Shape::Box { .. } => {
                let x = match &dom.grid {
                    Grid::Cartesian { centers, .. } => centers[i],
                    Grid::Radial { .. } => unreachable!(),
                };
                let s = x.iter().map(|c| c.abs()).fold(0.0, f64::max);
                (s - scale).abs() <= 2.0 * h
            }
        })
        .map(|i| weighted[i])
        .fold(0.0, f64::max);
    let tolerance = match dom.shape {
        Shape::Ball { .. } => 1e-3,
        Shape::Box { .. } => 5e-2,
    };
    let optimality_spread = spread(
        (0..dom.len())
            .filter(|&i| phi.values[i] > 1e-8)
            .map(|i| phi.values[i] / g.values[i]),
    );
    let excess = r.nu - r.theta_u;
    Ok(PropertyReport {
        min_phi,
        max_phi,
        box_limit: p.u_star().sqrt() - r.u.sqrt(),
        exterior_spread,
        decay_spread,
        decay_sup,
        decay_sup_near_boundary: near >= decay_sup * (1.0 - tolerance),
        sup_bound: r.lambda * p.eta_prime_sup() * max_g,
        excess_ratio: if excess > 0.0 { sup / excess } else { 0.0 },
        constraint_error: (r.constraint - r.nu).abs(),
        dual_gap: relative_gap(r.energy, r.energy_dual),
        residual: r.residual,
        residual_limit: 10.0 * r.options.fixed_point.tol,
        optimality_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::{build_smoothed_theta, AffineToy, BaseProfile};

    #[test]
    fn affine_toy_closed_form() {
        let dom = Domain::unit_ball();
        let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0).unwrap();
        let r = solve_min(0.5, 0.42, &toy, &dom, &Default::default()).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(r.lambda, 0.05) < 1e-4, "{}", r.lambda);
        assert!(rel(r.properties.max_phi, 0.15) < 1e-4);
        assert!(rel(r.energy, 0.0025 * 16.0 * std::f64::consts::PI / 5.0) < 1e-4);
        assert!(r.properties.all_pass(), "{:?}", r.properties.failures());
        assert_eq!(r.regime, Regime::SmallExcess);
    }

    #[test]
    fn zero_excess_gives_zero_minimizer() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 100,
                extent: 4.0,
            },
        )
        .unwrap();
        let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0).unwrap();
        let r = solve_min(0.5, 0.3, &toy, &dom, &Default::default()).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert_eq!(r.energy, 0.0);
        assert!(r.profile.iter().all(|&(_, v)| v == 0.0));
        assert!(r.properties.all_pass());
    }

    #[test]
    fn rejects_targets_below_theta() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 50,
                extent: 2.0,
            },
        )
        .unwrap();
        let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0).unwrap();
        assert!(solve_min(0.5, 0.2, &toy, &dom, &Default::default()).is_err());
        assert!(solve_min(0.5, 1.0, &toy, &dom, &Default::default()).is_err());
    }

    #[test]
    fn nonlinear_profile_passes_checks() {
        let dom = Domain::ball(
            1.0,
            MeshSpec {
                cells: 400,
                extent: 10.0,
            },
        )
        .unwrap();
        let st = build_smoothed_theta(BaseProfile::linear(0.5).unwrap(), 0.5, 0.9, 3.0).unwrap();
        let u = 0.2;
        let r = solve_min(u, st.theta(u) + 0.02, &st, &dom, &Default::default()).unwrap();
        assert!(r.properties.all_pass(), "{:?}", r.properties.failures());
        assert!(r.lambda > 0.0);
        assert!(solve_min(0.6, 0.5, &st, &dom, &Default::default()).is_err());
    }

    #[test]
    fn box_domain_solves() {
        let dom = Domain::cube(
            0.5,
            MeshSpec {
                cells: 3,
                extent: 2.0,
            },
        )
        .unwrap();
        let toy = AffineToy::new(0.5, 0.3, 1.0, 3.0).unwrap();
        let r = solve_min(0.5, 0.32, &toy, &dom, &Default::default()).unwrap();
        assert!(r.properties.constraint_error < CONSTRAINT_TOLERANCE);
        assert!(
            r.properties.exterior_spread < HARMONIC_TOLERANCE,
            "{}",
            r.properties.exterior_spread
        );
        assert!(r.properties.box_ok());
    }
}
