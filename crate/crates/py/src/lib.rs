//! Python bindings: smoothed profiles, the affine toy, θ-curve estimation and
//! the constrained energy solver.

use interlace::solver::{self, Domain, MeshSpec, SolveOptions};
use interlace::stats::estimate_theta_curve;
use interlace::theta::{self, BaseProfile, Profile};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: interlace::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// C¹ smoothed percolation profile.
#[pyclass(name = "SmoothedTheta", frozen, from_py_object, module = "pyinterlace")]
#[derive(Clone)]
struct SmoothedTheta(theta::SmoothedTheta);

#[pymethods]
impl SmoothedTheta {
    /// Profile over the toy base `θ₀(v) = slope · v`.
    #[staticmethod]
    fn linear(slope: f64, u0: f64, u1: f64, u_star: f64) -> PyResult<Self> {
        let base = BaseProfile::linear(slope).map_err(err)?;
        theta::SmoothedTheta::build(base, u0, u1, u_star)
            .map(SmoothedTheta)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        theta::SmoothedTheta::from_json(s)
            .map(SmoothedTheta)
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    fn theta(&self, v: f64) -> f64 {
        self.0.theta(v)
    }

    fn theta_prime(&self, v: f64) -> f64 {
        self.0.theta_prime(v)
    }

    fn eta(&self, b: f64) -> f64 {
        self.0.eta(b)
    }

    fn eta_prime(&self, b: f64) -> f64 {
        self.0.eta_prime(b)
    }

    #[getter]
    fn u_star(&self) -> f64 {
        self.0.u_star
    }

    #[getter]
    fn hash(&self) -> String {
        self.0.fingerprint()
    }

    /// True when every construction invariant holds.
    fn checks_pass(&self) -> bool {
        self.0.checks.all_pass()
    }
}

/// Profile with constant `η̃′ = κ`, solvable in closed form.
#[pyclass(name = "AffineToy", frozen, from_py_object, module = "pyinterlace")]
#[derive(Clone)]
struct AffineToy(theta::AffineToy);

#[pymethods]
impl AffineToy {
    #[new]
    fn new(u: f64, theta_u: f64, kappa: f64, u_star: f64) -> PyResult<Self> {
        theta::AffineToy::new(u, theta_u, kappa, u_star)
            .map(AffineToy)
            .map_err(err)
    }

    fn theta(&self, v: f64) -> f64 {
        self.0.theta(v)
    }

    /// Closed-form large-excess threshold on the unit ball.
    fn threshold(&self) -> PyResult<f64> {
        solver::threshold_scan(&self.0, &Domain::unit_ball())
            .map(|r| r.nu_threshold)
            .map_err(err)
    }
}

#[derive(FromPyObject)]
enum AnyProfile {
    Smoothed(SmoothedTheta),
    Affine(AffineToy),
}

/// Outcome of one constrained solve.
#[pyclass(name = "MinimizerResult", frozen, module = "pyinterlace")]
struct MinimizerResult(solver::MinimizerResult);

#[pymethods]
impl MinimizerResult {
    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy
    }

    #[getter]
    fn energy_dual(&self) -> f64 {
        self.0.energy_dual
    }

    #[getter]
    fn constraint(&self) -> f64 {
        self.0.constraint
    }

    #[getter]
    fn sup_norm(&self) -> f64 {
        self.0.properties.max_phi
    }

    #[getter]
    fn regime(&self) -> String {
        serde_json::to_value(self.0.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }

    /// `(r, φ(r))` pairs, or `(|x|, φ(x))` on box meshes.
    #[getter]
    fn profile(&self) -> Vec<(f64, f64)> {
        self.0.profile.clone()
    }

    /// Names of the failed property checks.
    fn failures(&self) -> Vec<String> {
        self.0.properties.failures()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }
}

/// Expected visits to the origin of the simple random walk on ℤ^d.
#[pyfunction]
fn green_origin(d: usize) -> PyResult<f64> {
    interlace::lattice::green_origin(d).map_err(err)
}

/// Coupled θ-curve estimate on `B_n` at probe radius `l`.
#[pyfunction]
#[pyo3(signature = (levels, l, n, soups, seed, dim = 3))]
fn theta_curve<'py>(
    py: Python<'py>,
    levels: Vec<f64>,
    l: u32,
    n: u32,
    soups: u64,
    seed: u64,
    dim: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let curve = py
        .detach(|| estimate_theta_curve(dim, &levels, l, n, soups, seed))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("levels", curve.levels)?;
    out.set_item("estimates", curve.estimates)?;
    out.set_item("stderrs", curve.stderrs)?;
    out.set_item("probe_radius", curve.probe_radius)?;
    out.set_item("window_radius", curve.window_radius)?;
    Ok(out)
}

/// Minimizes the Dirichlet energy at level `u` subject to the constraint
/// value `nu` on a ball of the given radius.
#[pyfunction]
#[pyo3(signature = (profile, u, nu, radius = 1.0, cells = 1000))]
fn solve(
    py: Python<'_>,
    profile: AnyProfile,
    u: f64,
    nu: f64,
    radius: f64,
    cells: usize,
) -> PyResult<MinimizerResult> {
    let dom = Domain::ball(
        radius,
        MeshSpec {
            cells,
            ..MeshSpec::radial_default()
        },
    )
    .map_err(err)?;
    let opts = SolveOptions::default();
    py.detach(|| match &profile {
        AnyProfile::Smoothed(p) => solver::solve_min(u, nu, &p.0, &dom, &opts),
        AnyProfile::Affine(p) => solver::solve_min(u, nu, &p.0, &dom, &opts),
    })
    .map(MinimizerResult)
    .map_err(err)
}

#[pymodule]
fn pyinterlace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SmoothedTheta>()?;
    m.add_class::<AffineToy>()?;
    m.add_class::<MinimizerResult>()?;
    m.add_function(wrap_pyfunction!(green_origin, m)?)?;
    m.add_function(wrap_pyfunction!(theta_curve, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
