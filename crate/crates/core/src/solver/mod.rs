//! Constrained Dirichlet-energy minimization through the Euler–Lagrange
//! fixed point.

pub mod diagnostics;
pub mod energy;
pub mod fixed_point;
pub mod green;
pub mod mesh;
pub mod minimize;

pub use diagnostics::{
    dilate, dilation_check, distribution_mismatch, j_curve, lambda_scaling_check, rearrange_radial,
    threshold_scan, DilationReport, JCurve, JPoint, LambdaScaling, ThresholdReport,
    DILATION_TOLERANCE, SLOPE_RANGE,
};
pub use energy::{dirichlet_energy, energy_pair, relative_gap, DUAL_GAP_TOLERANCE, MESH_GAP_LIMIT};
pub use fixed_point::{density, el_fixed_point, FixedPoint, FixedPointOptions};
pub use green::{
    green_convolve, green_of_indicator, indicator_potential_stats, unit_cube_potential,
    KERNEL_CONSTANT,
};
pub use mesh::{Domain, Field, Grid, MeshSpec, Shape, DIM};
pub use minimize::{
    check_minimizer_props, solve_min, MinimizerResult, PropertyReport, Regime, SolveOptions,
    CONSTRAINT_TOLERANCE, DECAY_TOLERANCE, EXTERIOR_TOLERANCE, HARMONIC_TOLERANCE,
    OPTIMALITY_TOLERANCE,
};
