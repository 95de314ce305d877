//! Smoothed percolation profiles and the constraint functional built on them.

pub mod base;
pub mod functional;
pub mod hermite;
pub mod smoothed;

pub use base::{BaseProfile, ThetaBar, FIT_SLOPE_FLOOR, MIN_FIT_LEVELS};
pub use functional::{constraint_functional, directional_derivative, AffineToy, Profile};
pub use hermite::{isotonic, monotone_slopes, Hermite};
pub use smoothed::{
    build_smoothed_theta, InvariantReport, SmoothedTheta, CHECK_GRID, JOIN_TOLERANCE,
};
