//! Numerical conformal geometry for spherical-cap rigidity verification.
//!
//! The crate provides, bottom up:
//!
//! - [`minkowski`] and [`moebius`]: the Lorentz model of the conformal group
//!   of S^n, with reflections, rotations, boosts, cap normalization,
//!   stereographic projection and the ball extension of boundary maps;
//! - [`grid`] and [`curvature`]: radial factor fields and the conformal
//!   scalar/mean-curvature operators;
//! - [`gluing`]: normalization of a hole to the standard position, the
//!   round-cap glue, interface jumps and the distributional curvature
//!   inequality;
//! - [`solver`]: the monotone sub/supersolution scheme for the critical
//!   semilinear boundary-value problem, with maximum-principle, Hopf and
//!   boundary-flux comparisons;
//! - [`scenario`] and [`pipeline`]: input configuration, hypothesis gates,
//!   end-to-end verification runs and report emission.

pub mod curvature;
pub mod error;
pub mod gluing;
pub mod grid;
pub mod minkowski;
pub mod moebius;
pub mod pipeline;
pub mod scenario;
pub mod solver;
pub mod sphere;
pub mod tol;

pub use error::{Error, Result};
pub use grid::{Background, RadialField, RadialGrid, Regularity};
pub use minkowski::MinkowskiForm;
pub use moebius::MoebiusMap;
pub use pipeline::{HypothesisReport, RigidityReport, RunArtifacts, Verdict};
pub use scenario::{OutputFormat, Scenario};
pub use sphere::{BallPoint, HyperSphere, SpherePoint};
