//! Central numerical tolerances.
//!
//! Algebraic identities on Lorentz matrices hold to near machine precision;
//! grid-based quantities inherit the discretization error of the stencils
//! that produced them. Tolerances are grouped accordingly.

/// Pointwise algebraic identities (cocycle, fixed points, cross-checks).
pub const ALGEBRAIC_TOL: f64 = 1e-10;

/// Lorentz-form defect allowed after long composition chains.
pub const CHAIN_TOL: f64 = 1e-9;

/// Reflection involution defect.
pub const INVOLUTION_TOL: f64 = 1e-12;

/// Unit-norm / in-ball validation of points.
pub const POINT_TOL: f64 = 1e-9;

/// Composition triggers Minkowski re-orthogonalization above this defect.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Polar grids stay this far away from the antipodal pole.
pub const POLE_GUARD: f64 = 1e-3;

/// Glue interface must carry the constant value 1 within this tolerance.
pub const INTERFACE_TOL: f64 = 1e-6;

/// Weak-inequality residuals are accepted above this floor.
pub const RESIDUAL_FLOOR: f64 = -1e-8;

/// Relative tolerance on the scalar-curvature lower bound.
pub const SCAL_REL_TOL: f64 = 1e-6;

/// Relative tolerance on the induced boundary factor (roundness gate).
pub const BOUNDARY_REL_TOL: f64 = 1e-6;

/// Absolute tolerance on the boundary mean-curvature gate.
pub const MEAN_CURV_TOL: f64 = 1e-6;

/// Rigidity gap sup|v - w| below which a run is declared rigid.
pub const GAP_TOL: f64 = 1e-5;

/// Boundary derivative gap tolerance for the Hopf comparison.
pub const HOPF_TOL: f64 = 1e-5;

/// Default successive-change stopping threshold of the monotone solver.
pub const SOLVER_TOL_CHANGE: f64 = 1e-10;

/// Default discrete-residual stopping threshold of the monotone solver.
pub const SOLVER_TOL_RESIDUAL: f64 = 1e-9;

/// Slack allowed when verifying discrete sub/supersolutions. Exact continuum
/// barriers carry O(h^2) discrete defects, so this cannot be machine-small.
pub const BARRIER_SLACK: f64 = 1e-5;
