//! Monotone sub/supersolution iteration for the critical semilinear
//! boundary-value problem
//!
//!   -lap f = n(n-2)/4 f^{(n+2)/(n-2)}   on the ball B_r,
//!        f = boundary_value             on the boundary,
//!
//! together with the maximum-principle floor, the Hopf boundary comparison
//! and the boundary-flux comparison that pin rigidity.
//!
//! The discrete operator is the conservative flux form, whose shifted
//! matrix -lap + K is a tridiagonal M-matrix for every K >= 0. That makes
//! the discrete comparison principle exact, which is what the monotonicity
//! of the iteration rests on.

use std::sync::Arc;

use serde::Serialize;

use crate::curvature::{
    bubble_nonlinearity, bubble_nonlinearity_prime, round_bubble, round_bubble_deriv,
};
use crate::error::{Error, Result};
use crate::grid::{
    flux_coefficients, flux_laplacian, one_sided_derivative, RadialField, RadialGrid, Regularity,
};
use crate::tol;

/// The boundary-value problem on B_r; r = tan(rho/2) links the ball back
/// to the cap of geodesic radius rho.
#[derive(Debug, Clone)]
pub struct BvpSpec {
    pub n: usize,
    pub radius: f64,
    pub boundary_value: f64,
    pub grid: Arc<RadialGrid>,
}

impl BvpSpec {
    /// Standard problem for the cap parameter rho: ball radius tan(rho/2),
    /// boundary data scale * w(r).
    pub fn for_cap(n: usize, rho: f64, boundary_scale: f64, cells: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::SolverFailure(format!("need n >= 3, got {n}")));
        }
        if !(rho > 0.0 && rho < std::f64::consts::PI) {
            return Err(Error::SolverFailure(format!("cap parameter {rho} out of range")));
        }
        let radius = (rho / 2.0).tan();
        let boundary_value = boundary_scale * round_bubble(n, radius);
        if boundary_value <= 0.0 {
            return Err(Error::SolverFailure("boundary value must be positive".into()));
        }
        let grid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, radius, cells)?);
        Ok(BvpSpec { n, radius, boundary_value, grid })
    }

    pub fn from_grid(n: usize, grid: Arc<RadialGrid>, boundary_value: f64) -> Result<Self> {
        if grid.is_sphere() {
            return Err(Error::SolverFailure("solver runs on flat radial grids".into()));
        }
        Ok(BvpSpec { n, radius: grid.end(), boundary_value, grid })
    }

    /// The constant subsolution carrying the boundary data.
    pub fn constant_subsolution(&self) -> RadialField {
        RadialField::constant(self.grid.clone(), self.boundary_value).expect("positive constant")
    }

    /// The exact bubble sampled on the grid.
    pub fn bubble_field(&self) -> RadialField {
        let n = self.n;
        RadialField::sample(self.grid.clone(), |r| round_bubble(n, r)).expect("bubble positive")
    }
}

/// Solve -lap f + K f = rhs with Dirichlet data at the last node, by the
/// Thomas algorithm on the flux-form tridiagonal rows. Second order; the
/// matrix is an M-matrix for K >= 0, so positive data produce positive
/// solutions.
pub fn solve_linear_shifted(
    grid: &Arc<RadialGrid>,
    shift: f64,
    rhs: &[f64],
    boundary_value: f64,
) -> Result<RadialField> {
    if shift < 0.0 {
        return Err(Error::SolverFailure(format!("shift K = {shift} must be >= 0")));
    }
    let len = grid.len();
    if rhs.len() != len {
        return Err(Error::Grid(format!("rhs length {} vs grid {len}", rhs.len())));
    }
    let (sub, diag, sup) = flux_coefficients(grid);

    // unknowns 0..len-1, last node pinned to the boundary value
    let m = len - 1;
    let mut lower = vec![0.0; m];
    let mut main = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        lower[i] = -sub[i];
        main[i] = -diag[i] + shift;
        upper[i] = -sup[i];
        d[i] = rhs[i];
    }
    // fold the Dirichlet node into the last equation
    d[m - 1] -= upper[m - 1] * boundary_value;
    upper[m - 1] = 0.0;

    // Thomas sweep
    for i in 1..m {
        let piv = main[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::SolverFailure("singular tridiagonal system".into()));
        }
        let w = lower[i] / piv;
        main[i] -= w * upper[i - 1];
        d[i] -= w * d[i - 1];
    }
    let mut f = vec![0.0; len];
    f[m] = boundary_value;
    let piv = main[m - 1];
    if piv.abs() < 1e-300 {
        return Err(Error::SolverFailure("singular tridiagonal system".into()));
    }
    f[m - 1] = d[m - 1] / piv;
    for i in (0..m - 1).rev() {
        f[i] = (d[i] - upper[i] * f[i + 1]) / main[i];
    }

    RadialField::new(grid.clone(), f, Regularity::Smooth)
}

/// Max-norm of the discrete equation residual -lap f - F(f) over the
/// non-Dirichlet nodes.
pub fn discrete_residual(spec: &BvpSpec, f: &RadialField) -> f64 {
    let lap = flux_laplacian(&spec.grid, f.values());
    let mut worst = 0.0_f64;
    for i in 0..f.len() - 1 {
        let r = -lap[i] - bubble_nonlinearity(spec.n, f.values()[i]);
        worst = worst.max(r.abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BarrierKind {
    Subsolution,
    Supersolution,
}

/// Check a discrete barrier with slack: a subsolution needs
/// -lap f <= F(f) + slack at every non-Dirichlet node and boundary value
/// <= data + slack; a supersolution the reverse. Returns the worst signed
/// violation (positive means violated by that much).
pub fn verify_barrier(spec: &BvpSpec, f: &RadialField, kind: BarrierKind) -> f64 {
    let lap = flux_laplacian(&spec.grid, f.values());
    let sign = match kind {
        BarrierKind::Subsolution => 1.0,
        BarrierKind::Supersolution => -1.0,
    };
    let mut worst = f64::NEG_INFINITY;
    for i in 0..f.len() - 1 {
        let defect = -lap[i] - bubble_nonlinearity(spec.n, f.values()[i]);
        worst = worst.max(sign * defect);
    }
    worst = worst.max(sign * (f.boundary_value() - spec.boundary_value));
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IterationDirection {
    /// Start at the supersolution; the sequence decreases.
    FromSupersolution,
    /// Start at the subsolution; the sequence increases.
    FromSubsolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// Successive change and discrete residual both under tolerance.
    Tolerance,
    /// Change plateaued at the discretization floor with contraction rate
    /// approaching one: the iterate is as converged as the grid allows.
    /// This happens at the hemispherical threshold rho = pi/2, where the
    /// linearization at the bubble is marginally degenerate.
    Stagnation,
    /// The barriers already coincide; the squeezed solution is returned.
    BarriersCoincide,
}

#[derive(Debug, Clone)]
pub struct MonotoneOptions {
    pub direction: IterationDirection,
    pub tol_change: f64,
    pub tol_residual: f64,
    pub max_iterations: usize,
    pub shift_safety: f64,
    pub barrier_slack: f64,
    pub check_barriers: bool,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions {
            direction: IterationDirection::FromSupersolution,
            tol_change: tol::SOLVER_TOL_CHANGE,
            tol_residual: tol::SOLVER_TOL_RESIDUAL,
            max_iterations: 200,
            shift_safety: 1.5,
            barrier_slack: tol::BARRIER_SLACK,
            check_barriers: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub direction: IterationDirection,
    pub iterations: usize,
    pub final_change: f64,
    pub final_residual: f64,
    pub shift: f64,
    pub shift_doublings: usize,
    pub stopped_on: StopReason,
}

/// Barrier-verification slack on a given spec: the base slack plus the
/// O(h^2) truncation scale of exact continuum barriers.
pub fn effective_barrier_slack(spec: &BvpSpec, fmax: f64, base: f64) -> f64 {
    let nodes = spec.grid.nodes();
    let h_max = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
    base + 20.0 * h_max * h_max * (1.0 + bubble_nonlinearity(spec.n, fmax))
}

/// Monotone iteration f_{k+1} = (-lap + K)^{-1}(F(f_k) + K f_k) between an
/// ordered barrier pair. Starting from the supersolution the sequence
/// decreases to the maximal solution below it; from the subsolution it
/// increases. K is chosen above max F' on the barrier range; a detected
/// monotonicity violation doubles K and restarts, a few times, before
/// giving up.
pub fn monotone_iterate(
    spec: &BvpSpec,
    sub: &RadialField,
    sup: &RadialField,
    opts: &MonotoneOptions,
) -> Result<(RadialField, SolverDiagnostics)> {
    if sub.grid() != sup.grid() {
        return Err(Error::SolverFailure("barriers live on different grids".into()));
    }
    // Exact continuum barriers carry an O(h^2) discrete defect; widen the
    // slack by the truncation scale of this grid.
    let slack = effective_barrier_slack(spec, sup.max_value(), opts.barrier_slack);
    for (a, b) in sub.values().iter().zip(sup.values()) {
        if a > &(b + slack) {
            return Err(Error::SolverFailure(format!(
                "barriers are not ordered: sub {a} > sup {b}"
            )));
        }
    }
    if opts.check_barriers {
        let v = verify_barrier(spec, sub, BarrierKind::Subsolution);
        if v > slack {
            return Err(Error::SolverFailure(format!(
                "subsolution check failed by {v:.3e}"
            )));
        }
        let v = verify_barrier(spec, sup, BarrierKind::Supersolution);
        if v > slack {
            return Err(Error::SolverFailure(format!(
                "supersolution check failed by {v:.3e}"
            )));
        }
    }

    let start = match opts.direction {
        IterationDirection::FromSupersolution => sup,
        IterationDirection::FromSubsolution => sub,
    };

    // squeezed barriers pin the solution
    if sub.sup_distance(sup) <= 10.0 * opts.tol_change {
        let residual = discrete_residual(spec, start);
        return Ok((
            start.clone(),
            SolverDiagnostics {
                direction: opts.direction,
                iterations: 1,
                final_change: 0.0,
                final_residual: residual,
                shift: 0.0,
                shift_doublings: 0,
                stopped_on: StopReason::BarriersCoincide,
            },
        ));
    }

    let fmax = sup.max_value();
    let base_shift = opts.shift_safety * bubble_nonlinearity_prime(spec.n, fmax);
    let mono_tol = slack.max(10.0 * opts.tol_change);
    let mut shift = base_shift;
    let mut doublings = 0usize;

    // the residual of the solved system cannot drop below the rounding
    // floor of the 1/h^2-scaled operator
    let (csub, cdiag, csup) = flux_coefficients(&spec.grid);
    let op_norm = (0..spec.grid.len())
        .map(|i| csub[i].abs() + cdiag[i].abs() + csup[i].abs())
        .fold(0.0_f64, f64::max);
    let residual_floor = 64.0 * f64::EPSILON * op_norm * fmax;
    let tol_residual = opts.tol_residual.max(residual_floor);

    // change plateau of a marginally degenerate mode scales with the
    // discretization error of the barrier
    let h_max = spec
        .grid
        .nodes()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let stagnation_floor = h_max * h_max * (1.0 + fmax);

    'restart: loop {
        let mut f = start.clone();
        let mut prev_change = f64::INFINITY;
        let mut slow_steps = 0usize;
        for iteration in 1..=opts.max_iterations {
            let rhs: Vec<f64> = f
                .values()
                .iter()
                .map(|&fi| bubble_nonlinearity(spec.n, fi) + shift * fi)
                .collect();
            let next = solve_linear_shifted(&spec.grid, shift, &rhs, spec.boundary_value)?;

            let mut change = 0.0_f64;
            let mut worst_monotone = f64::NEG_INFINITY;
            let mut worst_containment = f64::NEG_INFINITY;
            for i in 0..f.len() {
                let delta = next.values()[i] - f.values()[i];
                change = change.max(delta.abs());
                let drift = match opts.direction {
                    IterationDirection::FromSupersolution => delta,
                    IterationDirection::FromSubsolution => -delta,
                };
                worst_monotone = worst_monotone.max(drift);
                worst_containment = worst_containment
                    .max(sub.values()[i] - next.values()[i])
                    .max(next.values()[i] - sup.values()[i]);
            }
            if worst_monotone > mono_tol || worst_containment > 10.0 * slack {
                if doublings >= 6 {
                    return Err(Error::SolverFailure(format!(
                        "monotonicity violated by {worst_monotone:.3e} with shift {shift:.3e} \
                         after {doublings} doublings"
                    )));
                }
                shift *= 2.0;
                doublings += 1;
                continue 'restart;
            }

            let residual = discrete_residual(spec, &next);
            f = next;

            if change < opts.tol_change && residual < tol_residual {
                return Ok((
                    f,
                    SolverDiagnostics {
                        direction: opts.direction,
                        iterations: iteration,
                        final_change: change,
                        final_residual: residual,
                        shift,
                        shift_doublings: doublings,
                        stopped_on: StopReason::Tolerance,
                    },
                ));
            }

            // plateau at the discretization floor: the change is tiny but
            // contracting slower and slower (marginal mode)
            if change < stagnation_floor && change > 0.999 * prev_change {
                slow_steps += 1;
                if slow_steps >= 5 {
                    return Ok((
                        f,
                        SolverDiagnostics {
                            direction: opts.direction,
                            iterations: iteration,
                            final_change: change,
                            final_residual: residual,
                            shift,
                            shift_doublings: doublings,
                            stopped_on: StopReason::Stagnation,
                        },
                    ));
                }
            } else {
                slow_steps = 0;
            }
            prev_change = change;
        }
        return Err(Error::SolverFailure(format!(
            "no convergence in {} iterations (last change {prev_change:.3e})",
            opts.max_iterations
        )));
    }
}

/// Maximum-principle floor: a discretely superharmonic field attains its
/// minimum at the boundary, so min over nodes >= boundary value - tol.
#[derive(Debug, Clone, Serialize)]
pub struct FloorCheck {
    pub superharmonic: bool,
    pub min_value: f64,
    pub boundary_value: f64,
    pub passed: bool,
}

pub fn superharmonic_floor_check(v: &RadialField) -> FloorCheck {
    let lap = flux_laplacian(v.grid(), v.values());
    let scale = v.max_value().max(1.0);
    let superharmonic = lap[..v.len() - 1].iter().all(|&l| -l >= -1e-7 * scale);
    let min_value = v.min_value();
    let boundary_value = v.boundary_value();
    FloorCheck {
        superharmonic,
        min_value,
        boundary_value,
        passed: superharmonic && min_value >= boundary_value - 1e-9 * scale,
    }
}

/// Outward boundary derivative of (v - w) by a 3-point one-sided stencil.
/// Preconditions: v >= w up to slack and matching boundary values.
pub fn hopf_boundary_compare(v: &RadialField, w: &RadialField, pre_slack: f64) -> Result<f64> {
    if v.grid() != w.grid() {
        return Err(Error::SolverFailure("hopf comparison needs a common grid".into()));
    }
    let mut worst = 0.0_f64;
    for (a, b) in v.values().iter().zip(w.values()) {
        worst = worst.max(b - a);
    }
    if worst > pre_slack {
        return Err(Error::SolverFailure(format!(
            "hopf precondition v >= w violated by {worst:.3e}"
        )));
    }
    if (v.boundary_value() - w.boundary_value()).abs() > pre_slack {
        return Err(Error::SolverFailure(
            "hopf precondition v = w on the boundary violated".into(),
        ));
    }
    let diff: Vec<f64> = v
        .values()
        .iter()
        .zip(w.values())
        .map(|(a, b)| a - b)
        .collect();
    Ok(one_sided_derivative(v.grid().nodes(), &diff, true, 3))
}

/// Boundary-flux comparison at the ball boundary. The conformal
/// mean-curvature identity expresses the outward flux of v through the
/// boundary mean curvature H_g; H_g >= cot(rho) forces the flux to
/// dominate the bubble flux, and together with the Hopf comparison this
/// pins the fluxes equal in the rigid case.
#[derive(Debug, Clone, Serialize)]
pub struct FluxComparison {
    /// d v / d eta measured by the one-sided stencil.
    pub measured: f64,
    /// (n-2)/2 (H_g v^{n/(n-2)} - v / r): the identity value of the flux.
    pub bound_from_mean_curvature: f64,
    /// d w / d eta, the exact bubble flux.
    pub reference_flux: f64,
    /// bound - reference = (n-2)/2 (H_g - cot rho) w^{n/(n-2)} when the
    /// boundary data are the bubble's.
    pub strict_slack: f64,
    /// measured >= reference - tol.
    pub satisfied: bool,
    /// |measured - reference| <= tol: equality, the rigidity signature.
    pub equality: bool,
    /// strict slack beyond tolerance: the inequality over-determines the
    /// problem and forces v = w.
    pub over_determined: bool,
}

pub fn boundary_flux_compare(
    v: &RadialField,
    h_g: f64,
    rho: f64,
    tolerance: f64,
) -> Result<FluxComparison> {
    let grid = v.grid();
    if grid.is_sphere() {
        return Err(Error::SolverFailure("flux comparison runs on the ball grid".into()));
    }
    let n = grid.n();
    let r = grid.end();
    let vb = v.boundary_value();
    // four points: the 1e-8 equality resolution outruns the second-order
    // stencil on the grids in use
    let measured = one_sided_derivative(grid.nodes(), v.values(), true, 4);
    let half = (n as f64 - 2.0) / 2.0;
    let bound = half * (h_g * vb.powf(n as f64 / (n as f64 - 2.0)) - vb / r);
    let reference = round_bubble_deriv(n, r);
    let strict_slack = bound - reference;
    let expected_w_boundary = (vb - round_bubble(n, r)).abs() <= 1e-6 * vb;
    let _ = rho;
    Ok(FluxComparison {
        measured,
        bound_from_mean_curvature: bound,
        reference_flux: reference,
        strict_slack,
        satisfied: measured >= reference - tolerance,
        equality: expected_w_boundary && (measured - reference).abs() <= tolerance,
        over_determined: strict_slack > tolerance,
    })
}

/// Dilation parameters s for which the dilated bubble
/// w_s(x) = (2s/(1+s^2|x|^2))^{(n-2)/2} takes the given boundary value at
/// radius r. Every w_s solves the critical equation exactly, so either
/// root is a supersolution matching scaled boundary data; none exists when
/// the data exceed the family's maximum (1/r)^{(n-2)/2}.
pub fn bubble_dilation_roots(n: usize, r: f64, boundary_value: f64) -> Option<(f64, f64)> {
    let beta = boundary_value.powf(2.0 / (n as f64 - 2.0));
    let disc = 1.0 - beta * beta * r * r;
    if disc < 0.0 {
        return None;
    }
    let lo = (1.0 - disc.sqrt()) / (beta * r * r);
    let hi = (1.0 + disc.sqrt()) / (beta * r * r);
    Some((lo, hi))
}

pub fn dilated_bubble(n: usize, s: f64, r: f64) -> f64 {
    (2.0 * s / (1.0 + s * s * r * r)).powf((n as f64 - 2.0) / 2.0)
}

/// Supersolution for the spec's boundary data: the bubble itself at scale
/// one, otherwise the dilated bubble through the boundary value (root
/// closest to one). Errors when no dilation matches.
pub fn standard_supersolution(spec: &BvpSpec) -> Result<RadialField> {
    let w_boundary = round_bubble(spec.n, spec.radius);
    if (spec.boundary_value - w_boundary).abs() <= 1e-12 * w_boundary {
        return Ok(spec.bubble_field());
    }
    let (lo, hi) = bubble_dilation_roots(spec.n, spec.radius, spec.boundary_value).ok_or_else(
        || {
            Error::SolverFailure(format!(
                "no dilated-bubble supersolution: boundary value {} exceeds the family maximum {}",
                spec.boundary_value,
                (1.0 / spec.radius).powf((spec.n as f64 - 2.0) / 2.0)
            ))
        },
    )?;
    let s = if (lo - 1.0).abs() <= (hi - 1.0).abs() { lo } else { hi };
    let n = spec.n;
    RadialField::sample(spec.grid.clone(), |r| dilated_bubble(n, s, r))
}
