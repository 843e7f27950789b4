//! Hole normalization and the round-cap glue.
//!
//! A hole is a geodesic ball cut out of the data domain whose boundary is
//! isometric to the standard cap boundary. Normalization moves it onto the
//! complement-cap position about the north pole by a rotation plus an axis
//! boost; the glue then fills that cap with the constant factor 1. The
//! result is Lipschitz across the interface, and the curvature inequality
//! survives in the distributional sense exactly when the interface jump of
//! the radial derivative is nonnegative, which in turn encodes the boundary
//! mean-curvature hypothesis.

use std::sync::Arc;

use serde::Serialize;

use crate::curvature::{pullback_factor, sphere_nonlinearity};
use crate::error::{Error, Result};
use crate::grid::{
    flux_laplacian, one_sided_derivative, uniform_nodes, Background, RadialField, RadialGrid,
    Regularity,
};
use crate::moebius::{cap_normalizer, MoebiusMap};
use crate::sphere::{HyperSphere, SpherePoint};
use crate::tol;

/// A field glued from the constant cap and the normalized data, radial
/// about the glued cap's pole. The cap occupies [0, interface_angle] with
/// value exactly 1.
#[derive(Debug, Clone)]
pub struct GluedField {
    field: RadialField,
    interface_index: usize,
}

impl GluedField {
    pub fn field(&self) -> &RadialField {
        &self.field
    }

    pub fn interface_index(&self) -> usize {
        self.interface_index
    }

    pub fn interface_angle(&self) -> f64 {
        self.field.grid().nodes()[self.interface_index]
    }

    /// Cap parameter rho of the configuration (the glued cap has radius
    /// pi - rho).
    pub fn rho(&self) -> f64 {
        std::f64::consts::PI - self.interface_angle()
    }
}

/// One-sided radial derivatives at the glue interface and their jump.
/// The sign convention: derivatives are taken along the coordinate of the
/// glued grid (pointing from the cap into the data region), `left` from the
/// cap side, `right` from the data side. The curvature hypothesis at the
/// seam is jump = left - right >= 0.
#[derive(Debug, Clone, Serialize)]
pub struct JumpReport {
    pub left_derivative: f64,
    pub right_derivative: f64,
    pub jump: f64,
}

/// Normalize a hole to the standard position: returns the Möbius map M
/// carrying the standard complement cap about the north pole onto the hole,
/// together with the data pulled back by M, resampled radially about the
/// south pole on [new_start, rho] with the interface at the last node.
///
/// The hole must be centered on the field's axis (the radial setting knows
/// nothing else), and its boundary must be round of radius sin(rho): the
/// induced boundary factor c must satisfy c^{2/(n-2)} sin(eps) = sin(rho).
pub fn normalize_hole(
    u: &RadialField,
    hole: &HyperSphere,
    rho: f64,
) -> Result<(MoebiusMap, RadialField)> {
    let grid = u.grid();
    let n = grid.n();
    let pole = grid
        .pole()
        .ok_or_else(|| Error::Grid("normalize_hole needs a sphere-polar field".into()))?
        .clone();
    if !(rho > 0.0 && rho < std::f64::consts::PI) {
        return Err(Error::Grid(format!("cap parameter {rho} out of range")));
    }

    let axis_angle = pole.angle_to(hole.center());
    let on_axis = axis_angle < 1e-9;
    let anti_axis = axis_angle > std::f64::consts::PI - 1e-9;
    if !on_axis && !anti_axis {
        return Err(Error::Grid(format!(
            "hole center sits {axis_angle:.3} rad off the field axis; \
             non-axisymmetric configurations are unsupported"
        )));
    }

    // hole boundary as an angle from the field pole, and the matching end
    // of the data span
    let boundary_angle_from_pole = if on_axis {
        hole.radius()
    } else {
        std::f64::consts::PI - hole.radius()
    };
    let (boundary_value, far_target) = if on_axis {
        // inner hole: data live on [eps, t_max]
        if (grid.start() - boundary_angle_from_pole).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "data span starts at {} but the hole boundary sits at {}",
                grid.start(),
                boundary_angle_from_pole
            )));
        }
        (u.values()[0], grid.end())
    } else {
        // complement hole: data live on [t_0, pi - eps]
        if (grid.end() - boundary_angle_from_pole).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "data span ends at {} but the hole boundary sits at {}",
                grid.end(),
                boundary_angle_from_pole
            )));
        }
        (u.boundary_value(), grid.start())
    };

    // roundness gate: the deformed hole boundary must be the standard cap
    // boundary, a round sphere of radius sin(rho)
    let induced = boundary_value.powf(2.0 / (n as f64 - 2.0)) * hole.radius().sin();
    if (induced - rho.sin()).abs() > tol::BOUNDARY_REL_TOL * rho.sin() {
        return Err(Error::hypothesis(
            "(ii) boundary isometry",
            format!(
                "hole boundary has induced radius {induced:.9}, expected sin(rho) = {:.9} \
                 (boundary factor {boundary_value:.9})",
                rho.sin()
            ),
        ));
    }

    // the standard complement cap about N, mapped onto the hole
    let south = SpherePoint::south(n);
    let north = SpherePoint::north(n);
    let standard = HyperSphere::new(north, std::f64::consts::PI - rho)?;
    let map = cap_normalizer(&standard, hole)?;

    // image span: the interface lands at rho by construction; the far end
    // is the preimage of the far end of the data span
    let angle_of_image = |theta: f64| -> Result<f64> {
        let x = south.latitude_representative(theta);
        let (y, _) = map.apply_sphere(&x)?;
        Ok(pole.angle_to(&y))
    };
    let new_start = if (if on_axis { grid.end() } else { grid.start() }) == 0.0 {
        0.0
    } else {
        bisect_angle(&angle_of_image, rho, far_target)?
    };

    let cells = grid.len() - 1;
    let new_grid = Arc::new(RadialGrid::from_nodes(
        n,
        Background::SpherePolar { pole: south.clone() },
        uniform_nodes(new_start, rho, cells),
    )?);
    let points: Vec<SpherePoint> = new_grid
        .nodes()
        .iter()
        .map(|&t| south.latitude_representative(t))
        .collect();
    let values = pullback_factor(u, &map, &points)?;
    let field = RadialField::new(new_grid, values, Regularity::Smooth)?;
    Ok((map, field))
}

/// Bisection for the angle theta in (0, rho) whose image angle hits the
/// target; the map is monotone on the axis in either orientation.
fn bisect_angle(f: &dyn Fn(f64) -> Result<f64>, rho: f64, target: f64) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = rho;
    let flo = f(lo)?;
    let fhi = f(hi)?;
    let increasing = fhi > flo;
    let (mut a, mut b) = (lo, hi);
    if !((flo - target) * (fhi - target) <= 0.0) {
        return Err(Error::Grid(format!(
            "far end {target:.6} is outside the image span [{flo:.6}, {fhi:.6}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if (fm - target).abs() < 1e-14 {
            return Ok(mid);
        }
        if (fm < target) == increasing {
            a = mid;
        } else {
            b = mid;
        }
        lo = a;
        hi = b;
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fill the complement cap with the constant factor 1. The input is the
/// normalized field about the south pole with the interface at its last
/// node (value 1 within tolerance). The output lives on a grid about the
/// north pole: cap region [0, pi - rho] constant 1, data region beyond,
/// clipped at the antipodal pole guard.
pub fn glue_cap(u: &RadialField) -> Result<GluedField> {
    let grid = u.grid();
    let n = grid.n();
    let pole = grid
        .pole()
        .ok_or_else(|| Error::Grid("glue_cap needs a sphere-polar field".into()))?;
    let rho = grid.end();
    let boundary = u.boundary_value();
    if (boundary - 1.0).abs() > tol::INTERFACE_TOL {
        return Err(Error::InterfaceMismatch(format!(
            "interface value {boundary:.9} is not 1 within {:.1e}",
            tol::INTERFACE_TOL
        )));
    }

    let cap_angle = std::f64::consts::PI - rho;
    let data_nodes = grid.nodes();
    let h = (data_nodes[data_nodes.len() - 1] - data_nodes[0]) / (data_nodes.len() - 1) as f64;
    let cap_cells = (cap_angle / h).ceil().max(super::grid::MIN_CELLS as f64) as usize;

    let guard = std::f64::consts::PI - tol::POLE_GUARD;
    let mut nodes = uniform_nodes(0.0, cap_angle, cap_cells);
    let mut values = vec![1.0; nodes.len()];
    let interface_index = nodes.len() - 1;
    // data region, mirrored to angles from the opposite pole; the sliver
    // beyond the pole guard is clipped
    for (i, &t) in data_nodes.iter().enumerate().rev().skip(1) {
        let mirrored = std::f64::consts::PI - t;
        if mirrored > guard {
            continue;
        }
        nodes.push(mirrored);
        values.push(u.values()[i]);
    }

    let glued_grid = Arc::new(RadialGrid::from_nodes(
        n,
        Background::SpherePolar { pole: pole.antipode() },
        nodes,
    )?);
    let field = RadialField::new(glued_grid, values, Regularity::LipschitzGlued(interface_index))?;
    Ok(GluedField { field, interface_index })
}

/// One-sided second-order derivatives on both sides of the interface.
pub fn interface_jump(g: &GluedField) -> JumpReport {
    let nodes = g.field.grid().nodes();
    let values = g.field.values();
    let k = g.interface_index;
    let left = one_sided_derivative(&nodes[k - 2..=k], &values[k - 2..=k], true, 3);
    let right = one_sided_derivative(&nodes[k..=k + 2], &values[k..=k + 2], false, 3);
    JumpReport {
        left_derivative: left,
        right_derivative: right,
        jump: left - right,
    }
}

/// A C^2 piecewise-quintic bump of unit height.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
}

impl Bump {
    pub fn eval(&self, t: f64) -> f64 {
        let x = 1.0 - ((t - self.center).abs() / self.half_width);
        if x <= 0.0 {
            0.0
        } else {
            // smootherstep: vanishing value, slope and curvature at the
            // support boundary, vanishing slope and curvature at the peak
            x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Twenty bumps spanning the glued domain: widths 0.05, 0.1 and 0.2 of the
/// span, centers spread over the admissible interior.
pub fn standard_bump_family(grid: &RadialGrid) -> Vec<Bump> {
    let lo = grid.start();
    let hi = grid.end();
    let span = hi - lo;
    let pad = 3.0 * span / (grid.len() as f64);
    let mut bumps = Vec::with_capacity(20);
    for (width_frac, count) in [(0.05, 7usize), (0.1, 7), (0.2, 6)] {
        let hw = 0.5 * width_frac * span;
        let a = lo + pad + hw;
        let b = hi - pad - hw;
        for i in 0..count {
            let center = a + (b - a) * i as f64 / (count - 1) as f64;
            bumps.push(Bump { center, half_width: hw });
        }
    }
    bumps
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpResidual {
    pub center: f64,
    pub half_width: f64,
    pub residual: f64,
    pub straddles_interface: bool,
}

/// Residual of the distributional curvature inequality against a family of
/// nonnegative bumps:
///
///   residual(phi) = int u (-lap phi) - n(n-2)/4 int (u^{(n+2)/(n-2)} - u) phi
///
/// with the exact radial volume element. The discrete Laplacian is the
/// conservative flux form, which is exactly self-adjoint in the cell-volume
/// inner product: for bumps supported away from the interface the residual
/// coincides with the quadrature of (-lap u - rhs) phi to machine
/// precision, and across the interface it picks up the jump term with the
/// sign of the mean-curvature defect.
pub fn weak_inequality_residual(g: &GluedField, bumps: &[Bump]) -> Result<Vec<BumpResidual>> {
    let field = &g.field;
    let grid = field.grid();
    let n = grid.n();
    let nodes = grid.nodes();
    let len = nodes.len();
    let area = grid.angular_area();
    let vols = grid.cell_volumes();
    let interface = g.interface_angle();

    let mut out = Vec::with_capacity(bumps.len());
    for bump in bumps {
        let (lo, hi) = bump.support();
        if lo <= nodes[0] + 1e-12 || hi >= nodes[len - 1] - 1e-12 {
            return Err(Error::BumpPlacement(format!(
                "support [{lo:.4}, {hi:.4}] leaves the glued domain \
                 [{:.4}, {:.4}]",
                nodes[0],
                nodes[len - 1]
            )));
        }
        let phi: Vec<f64> = nodes.iter().map(|&t| bump.eval(t)).collect();
        let lap_phi = flux_laplacian(grid, &phi);
        let mut residual = 0.0;
        for i in 0..len {
            let ui = field.values()[i];
            residual += area
                * vols[i]
                * (ui * (-lap_phi[i]) - sphere_nonlinearity(n, ui) * phi[i]);
        }
        out.push(BumpResidual {
            center: bump.center,
            half_width: bump.half_width,
            residual,
            straddles_interface: lo < interface && interface < hi,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::boost_factor;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn standard_cap_field(n: usize, rho: f64, cells: usize) -> RadialField {
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.0, rho, cells).unwrap(),
        );
        RadialField::constant(grid, 1.0).unwrap()
    }

    /// Glued field with the cap constant and a linear data-side profile of
    /// the given outward slope.
    fn sloped_glued(n: usize, rho: f64, slope: f64) -> GluedField {
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.2, rho, 256).unwrap(),
        );
        let u = RadialField::sample(grid, move |t| 1.0 + slope * (rho - t)).unwrap();
        glue_cap(&u).unwrap()
    }

    #[test]
    fn glue_of_round_cap_is_all_ones() {
        let u = standard_cap_field(3, PI / 3.0, 64);
        let g = glue_cap(&u).unwrap();
        for &v in g.field().values() {
            assert_eq!(v, 1.0);
        }
        assert_relative_eq!(g.interface_angle(), PI - PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(g.rho(), PI / 3.0, epsilon = 1e-12);
        let jump = interface_jump(&g);
        assert!(jump.jump.abs() < 1e-13);
    }

    #[test]
    fn glue_requires_unit_interface() {
        let grid = Arc::new(
            RadialGrid::uniform_sphere(3, SpherePoint::south(3), 0.0, 1.0, 64).unwrap(),
        );
        let u = RadialField::constant(grid, 1.0 + 1e-3).unwrap();
        assert!(matches!(glue_cap(&u), Err(Error::InterfaceMismatch(_))));
    }

    #[test]
    fn glue_is_idempotent_on_round_data() {
        // re-gluing the data side of a glued round field reproduces it
        let u = standard_cap_field(4, PI / 2.0, 64);
        let g = glue_cap(&u).unwrap();
        let k = g.interface_index();
        let nodes = g.field().grid().nodes();
        let data_nodes: Vec<f64> = nodes[k..].iter().map(|&t| PI - t).rev().collect();
        let data_grid = Arc::new(
            RadialGrid::from_nodes(
                4,
                Background::SpherePolar { pole: SpherePoint::south(4) },
                data_nodes,
            )
            .unwrap(),
        );
        let data = RadialField::constant(data_grid, 1.0).unwrap();
        let g2 = glue_cap(&data).unwrap();
        assert_relative_eq!(g2.interface_angle(), g.interface_angle(), epsilon = 1e-12);
        for &v in g2.field().values() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn normalize_already_standard_hole() {
        let n = 3;
        let rho = PI / 3.0;
        let u = standard_cap_field(n, rho, 128);
        let hole = HyperSphere::new(SpherePoint::north(n), PI - rho).unwrap();
        let (map, field) = normalize_hole(&u, &hole, rho).unwrap();
        // rotation part is trivial, boost is zero
        let id = nalgebra::DMatrix::<f64>::identity(n + 2, n + 2);
        assert!((map.matrix() - id).amax() < 1e-12);
        for &v in field.values() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        }
        assert_relative_eq!(field.grid().end(), rho, epsilon = 1e-15);
    }

    #[test]
    fn normalize_boosted_configuration() {
        // pull the round cap through an axis boost: the hole moves and the
        // factor becomes a bubble profile; normalization must restore the
        // constant 1 on the interface (and here on the whole domain)
        let n = 3;
        let rho = PI / 3.0;
        let s = 0.5;
        let south = SpherePoint::south(n);
        // transformed domain radius: angles from S grow under pullback
        let rho_dom = crate::moebius::boost_angle(-s, rho);
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, south.clone(), 0.0, rho_dom, 256).unwrap(),
        );
        let exponent = (n as f64 - 2.0) / 2.0;
        let u = RadialField::sample(grid, |theta| boost_factor(s, theta).powf(exponent)).unwrap();
        let hole = HyperSphere::new(SpherePoint::north(n), PI - rho_dom).unwrap();
        let (_, field) = normalize_hole(&u, &hole, rho).unwrap();
        for &v in field.values() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn normalize_rejects_scaled_boundary() {
        let n = 3;
        let rho = PI / 3.0;
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.0, rho, 64).unwrap(),
        );
        let u = RadialField::constant(grid, 1.05).unwrap();
        let hole = HyperSphere::new(SpherePoint::north(n), PI - rho).unwrap();
        match normalize_hole(&u, &hole, rho) {
            Err(Error::HypothesisViolation { clause, .. }) => {
                assert!(clause.contains("boundary isometry"));
            }
            other => panic!("expected a boundary-isometry violation, got {other:?}"),
        }
    }

    #[test]
    fn normalize_rejects_off_axis_hole() {
        let n = 3;
        let u = standard_cap_field(n, PI / 3.0, 64);
        let hole = HyperSphere::new(SpherePoint::axis(n, 0), 0.4).unwrap();
        assert!(normalize_hole(&u, &hole, PI / 3.0).is_err());
    }

    #[test]
    fn normalize_inner_hole() {
        // annular data about the pole: hole at the south pole itself
        let n = 4;
        let rho = PI / 2.0;
        let eps = 0.4;
        let south = SpherePoint::south(n);
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, south.clone(), eps, PI - 0.9, 256).unwrap(),
        );
        // boundary factor must make the eps-sphere isometric to sin(rho):
        // c^{2/(n-2)} sin(eps) = sin(rho)
        let c = (rho.sin() / eps.sin()).powf((n as f64 - 2.0) / 2.0);
        let u = RadialField::sample(grid, move |t| c * (1.0 + 0.3 * (t - eps))).unwrap();
        let hole = HyperSphere::new(south.clone(), eps).unwrap();
        let (_, field) = normalize_hole(&u, &hole, rho).unwrap();
        assert_relative_eq!(field.grid().end(), rho, epsilon = 1e-12);
        assert_relative_eq!(field.boundary_value(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn jump_signs_track_the_slope() {
        // u = 1 + slope (rho - t): the outward derivative du/d(eta) at the
        // data boundary is -slope, so slope < 0 means mean curvature above
        // the round value and a positive glue jump; slope > 0 the reverse.
        let rho = PI / 2.5;
        let healthy = sloped_glued(4, rho, -0.2);
        let jump = interface_jump(&healthy);
        assert!(jump.left_derivative.abs() < 1e-12);
        assert_relative_eq!(jump.jump, 0.2, epsilon = 1e-10);

        let violating = sloped_glued(4, rho, 0.2);
        let jump = interface_jump(&violating);
        assert_relative_eq!(jump.jump, -0.2, epsilon = 1e-10);
    }

    #[test]
    fn residuals_zero_on_round_glue() {
        let u = standard_cap_field(3, PI / 3.0, 512);
        let g = glue_cap(&u).unwrap();
        let bumps = standard_bump_family(g.field().grid());
        assert_eq!(bumps.len(), 20);
        let residuals = weak_inequality_residual(&g, &bumps).unwrap();
        assert!(residuals.iter().any(|r| r.straddles_interface));
        for r in &residuals {
            assert!(
                r.residual.abs() < 1e-10,
                "round glue residual {} at {}",
                r.residual,
                r.center
            );
        }
    }

    #[test]
    fn duality_away_from_interface() {
        // for smooth data and an interior bump, testing against the field
        // equals testing the field's equation directly, to machine precision
        let n = 3;
        let rho = 2.0;
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.2, rho, 512).unwrap(),
        );
        let data = RadialField::sample(grid, move |t| 1.0 + 0.05 * (rho - t) * (t - 0.2)).unwrap();
        let g = glue_cap(&data).unwrap();
        let ggrid = g.field().grid();
        let vols = ggrid.cell_volumes();
        let area = ggrid.angular_area();
        let lap_u = flux_laplacian(ggrid, g.field().values());
        let bumps = standard_bump_family(ggrid);
        let residuals = weak_inequality_residual(&g, &bumps).unwrap();
        for (bump, r) in bumps.iter().zip(&residuals) {
            if r.straddles_interface {
                continue;
            }
            // direct quadrature of (-lap u - rhs) phi
            let mut direct = 0.0;
            for (i, &t) in ggrid.nodes().iter().enumerate() {
                let ui = g.field().values()[i];
                direct += area
                    * vols[i]
                    * ((-lap_u[i]) - sphere_nonlinearity(ggrid.n(), ui))
                    * bump.eval(t);
            }
            assert!(
                (r.residual - direct).abs() < 1e-8,
                "duality defect {:.3e} at center {}",
                (r.residual - direct).abs(),
                bump.center
            );
        }
    }

    #[test]
    fn negative_jump_gives_negative_interface_residual() {
        // data rising away from the interface: mean-curvature hypothesis
        // violated, negative jump, negative residual on straddling bumps
        let g = sloped_glued(3, PI / 2.5, 0.2);
        assert!(interface_jump(&g).jump < 0.0);
        let bumps = standard_bump_family(g.field().grid());
        let residuals = weak_inequality_residual(&g, &bumps).unwrap();
        let worst = residuals
            .iter()
            .filter(|r| r.straddles_interface)
            .map(|r| r.residual)
            .fold(f64::INFINITY, f64::min);
        assert!(worst < -1e-6, "interface residual {worst} should be negative");
    }

    #[test]
    fn bump_placement_is_gated() {
        let u = standard_cap_field(3, PI / 3.0, 64);
        let g = glue_cap(&u).unwrap();
        let bad = Bump { center: g.field().grid().end(), half_width: 0.2 };
        assert!(matches!(
            weak_inequality_residual(&g, &[bad]),
            Err(Error::BumpPlacement(_))
        ));
    }
}
