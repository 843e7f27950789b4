//! Conformal curvature operators on radial factor fields.
//!
//! For n >= 3 and conformally related metrics g~ = u^{4/(n-2)} g, scalar and
//! boundary mean curvature transform through
//!
//!   (n-2)/(4(n-1)) Scal(g~) u^{(n+2)/(n-2)} = (n-2)/(4(n-1)) Scal(g) u - lap(u)
//!   (n-2)/2 H(g~) u^{n/(n-2)}             = (n-2)/2 H(g) u + du/d(eta)
//!
//! with eta the outward direction and mean curvatures taken against the
//! inner normal. The Laplacian is the analyst's (sum of second derivatives).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{laplacian_radial, one_sided_derivative, RadialField, RadialGrid};
use crate::moebius::MoebiusMap;
use crate::sphere::SpherePoint;
use crate::tol;

/// (n+2)/(n-2), the critical exponent of the conformal scalar equation.
pub fn critical_power(n: usize) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

/// n(n-2)/4, the coefficient in front of the critical nonlinearity.
pub fn critical_coefficient(n: usize) -> f64 {
    n as f64 * (n as f64 - 2.0) / 4.0
}

/// 4/(n-2), the exponent relating factors to metrics.
pub fn factor_exponent(n: usize) -> f64 {
    4.0 / (n as f64 - 2.0)
}

/// Round-sphere scalar curvature n(n-1).
pub fn round_scal(n: usize) -> f64 {
    (n * (n - 1)) as f64
}

/// The round bubble w(r) = (2/(1+r^2))^{(n-2)/2}: the conformal factor
/// expressing the round metric over flat space through stereographic
/// projection, and the exact solution of
/// -lap(w) = n(n-2)/4 w^{(n+2)/(n-2)}.
pub fn round_bubble(n: usize, r: f64) -> f64 {
    (2.0 / (1.0 + r * r)).powf((n as f64 - 2.0) / 2.0)
}

/// d/dr of the round bubble: -(n-2) r w / (1 + r^2).
pub fn round_bubble_deriv(n: usize, r: f64) -> f64 {
    -(n as f64 - 2.0) * r * round_bubble(n, r) / (1.0 + r * r)
}

/// The flat-background critical nonlinearity n(n-2)/4 f^{(n+2)/(n-2)}.
pub fn bubble_nonlinearity(n: usize, f: f64) -> f64 {
    critical_coefficient(n) * f.powf(critical_power(n))
}

/// Its derivative in f.
pub fn bubble_nonlinearity_prime(n: usize, f: f64) -> f64 {
    critical_coefficient(n) * critical_power(n) * f.powf(critical_power(n) - 1.0)
}

/// The sphere-background combination n(n-2)/4 (u^{(n+2)/(n-2)} - u).
pub fn sphere_nonlinearity(n: usize, u: f64) -> f64 {
    critical_coefficient(n) * (u.powf(critical_power(n)) - u)
}

/// Scalar curvature per node plus the boundary mean curvature of a
/// conformally deformed metric, all against the inner-normal convention.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    pub grid: Arc<RadialGrid>,
    pub scal: Vec<f64>,
    pub mean_curvature_at_boundary: f64,
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Grid(format!(
            "conformal curvature operators need n >= 3, got {n}"
        )));
    }
    Ok(())
}

/// Scal(g~) for u over the round sphere:
/// (4(n-1)/(n-2)) u^{-(n+2)/(n-2)} (n(n-2)/4 u - lap u).
pub fn scal_from_factor_sphere(u: &RadialField) -> Result<CurvatureProfile> {
    let grid = u.grid();
    let n = grid.n();
    check_dimension(n)?;
    if !grid.is_sphere() {
        return Err(Error::Grid("scal_from_factor_sphere needs a sphere-polar grid".into()));
    }
    let lap = laplacian_radial(u)?;
    let c = critical_coefficient(n);
    let outer = 4.0 * (n as f64 - 1.0) / (n as f64 - 2.0);
    let p = critical_power(n);
    let scal = u
        .values()
        .iter()
        .zip(lap.iter())
        .map(|(&ui, &li)| outer * ui.powf(-p) * (c * ui - li))
        .collect();
    let h_bg = grid.end().cos() / grid.end().sin();
    let h = mean_curvature_boundary(u, h_bg)?;
    Ok(CurvatureProfile {
        grid: grid.clone(),
        scal,
        mean_curvature_at_boundary: h,
    })
}

/// Scal(g~) for u over flat space: -(4(n-1)/(n-2)) u^{-(n+2)/(n-2)} lap u.
pub fn scal_from_factor_euclidean(u: &RadialField) -> Result<CurvatureProfile> {
    let grid = u.grid();
    let n = grid.n();
    check_dimension(n)?;
    if grid.is_sphere() {
        return Err(Error::Grid("scal_from_factor_euclidean needs a flat radial grid".into()));
    }
    let lap = laplacian_radial(u)?;
    let outer = 4.0 * (n as f64 - 1.0) / (n as f64 - 2.0);
    let p = critical_power(n);
    let scal = u
        .values()
        .iter()
        .zip(lap.iter())
        .map(|(&ui, &li)| -outer * ui.powf(-p) * li)
        .collect();
    let h_bg = 1.0 / grid.end();
    let h = mean_curvature_boundary(u, h_bg)?;
    Ok(CurvatureProfile {
        grid: grid.clone(),
        scal,
        mean_curvature_at_boundary: h,
    })
}

/// Boundary mean curvature of u^{4/(n-2)} g against the inner normal:
/// H(g~) = u^{-n/(n-2)} (H_bg u + 2/(n-2) du/d(eta)), with the outward
/// derivative taken by a one-sided second-order stencil at the last node.
pub fn mean_curvature_boundary(u: &RadialField, h_background: f64) -> Result<f64> {
    let n = u.grid().n();
    check_dimension(n)?;
    let du = one_sided_derivative(u.grid().nodes(), u.values(), true, 3);
    let ub = u.boundary_value();
    Ok(ub.powf(-(n as f64) / (n as f64 - 2.0)) * (h_background * ub + 2.0 / (n as f64 - 2.0) * du))
}

/// Mean curvature at the inner boundary (first node) of an annular data
/// region, against the region's inner normal. The outward direction there
/// is the decreasing coordinate, so the stencil derivative flips sign.
pub fn mean_curvature_inner_boundary(u: &RadialField, h_background: f64) -> Result<f64> {
    let n = u.grid().n();
    check_dimension(n)?;
    let du = -one_sided_derivative(u.grid().nodes(), u.values(), false, 3);
    let ub = u.values()[0];
    Ok(ub.powf(-(n as f64) / (n as f64 - 2.0)) * (h_background * ub + 2.0 / (n as f64 - 2.0) * du))
}

/// Intrinsic round radius of the deformed boundary sphere:
/// u_boundary^{2/(n-2)} sin(theta_max) on polar grids.
pub fn induced_boundary_radius(u: &RadialField) -> Result<f64> {
    if !u.grid().is_sphere() {
        return Err(Error::Grid("induced_boundary_radius needs a sphere-polar grid".into()));
    }
    let n = u.grid().n();
    check_dimension(n)?;
    Ok(u.boundary_value().powf(2.0 / (n as f64 - 2.0)) * u.grid().end().sin())
}

/// Pointwise comparison of a scalar-curvature profile against a lower bound.
#[derive(Debug, Clone)]
pub struct ScalBoundCheck {
    pub passed: bool,
    /// min(scal) - bound; negative iff some node violates.
    pub worst_margin: f64,
    pub first_violation: Option<(usize, f64)>,
    pub tolerance: f64,
}

pub fn check_scal_bound(profile: &CurvatureProfile, bound: f64) -> ScalBoundCheck {
    let tolerance = tol::SCAL_REL_TOL * bound.abs().max(1.0);
    let mut worst = f64::INFINITY;
    let mut first = None;
    for (i, &s) in profile.scal.iter().enumerate() {
        let margin = s - bound;
        if margin < worst {
            worst = margin;
        }
        if first.is_none() && margin < -tolerance {
            first = Some((i, s));
        }
    }
    ScalBoundCheck {
        passed: first.is_none(),
        worst_margin: worst,
        first_violation: first,
        tolerance,
    }
}

/// Pullback of a radial factor under a Möbius map at the given sample
/// points: (u . a)(x) lambda_a(x)^{(n-2)/2}, so that the pullback of
/// u^{4/(n-2)} g is again of that form with the returned factor.
pub fn pullback_factor(
    u: &RadialField,
    map: &MoebiusMap,
    points: &[SpherePoint],
) -> Result<Vec<f64>> {
    let grid = u.grid();
    let n = grid.n();
    check_dimension(n)?;
    let pole = grid
        .pole()
        .ok_or_else(|| Error::Grid("pullback_factor needs a sphere-polar field".into()))?
        .clone();
    let exponent = (n as f64 - 2.0) / 2.0;
    points
        .iter()
        .map(|x| {
            let (y, lambda) = map.apply_sphere(x)?;
            let theta = pole.angle_to(&y);
            Ok(u.interpolate(theta)? * lambda.powf(exponent))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Background, RadialGrid};
    use crate::moebius::boost_along;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // Symbolic radial Laplacian of the bubble, derived by hand from the
    // closed form: lap w = -n(n-2) 2^{(n-2)/2} (1+r^2)^{-(n+2)/2}.
    fn bubble_laplacian_exact(n: usize, r: f64) -> f64 {
        let a = (n as f64 - 2.0) / 2.0;
        -(n as f64) * (n as f64 - 2.0) * 2.0_f64.powf(a) * (1.0 + r * r).powf(-(a + 2.0))
    }

    #[test]
    fn bubble_values() {
        // direct substitutions
        assert_relative_eq!(round_bubble(3, 0.0), 2.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(round_bubble(5, 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(round_bubble(4, 2.0), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn bubble_symbolic_identity() {
        // -lap w = n(n-2)/4 w^{(n+2)/(n-2)}, as closed forms
        for n in [3usize, 4, 5, 6] {
            for r in [0.0, 0.3, 1.0, 2.7] {
                assert_relative_eq!(
                    -bubble_laplacian_exact(n, r),
                    bubble_nonlinearity(n, round_bubble(n, r)),
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn bubble_identity_on_grid_n5() {
        // discrete Laplacian of w on [0, 2] against the symbolic oracle
        let n = 5;
        let grid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, 2.0, 2048).unwrap());
        let w = RadialField::sample(grid.clone(), |r| round_bubble(n, r)).unwrap();
        let lap = laplacian_radial(&w).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = bubble_laplacian_exact(n, r);
            let rhs = -bubble_nonlinearity(n, round_bubble(n, r));
            assert_relative_eq!(lap[i], exact, max_relative = 1e-6);
            assert_relative_eq!(lap[i], rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn scal_of_round_factor_is_round() {
        let grid = Arc::new(
            RadialGrid::uniform_sphere(3, SpherePoint::south(3), 0.0, PI / 2.0, 64).unwrap(),
        );
        let u = RadialField::constant(grid, 1.0).unwrap();
        let profile = scal_from_factor_sphere(&u).unwrap();
        for &s in &profile.scal {
            assert_relative_eq!(s, 6.0, epsilon = 1e-10);
        }
        // H of the equatorial boundary is cot(pi/2) = 0
        assert!(profile.mean_curvature_at_boundary.abs() < 1e-10);
    }

    #[test]
    fn scal_of_scaled_round_factor() {
        for n in [3usize, 4, 5] {
            let grid = Arc::new(
                RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.0, 1.0, 64).unwrap(),
            );
            let c = 1.3;
            let u = RadialField::constant(grid, c).unwrap();
            let profile = scal_from_factor_sphere(&u).unwrap();
            let expected = round_scal(n) / c.powf(factor_exponent(n));
            for &s in &profile.scal {
                assert_relative_eq!(s, expected, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn scal_of_boost_pullback_is_round() {
        // conformal images of the round metric stay round
        let n = 4;
        let pole = SpherePoint::south(n);
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, pole.clone(), 0.0, 2.0, 512).unwrap(),
        );
        let boost = boost_along(&pole, 0.6).unwrap();
        let exponent = (n as f64 - 2.0) / 2.0;
        let u = RadialField::sample(grid.clone(), |theta| {
            let x = pole.latitude_representative(theta);
            let (_, lambda) = boost.apply_sphere(&x).unwrap();
            lambda.powf(exponent)
        })
        .unwrap();
        let profile = scal_from_factor_sphere(&u).unwrap();
        for &s in &profile.scal {
            assert_relative_eq!(s, round_scal(n), max_relative = 1e-5);
        }
    }

    #[test]
    fn scal_euclidean_of_bubble_is_round() {
        for n in [3usize, 6] {
            let grid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, 2.0, 1024).unwrap());
            let u = RadialField::sample(grid, |r| round_bubble(n, r)).unwrap();
            let profile = scal_from_factor_euclidean(&u).unwrap();
            for &s in &profile.scal {
                assert_relative_eq!(s, round_scal(n), max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn scal_euclidean_flat_cases() {
        let n = 4;
        let grid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, 1.0, 64).unwrap());
        let u = RadialField::constant(grid, 1.0).unwrap();
        let profile = scal_from_factor_euclidean(&u).unwrap();
        for &s in &profile.scal {
            assert!(s.abs() < 1e-10);
        }
        // Kelvin image of a constant: u = r^{-(n-2)} is harmonic, so flat
        let annulus = Arc::new(RadialGrid::uniform_euclidean(n, 1.0, 2.0, 256).unwrap());
        let kelvin =
            RadialField::sample(annulus, |r| r.powi(-(n as i32 - 2))).unwrap();
        let profile = scal_from_factor_euclidean(&kelvin).unwrap();
        for &s in &profile.scal {
            assert!(s.abs() < 1e-5, "kelvin scal {s}");
        }
    }

    #[test]
    fn mean_curvature_round_cases() {
        let n = 3;
        let rho: f64 = PI / 3.0;
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.0, rho, 64).unwrap(),
        );
        let u = RadialField::constant(grid.clone(), 1.0).unwrap();
        let h = mean_curvature_boundary(&u, rho.cos() / rho.sin()).unwrap();
        assert_relative_eq!(h, 1.0 / rho.tan(), epsilon = 1e-12);

        // scaled constant on a flat ball: H = c^{-2/(n-2)} / r
        let r = 0.8;
        let egrid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, r, 64).unwrap());
        let c = 1.7;
        let uc = RadialField::constant(egrid, c).unwrap();
        let h = mean_curvature_boundary(&uc, 1.0 / r).unwrap();
        assert_relative_eq!(h, c.powf(-2.0 / (n as f64 - 2.0)) / r, epsilon = 1e-12);
    }

    #[test]
    fn mean_curvature_of_bubble_boundary() {
        // On the ball of radius r = tan(rho/2) with u = w, the deformed
        // boundary has H = cot(rho). Checked against the discrete stencil
        // and by substituting w and w' into the transformation law.
        for rho in [PI / 4.0, PI / 3.0, PI / 2.0] {
            let n = 4;
            let r = (rho / 2.0).tan();
            let grid = Arc::new(RadialGrid::uniform_euclidean(n, 0.0, r, 4096).unwrap());
            let w = RadialField::sample(grid, |t| round_bubble(n, t)).unwrap();
            let h = mean_curvature_boundary(&w, 1.0 / r).unwrap();
            let expected = rho.cos() / rho.sin();
            assert_relative_eq!(h, expected, epsilon = 1e-7, max_relative = 1e-7);

            // independent substitution of the closed forms
            let wb = round_bubble(n, r);
            let analytic = wb.powf(-(n as f64) / (n as f64 - 2.0))
                * (wb / r + 2.0 / (n as f64 - 2.0) * round_bubble_deriv(n, r));
            assert_relative_eq!(analytic, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn scal_bound_gate() {
        let n = 4;
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, SpherePoint::south(n), 0.0, 1.2, 64).unwrap(),
        );
        let bound = round_scal(n);

        let round = RadialField::constant(grid.clone(), 1.0).unwrap();
        let check = check_scal_bound(&scal_from_factor_sphere(&round).unwrap(), bound);
        assert!(check.passed);
        assert!(check.worst_margin.abs() < 1e-9);

        let inflated = RadialField::constant(grid.clone(), 1.1).unwrap();
        let check = check_scal_bound(&scal_from_factor_sphere(&inflated).unwrap(), bound);
        assert!(!check.passed);
        assert!(check.first_violation.is_some());

        let deflated = RadialField::constant(grid, 0.9).unwrap();
        let check = check_scal_bound(&scal_from_factor_sphere(&deflated).unwrap(), bound);
        assert!(check.passed);
        assert!(check.worst_margin > 0.0);
    }

    #[test]
    fn pullback_factor_identity_and_rotation() {
        let n = 3;
        let pole = SpherePoint::south(n);
        let grid = Arc::new(
            RadialGrid::uniform_sphere(n, pole.clone(), 0.0, 1.5, 64).unwrap(),
        );
        let u = RadialField::sample(grid.clone(), |t| 1.0 + 0.1 * t * t).unwrap();
        let points: Vec<SpherePoint> = (0..20)
            .map(|k| pole.latitude_representative(0.07 * k as f64))
            .collect();

        let id = MoebiusMap::identity(n).unwrap();
        let vals = pullback_factor(&u, &id, &points).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let t = 0.07 * k as f64;
            assert_relative_eq!(*v, 1.0 + 0.1 * t * t, epsilon = 1e-9);
        }

        // rotations about the pole axis fix radial fields
        let rot = crate::moebius::rotation_between(
            &SpherePoint::axis(n, 0),
            &SpherePoint::axis(n, 1),
        )
        .unwrap();
        let vals = pullback_factor(&u, &rot, &points).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let t = 0.07 * k as f64;
            assert_relative_eq!(*v, 1.0 + 0.1 * t * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn stereographic_transfer_preserves_scal() {
        // Scal of u over the cap equals Scal of (u . pi^{-1}) w over the
        // stereographic image ball, node for node.
        let n = 3;
        let rho = PI / 2.5;
        let pole = SpherePoint::south(n);
        let sgrid = Arc::new(
            RadialGrid::uniform_sphere(n, pole, 0.0, rho, 1024).unwrap(),
        );
        let u = RadialField::sample(sgrid.clone(), |t| 1.0 + 0.05 * (1.4 * t).cos()).unwrap();
        let sphere_scal = scal_from_factor_sphere(&u).unwrap();

        let enodes: Vec<f64> = sgrid.nodes().iter().map(|&t| (t / 2.0).tan()).collect();
        let egrid = Arc::new(
            RadialGrid::from_nodes(n, Background::EuclideanRadial, enodes).unwrap(),
        );
        let v = RadialField::new(
            egrid.clone(),
            egrid
                .nodes()
                .iter()
                .zip(u.values())
                .map(|(&r, &uv)| uv * round_bubble(n, r))
                .collect(),
            Regularity::Smooth,
        )
        .unwrap();
        let euclid_scal = scal_from_factor_euclidean(&v).unwrap();
        for (a, b) in sphere_scal.scal.iter().zip(euclid_scal.scal.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-5, epsilon = 1e-5);
        }
    }

    use crate::grid::Regularity;
}
