//! Möbius transformations of S^n in the Lorentz model.
//!
//! A transformation is stored as an (n+2)x(n+2) matrix A with A^T J A = J
//! that preserves the future light cone. The same matrix acts on three
//! models at once:
//!
//! - on S^n through lightlike lifts x -> (x, 1), with a conformal factor
//!   read off the time component;
//! - on the ball B^{n+1} through the hyperboloid model, which realizes the
//!   extension of the boundary map to the ball;
//! - on hyperspheres through their spacelike vectors.
//!
//! Reflections in hyperspheres generate the group; rotations and boosts
//! along an axis are provided as the building blocks of cap normalization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::minkowski::MinkowskiForm;
use crate::sphere::{BallPoint, HyperSphere, SpherePoint};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap {
    matrix: DMatrix<f64>,
    form: MinkowskiForm,
}

impl MoebiusMap {
    /// Wrap a matrix, validating the Lorentz property and future preservation.
    pub fn from_matrix(matrix: DMatrix<f64>, n: usize) -> Result<Self> {
        let form = MinkowskiForm::new(n)?;
        if matrix.nrows() != form.dim() || matrix.ncols() != form.dim() {
            return Err(Error::DimensionMismatch(matrix.nrows(), form.dim()));
        }
        let defect = form.lorentz_defect(&matrix);
        if defect > 1e-6 {
            return Err(Error::NotLorentz(format!("|A^T J A - J| = {defect:.3e}")));
        }
        if !form.is_future_preserving(&matrix) {
            return Err(Error::NotLorentz("time orientation is reversed".into()));
        }
        let matrix = if defect > tol::RENORMALIZE_TOL {
            form.reorthogonalize(&matrix)?
        } else {
            matrix
        };
        Ok(MoebiusMap { matrix, form })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let form = MinkowskiForm::new(n)?;
        Ok(MoebiusMap {
            matrix: DMatrix::identity(form.dim(), form.dim()),
            form,
        })
    }

    pub fn n(&self) -> usize {
        self.form.sphere_dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn form(&self) -> &MinkowskiForm {
        &self.form
    }

    pub fn lorentz_defect(&self) -> f64 {
        self.form.lorentz_defect(&self.matrix)
    }

    /// Group inverse, J A^T J, exact for Lorentz matrices.
    pub fn inverse(&self) -> MoebiusMap {
        let j = self.form.j_matrix();
        MoebiusMap {
            matrix: &j * self.matrix.transpose() * &j,
            form: self.form,
        }
    }

    /// Composition a . b (b acts first). Re-orthogonalizes against the form
    /// when accumulated drift exceeds the renormalization threshold.
    pub fn compose(&self, b: &MoebiusMap) -> Result<MoebiusMap> {
        if self.n() != b.n() {
            return Err(Error::DimensionMismatch(self.n(), b.n()));
        }
        let mut matrix = &self.matrix * &b.matrix;
        if self.form.lorentz_defect(&matrix) > tol::RENORMALIZE_TOL {
            matrix = self.form.reorthogonalize(&matrix)?;
        }
        Ok(MoebiusMap { matrix, form: self.form })
    }

    /// Act on a sphere point. Returns the image and the conformal factor
    /// lambda at x, so that the pullback of the round metric under this map
    /// is lambda^2 g at x.
    pub fn apply_sphere(&self, x: &SpherePoint) -> Result<(SpherePoint, f64)> {
        if x.n() != self.n() {
            return Err(Error::DimensionMismatch(x.n(), self.n()));
        }
        let d = self.form.dim();
        let mut lift = DVector::zeros(d);
        for i in 0..d - 1 {
            lift[i] = x.coords()[i];
        }
        lift[d - 1] = 1.0;
        let image = &self.matrix * lift;
        let t = image[d - 1];
        if t <= 0.0 {
            return Err(Error::NotLorentz(format!(
                "image time component {t:.3e} is not positive"
            )));
        }
        let y = image.rows(0, d - 1).into_owned() / t;
        // renormalize against rounding drift
        let y = SpherePoint::new(&y / y.norm())?;
        Ok((y, 1.0 / t))
    }

    /// Act on a ball point through the hyperboloid model. The boundary limit
    /// of this action is `apply_sphere` (the restriction property of the
    /// extension).
    pub fn apply_ball(&self, y: &BallPoint) -> Result<BallPoint> {
        let d = self.form.dim();
        if y.coords().len() != d - 1 {
            return Err(Error::DimensionMismatch(y.coords().len(), d - 1));
        }
        let norm2 = y.coords().norm_squared();
        let scale = 1.0 - norm2;
        let mut u = DVector::zeros(d);
        for i in 0..d - 1 {
            u[i] = 2.0 * y.coords()[i] / scale;
        }
        u[d - 1] = (1.0 + norm2) / scale;
        let image = &self.matrix * u;
        let t = image[d - 1];
        let out = image.rows(0, d - 1).into_owned() / (1.0 + t);
        BallPoint::new(out)
    }

    /// Image of a hypersphere: the spacelike vector transforms linearly and
    /// the cap side is preserved.
    pub fn transform_sphere(&self, s: &HyperSphere) -> Result<HyperSphere> {
        if s.n() != self.n() {
            return Err(Error::DimensionMismatch(s.n(), self.n()));
        }
        HyperSphere::from_vector(&self.matrix * s.vector())
    }
}

/// Reflection in a hypersphere: R_v(x) = x - 2 <x, v>_q v on lightlike
/// lifts. An involution that fixes exactly the points of the sphere.
pub fn sphere_reflection(s: &HyperSphere) -> MoebiusMap {
    let n = s.n();
    let form = MinkowskiForm::new(n).expect("sphere dimension already validated");
    let d = form.dim();
    let v = s.vector();
    let mut jv = v.clone();
    jv[d - 1] = -jv[d - 1];
    let matrix = DMatrix::identity(d, d) - 2.0 * v * jv.transpose();
    MoebiusMap { matrix, form }
}

/// The rotation of R^{n+1} (a Lorentz matrix fixing the time coordinate)
/// mapping p to q in their common plane and fixing its orthogonal
/// complement. Antipodal pairs rotate by pi in the plane spanned by p and
/// the coordinate axis with the smallest p-component.
pub fn rotation_between(p: &SpherePoint, q: &SpherePoint) -> Result<MoebiusMap> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch(p.n(), q.n()));
    }
    let n = p.n();
    let form = MinkowskiForm::new(n)?;
    let m = n + 1;
    let c = p.coords().dot(q.coords());

    let block: DMatrix<f64> = if c <= -1.0 + 1e-12 {
        let a = p.orthonormal_direction();
        DMatrix::identity(m, m)
            - 2.0 * p.coords() * p.coords().transpose()
            - 2.0 * &a * a.transpose()
    } else {
        let pq = p.coords() + q.coords();
        DMatrix::identity(m, m) - (&pq * pq.transpose()) / (1.0 + c)
            + 2.0 * q.coords() * p.coords().transpose()
    };

    let d = form.dim();
    let mut matrix = DMatrix::identity(d, d);
    matrix.view_mut((0, 0), (m, m)).copy_from(&block);
    Ok(MoebiusMap { matrix, form })
}

/// Lorentz boost along the axis through p: the hyperbolic rotation of the
/// (p, time) plane by parameter s. Geodesic angles theta from p transform by
/// tan(theta'/2) = exp(-s) tan(theta/2), so positive s shrinks caps
/// centered at p.
pub fn boost_along(p: &SpherePoint, s: f64) -> Result<MoebiusMap> {
    let n = p.n();
    let form = MinkowskiForm::new(n)?;
    let d = form.dim();
    let mut u = DVector::zeros(d);
    for i in 0..=n {
        u[i] = p.coords()[i];
    }
    let mut e = DVector::zeros(d);
    e[d - 1] = 1.0;
    let matrix = DMatrix::identity(d, d)
        + (s.cosh() - 1.0) * (&u * u.transpose() + &e * e.transpose())
        + s.sinh() * (&u * e.transpose() + &e * u.transpose());
    Ok(MoebiusMap { matrix, form })
}

/// Conformal factor of `boost_along(p, s)` at geodesic angle theta from p.
pub fn boost_factor(s: f64, theta: f64) -> f64 {
    1.0 / (s.cosh() + s.sinh() * theta.cos())
}

/// New geodesic angle from p after `boost_along(p, s)`.
pub fn boost_angle(s: f64, theta: f64) -> f64 {
    2.0 * ((-s).exp() * (theta / 2.0).tan()).atan()
}

/// A rotation aligning the centers followed by a boost along the target
/// axis adjusting the radius: maps the source cap onto the target cap.
pub fn cap_normalizer(source: &HyperSphere, target: &HyperSphere) -> Result<MoebiusMap> {
    if source.n() != target.n() {
        return Err(Error::DimensionMismatch(source.n(), target.n()));
    }
    let rot = rotation_between(source.center(), target.center())?;
    let s = ((source.radius() / 2.0).tan() / (target.radius() / 2.0).tan()).ln();
    let boost = boost_along(target.center(), s)?;
    boost.compose(&rot)
}

/// The generalized-sphere reflection of R^{n+1} (plus infinity) orthogonal
/// to S^n that restricts to the reflection in a given hypersphere of S^n.
/// For an equatorial sphere this is a hyperplane reflection; otherwise an
/// inversion in the Euclidean sphere with center p / cos(rho) and radius
/// |tan(rho)|, which satisfies |center|^2 = 1 + radius^2.
#[derive(Debug, Clone)]
pub enum AmbientReflection {
    Hyperplane { normal: DVector<f64> },
    Sphere { center: DVector<f64>, radius: f64 },
}

impl AmbientReflection {
    pub fn apply(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            AmbientReflection::Hyperplane { normal } => {
                y - 2.0 * normal.dot(y) * normal
            }
            AmbientReflection::Sphere { center, radius } => {
                let diff = y - center;
                center + radius * radius / diff.norm_squared() * diff
            }
        }
    }
}

pub fn orthogonal_extension_reflection(s: &HyperSphere) -> AmbientReflection {
    let cos_rho = s.radius().cos();
    if cos_rho.abs() < 1e-12 {
        AmbientReflection::Hyperplane {
            normal: s.center().coords().clone(),
        }
    } else {
        AmbientReflection::Sphere {
            center: s.center().coords() / cos_rho,
            radius: (s.radius().tan()).abs(),
        }
    }
}

/// Uniform random point of S^n (normalized Gaussian coordinates).
pub fn random_sphere_point<R: Rng>(n: usize, rng: &mut R) -> SpherePoint {
    loop {
        let coords: Vec<f64> = (0..=n)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u1.ln()).sqrt() * u2.cos()
            })
            .collect();
        let v = DVector::from_vec(coords);
        let norm = v.norm();
        if norm > 1e-6 {
            return SpherePoint::new(v / norm).expect("normalized");
        }
    }
}

/// Random hypersphere with radius bounded away from the degenerate ends.
pub fn random_hypersphere<R: Rng>(n: usize, rng: &mut R) -> HyperSphere {
    random_hypersphere_in(n, 0.2, std::f64::consts::PI - 0.2, rng)
}

pub fn random_hypersphere_in<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> HyperSphere {
    let center = random_sphere_point(n, rng);
    let radius = rng.gen_range(lo..hi);
    HyperSphere::new(center, radius).expect("radius in range")
}

/// Random composition of k reflections. Radii stay near pi/2 so that the
/// translation parts do not compound: matrix entries of long chains remain
/// bounded and the absolute Lorentz defect stays meaningful. A drifting
/// random walk of strong boosts grows entries exponentially, and the
/// defect cannot stay below entries^2 times machine epsilon no matter how
/// the chain is renormalized.
pub fn random_composition<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<MoebiusMap> {
    let mut map = MoebiusMap::identity(n)?;
    let half = std::f64::consts::FRAC_PI_2;
    for _ in 0..k {
        map = map.compose(&sphere_reflection(&random_hypersphere_in(
            n,
            half - 0.15,
            half + 0.15,
            rng,
        )))?;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn equator_reflection(n: usize) -> MoebiusMap {
        sphere_reflection(&HyperSphere::new(SpherePoint::north(n), PI / 2.0).unwrap())
    }

    #[test]
    fn equator_reflection_flips_last_coordinate() {
        let r = equator_reflection(2);
        let x = SpherePoint::from_slice(&[0.6, 0.0, 0.8]).unwrap();
        let (y, factor) = r.apply_sphere(&x).unwrap();
        assert_relative_eq!(y.coords()[0], 0.6, epsilon = 1e-14);
        assert_relative_eq!(y.coords()[2], -0.8, epsilon = 1e-14);
        // reflections in great spheres are isometries
        assert_relative_eq!(factor, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reflection_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let r = sphere_reflection(&random_hypersphere(n, &mut rng));
            let square = r.compose(&r).unwrap();
            let id = DMatrix::<f64>::identity(n + 2, n + 2);
            assert!((square.matrix() - id).amax() < tol::INVOLUTION_TOL);
        }
    }

    #[test]
    fn reflection_fixes_its_sphere() {
        // n = 2, cap of radius pi/3 about e_3: boundary points are fixed
        let s = HyperSphere::new(SpherePoint::axis(2, 2), PI / 3.0).unwrap();
        let r = sphere_reflection(&s);
        for k in 0..12 {
            let x = s.boundary_sample(0.5 * k as f64);
            let (y, _) = r.apply_sphere(&x).unwrap();
            assert!((y.coords() - x.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn compose_with_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_composition(3, 4, &mut rng).unwrap();
        let id = MoebiusMap::identity(3).unwrap();
        let left = a.compose(&id).unwrap();
        assert!((left.matrix() - a.matrix()).amax() < 1e-14);
    }

    #[test]
    fn concentric_reflections_fix_poles() {
        // reflections in two concentric spheres compose to a map fixing both
        // poles of the common axis
        let p = SpherePoint::axis(3, 0);
        let r1 = sphere_reflection(&HyperSphere::new(p.clone(), 0.7).unwrap());
        let r2 = sphere_reflection(&HyperSphere::new(p.clone(), 1.3).unwrap());
        let m = r1.compose(&r2).unwrap();
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((m.matrix() - id).amax() > 1e-3, "composition is nontrivial");
        for pole in [p.clone(), p.antipode()] {
            let (y, _) = m.apply_sphere(&pole).unwrap();
            assert!((y.coords() - pole.coords()).norm() < 1e-12);
        }
    }

    #[test]
    fn conformal_factor_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(2..=5);
            let a = random_composition(n, 3, &mut rng).unwrap();
            let b = random_composition(n, 3, &mut rng).unwrap();
            let x = random_sphere_point(n, &mut rng);
            let ab = a.compose(&b).unwrap();
            let (bx, lam_b) = b.apply_sphere(&x).unwrap();
            let (_, lam_a) = a.apply_sphere(&bx).unwrap();
            let (_, lam_ab) = ab.apply_sphere(&x).unwrap();
            assert_relative_eq!(lam_ab, lam_a * lam_b, epsilon = tol::ALGEBRAIC_TOL);
        }
    }

    #[test]
    fn ball_action_fixes_origin_under_equator_reflection() {
        let r = equator_reflection(3);
        let y = BallPoint::origin(3);
        let image = r.apply_ball(&y).unwrap();
        assert!(image.norm() < 1e-14);
    }

    #[test]
    fn ball_action_restricts_to_sphere_action() {
        // radial boundary limit: |apply_ball(y_k) - apply_sphere(x)| = O(1 - |y_k|)
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random_hypersphere(3, &mut rng);
        let r = sphere_reflection(&s);
        let x = random_sphere_point(3, &mut rng);
        let (target, _) = r.apply_sphere(&x).unwrap();
        let mut prev_err = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4] {
            let y = BallPoint::new(x.coords() * (1.0 - delta)).unwrap();
            let image = r.apply_ball(&y).unwrap();
            let err = (image.coords() - target.coords()).norm();
            assert!(err < 10.0 * delta, "error {err} not O(delta) at {delta}");
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn orthogonal_extension_equatorial_case() {
        let s = HyperSphere::new(SpherePoint::axis(2, 0), PI / 2.0).unwrap();
        match orthogonal_extension_reflection(&s) {
            AmbientReflection::Hyperplane { normal } => {
                assert!((normal - SpherePoint::axis(2, 0).coords()).norm() < 1e-15);
            }
            _ => panic!("expected hyperplane"),
        }
    }

    #[test]
    fn orthogonal_extension_quarter_cap() {
        // rho = pi/4 about e_{n+1}: center sqrt(2) e_{n+1}, radius 1,
        // orthogonality |c|^2 = 1 + r^2
        let s = HyperSphere::new(SpherePoint::north(3), PI / 4.0).unwrap();
        match orthogonal_extension_reflection(&s) {
            AmbientReflection::Sphere { center, radius } => {
                assert_relative_eq!(radius, 1.0, epsilon = 1e-14);
                assert_relative_eq!(center.norm(), 2.0_f64.sqrt(), epsilon = 1e-14);
                assert_relative_eq!(
                    center.norm_squared(),
                    1.0 + radius * radius,
                    epsilon = 1e-14
                );
            }
            _ => panic!("expected sphere"),
        }
    }

    #[test]
    fn ambient_reflection_agrees_with_ball_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let s = random_hypersphere(n, &mut rng);
            let lorentz = sphere_reflection(&s);
            let ambient = orthogonal_extension_reflection(&s);
            for _ in 0..50 {
                let dir = random_sphere_point(n, &mut rng);
                let radius: f64 = rng.gen_range(0.0..0.999);
                let y = BallPoint::new(dir.coords() * radius).unwrap();
                let via_lorentz = lorentz.apply_ball(&y).unwrap();
                let via_ambient = ambient.apply(y.coords());
                assert!(
                    (via_lorentz.coords() - &via_ambient).norm() < tol::ALGEBRAIC_TOL,
                    "constructions disagree"
                );
            }
        }
    }

    #[test]
    fn rotation_between_identity_case() {
        let p = SpherePoint::axis(3, 1);
        let r = rotation_between(&p, &p).unwrap();
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((r.matrix() - id).amax() < 1e-14);
    }

    #[test]
    fn rotation_is_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = SpherePoint::axis(2, 0);
        let q = SpherePoint::axis(2, 1);
        let r = rotation_between(&p, &q).unwrap();
        let (image, _) = r.apply_sphere(&p).unwrap();
        assert!((image.coords() - q.coords()).norm() < 1e-14);
        for _ in 0..20 {
            let x = random_sphere_point(2, &mut rng);
            let (_, factor) = r.apply_sphere(&x).unwrap();
            assert_relative_eq!(factor, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_between_antipodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.gen_range(2..=5);
            let p = random_sphere_point(n, &mut rng);
            let q = p.antipode();
            let r = rotation_between(&p, &q).unwrap();
            let (image, _) = r.apply_sphere(&p).unwrap();
            assert!((image.coords() - q.coords()).norm() < 1e-12);
            // orthogonal block
            let block = r.matrix().view((0, 0), (n + 1, n + 1)).into_owned();
            let gram = &block * block.transpose();
            assert!((gram - DMatrix::<f64>::identity(n + 1, n + 1)).amax() < 1e-12);
        }
    }

    #[test]
    fn boost_moves_angles_as_advertised() {
        let p = SpherePoint::north(3);
        let b = boost_along(&p, 0.8).unwrap();
        for theta in [0.3, 1.0, 2.0] {
            let x = p.latitude_representative(theta);
            let (y, factor) = b.apply_sphere(&x).unwrap();
            let expected = boost_angle(0.8, theta);
            assert_relative_eq!(p.angle_to(&y), expected, epsilon = 1e-12);
            assert_relative_eq!(factor, boost_factor(0.8, theta), epsilon = 1e-12);
        }
    }

    #[test]
    fn cap_normalizer_same_cap_preserves_boundary() {
        let s = HyperSphere::new(SpherePoint::axis(3, 2), 0.8).unwrap();
        let m = cap_normalizer(&s, &s).unwrap();
        for k in 0..20 {
            let x = s.boundary_sample(0.31 * k as f64);
            let (y, _) = m.apply_sphere(&x).unwrap();
            assert!(s.incidence(&y).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_normalizer_lands_source_boundary_on_target() {
        // D_{pi/6}(e_1) to the equatorial cap about N
        let source = HyperSphere::new(SpherePoint::axis(3, 0), PI / 6.0).unwrap();
        let target = HyperSphere::new(SpherePoint::north(3), PI / 2.0).unwrap();
        let m = cap_normalizer(&source, &target).unwrap();
        for k in 0..20 {
            let x = source.boundary_sample(0.31 * k as f64);
            let (y, _) = m.apply_sphere(&x).unwrap();
            assert!(
                target.incidence(&y).abs() < tol::ALGEBRAIC_TOL,
                "boundary sample missed the target boundary"
            );
        }
        // cap side is preserved: the source center lands inside the target
        let (c, _) = m.apply_sphere(source.center()).unwrap();
        assert!(target.incidence(&c) > 0.0);
    }

    #[test]
    fn cap_normalizer_radius_sweep() {
        let rho = PI / 3.0;
        let target = HyperSphere::new(SpherePoint::north(4), PI - rho).unwrap();
        for eps in [0.1, 0.5, 1.0] {
            let source = HyperSphere::new(SpherePoint::axis(4, 1), eps).unwrap();
            let m = cap_normalizer(&source, &target).unwrap();
            for k in 0..10 {
                let x = source.boundary_sample(0.63 * k as f64);
                let (y, _) = m.apply_sphere(&x).unwrap();
                assert!(target.incidence(&y).abs() < tol::ALGEBRAIC_TOL);
            }
        }
    }

    #[test]
    fn transform_sphere_matches_pointwise_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let map = random_composition(3, 4, &mut rng).unwrap();
        let s = random_hypersphere(3, &mut rng);
        let image = map.transform_sphere(&s).unwrap();
        for k in 0..15 {
            let x = s.boundary_sample(0.41 * k as f64);
            let (y, _) = map.apply_sphere(&x).unwrap();
            assert!(image.incidence(&y).abs() < 1e-10);
        }
        // interior stays interior
        let (c, _) = map.apply_sphere(s.center()).unwrap();
        assert!(image.incidence(&c) > 0.0);
    }

    #[test]
    fn long_chains_stay_lorentz() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let map = random_composition(4, 100, &mut rng).unwrap();
        assert!(map.lorentz_defect() <= tol::CHAIN_TOL);
    }
}
