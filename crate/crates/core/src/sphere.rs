//! Points of S^n and B^{n+1}, geodesic hyperspheres, stereographic projection.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::tol;

/// A point of the unit n-sphere, stored as a unit vector in R^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: DVector<f64>,
}

impl SpherePoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::InvalidPoint(format!(
                "sphere points need at least 3 coordinates, got {}",
                coords.len()
            )));
        }
        let norm = coords.norm();
        if (norm - 1.0).abs() > tol::POINT_TOL {
            return Err(Error::InvalidPoint(format!("|x| = {norm} is not 1")));
        }
        Ok(SpherePoint { coords: coords / norm })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// Sphere dimension n (ambient length is n + 1).
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// North pole e_{n+1}.
    pub fn north(n: usize) -> Self {
        let mut c = DVector::zeros(n + 1);
        c[n] = 1.0;
        SpherePoint { coords: c }
    }

    /// South pole -e_{n+1}.
    pub fn south(n: usize) -> Self {
        let mut c = DVector::zeros(n + 1);
        c[n] = -1.0;
        SpherePoint { coords: c }
    }

    /// i-th coordinate axis point e_{i+1}.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut c = DVector::zeros(n + 1);
        c[i] = 1.0;
        SpherePoint { coords: c }
    }

    pub fn antipode(&self) -> Self {
        SpherePoint { coords: -self.coords.clone() }
    }

    /// Geodesic distance (angle) to another point.
    pub fn angle_to(&self, other: &SpherePoint) -> f64 {
        self.coords.dot(&other.coords).clamp(-1.0, 1.0).acos()
    }

    /// A deterministic unit vector orthogonal to this point: the coordinate
    /// axis with the smallest component, Gram-Schmidt corrected.
    pub fn orthonormal_direction(&self) -> DVector<f64> {
        let mut k = 0;
        for i in 1..self.coords.len() {
            if self.coords[i].abs() < self.coords[k].abs() {
                k = i;
            }
        }
        let mut e = DVector::zeros(self.coords.len());
        e[k] = 1.0;
        let proj = self.coords[k];
        let v = e - self.coords.clone() * proj;
        let n = v.norm();
        v / n
    }

    /// Point at geodesic angle `theta` from this pole, along the fixed
    /// orthonormal direction. Radial fields are axisymmetric, so any
    /// direction represents the latitude sphere.
    pub fn latitude_representative(&self, theta: f64) -> SpherePoint {
        let e = self.orthonormal_direction();
        SpherePoint {
            coords: self.coords.clone() * theta.cos() + e * theta.sin(),
        }
    }
}

/// A point of the open unit ball B^{n+1} (the Poincaré extension domain).
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: DVector<f64>,
}

impl BallPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if norm >= 1.0 - 1e-14 {
            return Err(Error::InvalidPoint(format!("|y| = {norm} is not < 1")));
        }
        Ok(BallPoint { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn origin(n: usize) -> Self {
        BallPoint { coords: DVector::zeros(n + 1) }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

/// A geodesic hypersphere of S^n: the boundary of the cap of geodesic radius
/// `radius` about `center`. Encoded as the unit spacelike Minkowski vector
/// v = (p, cos rho) / sin rho, which is cached on construction.
///
/// A point x lies on the sphere iff <x, p> = cos rho, iff the lightlike lift
/// (x, 1) is q-orthogonal to v. The cap interior is the side with positive
/// q-inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSphere {
    center: SpherePoint,
    radius: f64,
    vector: DVector<f64>,
}

impl HyperSphere {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < std::f64::consts::PI) {
            return Err(Error::InvalidSphere(format!(
                "geodesic radius must lie in (0, pi), got {radius}"
            )));
        }
        let n = center.n();
        let mut v = DVector::zeros(n + 2);
        let s = radius.sin();
        for i in 0..=n {
            v[i] = center.coords()[i] / s;
        }
        v[n + 1] = radius.cos() / s;
        Ok(HyperSphere { center, radius, vector: v })
    }

    /// Rebuild a sphere from its spacelike vector (q(v) = 1). The decoding is
    /// unique: sin rho = 1/|v_space|, cos rho = v_time * sin rho.
    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        let n = v.len() - 2;
        let vt = v[n + 1];
        let space = v.rows(0, n + 1).into_owned();
        let space_norm = space.norm();
        if space_norm <= 0.0 {
            return Err(Error::InvalidSphere("vector has no space part".into()));
        }
        let sin_rho = 1.0 / space_norm;
        let cos_rho = vt * sin_rho;
        let radius = cos_rho.clamp(-1.0, 1.0).acos();
        let center = SpherePoint::new(space * sin_rho)?;
        HyperSphere::new(center, radius)
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    pub fn center(&self) -> &SpherePoint {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The cached unit spacelike vector.
    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    /// Signed incidence of a sphere point: <x, p> - cos rho. Zero on the
    /// sphere, positive inside the cap.
    pub fn incidence(&self, x: &SpherePoint) -> f64 {
        self.center.coords().dot(x.coords()) - self.radius.cos()
    }

    pub fn contains_on_boundary(&self, x: &SpherePoint, tolerance: f64) -> bool {
        self.incidence(x).abs() <= tolerance
    }

    /// The complementary cap: same sphere, opposite side.
    pub fn complement(&self) -> HyperSphere {
        HyperSphere::new(self.center.antipode(), std::f64::consts::PI - self.radius)
            .expect("complement radius stays in (0, pi)")
    }

    /// Geodesic balls have disjoint closures iff centers are further apart
    /// than the radius sum.
    pub fn disjoint_closures(&self, other: &HyperSphere, margin: f64) -> bool {
        self.center.angle_to(&other.center) > self.radius + other.radius + margin
    }

    /// A point on the boundary sphere, rotated by `phi` in the plane spanned
    /// by two fixed orthogonal directions. Used for boundary sampling.
    pub fn boundary_sample(&self, phi: f64) -> SpherePoint {
        let e1 = self.center.orthonormal_direction();
        // second direction orthogonal to both center and e1
        let c = self.center.coords();
        let mut k = 0;
        let mut best = f64::INFINITY;
        for i in 0..c.len() {
            let score = c[i].abs() + e1[i].abs();
            if score < best {
                best = score;
                k = i;
            }
        }
        let mut e2 = DVector::zeros(c.len());
        e2[k] = 1.0;
        let e2 = &e2 - c * c[k] - &e1 * e1[k];
        let e2 = &e2 / e2.norm();
        let dir = &e1 * phi.cos() + e2 * phi.sin();
        SpherePoint::new(c * self.radius.cos() + dir * self.radius.sin())
            .expect("boundary sample is unit")
    }
}

/// Stereographic projection from the north pole N = e_{n+1}:
/// pi(x) = (x_1, ..., x_n) / (1 - x_{n+1}). The south pole maps to the
/// origin and the cap boundary of radius rho about S maps to the Euclidean
/// sphere of radius tan(rho / 2).
pub fn stereographic(x: &SpherePoint) -> Result<DVector<f64>> {
    let n = x.n();
    let denom = 1.0 - x.coords()[n];
    if denom.abs() < 1e-13 {
        return Err(Error::ProjectionPole);
    }
    Ok(x.coords().rows(0, n).into_owned() / denom)
}

/// Inverse stereographic projection: z -> (2z, |z|^2 - 1) / (|z|^2 + 1).
pub fn stereographic_inverse(z: &DVector<f64>) -> SpherePoint {
    let n = z.len();
    let norm2 = z.norm_squared();
    let mut c = DVector::zeros(n + 1);
    for i in 0..n {
        c[i] = 2.0 * z[i] / (norm2 + 1.0);
    }
    c[n] = (norm2 - 1.0) / (norm2 + 1.0);
    SpherePoint { coords: c }
}

/// Euclidean radius of the stereographic image of the cap boundary of
/// geodesic radius rho about the south pole.
pub fn stereographic_cap_radius(rho: f64) -> f64 {
    (rho / 2.0).tan()
}
