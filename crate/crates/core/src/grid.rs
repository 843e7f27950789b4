//! Radial grids and positive factor fields over them.
//!
//! Every field in the toolkit is a function of one radial coordinate: the
//! geodesic angle from a pole of S^n, or the Euclidean radius on a ball.
//! The grid carries the background so that Laplacians, volume elements and
//! boundary data pick the right coefficients.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sphere::SpherePoint;
use crate::tol;

/// Minimum number of cells a grid must carry.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// Geodesic polar coordinates about a pole of S^n.
    SpherePolar { pole: SpherePoint },
    /// Euclidean radial coordinates on a ball in R^n.
    EuclideanRadial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    background: Background,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(n: usize, background: Background, nodes: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("dimension must be >= 2, got {n}")));
        }
        if nodes.len() < MIN_CELLS + 1 {
            return Err(Error::Grid(format!(
                "grid needs at least {} nodes, got {}",
                MIN_CELLS + 1,
                nodes.len()
            )));
        }
        if nodes[0] < 0.0 {
            return Err(Error::Grid(format!("first node {} is negative", nodes[0])));
        }
        for w in nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Grid("nodes are not strictly increasing".into()));
            }
        }
        if let Background::SpherePolar { .. } = background {
            let last = *nodes.last().unwrap();
            if last > std::f64::consts::PI - tol::POLE_GUARD {
                return Err(Error::Grid(format!(
                    "polar grid reaches {last}, too close to the antipodal pole"
                )));
            }
        }
        Ok(RadialGrid { n, background, nodes })
    }

    pub fn uniform_sphere(
        n: usize,
        pole: SpherePoint,
        theta_lo: f64,
        theta_hi: f64,
        cells: usize,
    ) -> Result<Self> {
        Self::from_nodes(
            n,
            Background::SpherePolar { pole },
            uniform_nodes(theta_lo, theta_hi, cells),
        )
    }

    pub fn uniform_euclidean(n: usize, r_lo: f64, r_hi: f64, cells: usize) -> Result<Self> {
        Self::from_nodes(
            n,
            Background::EuclideanRadial,
            uniform_nodes(r_lo, r_hi, cells),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.background, Background::SpherePolar { .. })
    }

    pub fn pole(&self) -> Option<&SpherePoint> {
        match &self.background {
            Background::SpherePolar { pole } => Some(pole),
            Background::EuclideanRadial => None,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn includes_origin(&self) -> bool {
        self.nodes[0] == 0.0
    }

    /// First-derivative coefficient of the radial Laplacian at a node:
    /// (n-1) cot(theta) on the sphere, (n-1)/r on flat background.
    fn drift_coefficient(&self, t: f64) -> f64 {
        let m = (self.n - 1) as f64;
        match self.background {
            Background::SpherePolar { .. } => m * t.cos() / t.sin(),
            Background::EuclideanRadial => m / t,
        }
    }

    /// Radial volume density (area constant not included).
    pub fn weight(&self, t: f64) -> f64 {
        let m = (self.n - 1) as i32;
        match self.background {
            Background::SpherePolar { .. } => t.sin().powi(m),
            Background::EuclideanRadial => t.powi(m),
        }
    }

    /// Antiderivative of the radial volume density.
    fn weight_antiderivative(&self, t: f64) -> f64 {
        match self.background {
            Background::SpherePolar { .. } => sin_power_antiderivative(self.n - 1, t),
            Background::EuclideanRadial => t.powi(self.n as i32) / self.n as f64,
        }
    }

    /// Exact volume of the control cell around each node (area constant not
    /// included). Cells are bounded by interval midpoints, clipped at the
    /// grid span.
    pub fn cell_volumes(&self) -> Vec<f64> {
        let nodes = &self.nodes;
        let len = nodes.len();
        let mut vols = Vec::with_capacity(len);
        for i in 0..len {
            let lo = if i == 0 { nodes[0] } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let hi = if i == len - 1 {
                nodes[len - 1]
            } else {
                0.5 * (nodes[i] + nodes[i + 1])
            };
            vols.push(self.weight_antiderivative(hi) - self.weight_antiderivative(lo));
        }
        vols
    }

    /// Surface area of the unit (n-1)-sphere, the angular factor of radial
    /// integrals over this grid.
    pub fn angular_area(&self) -> f64 {
        unit_sphere_area(self.n - 1)
    }
}

pub fn uniform_nodes(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let h = (b - a) / cells as f64;
    let mut nodes: Vec<f64> = (0..=cells).map(|i| a + h * i as f64).collect();
    // exact endpoints
    nodes[0] = a;
    *nodes.last_mut().unwrap() = b;
    nodes
}

/// S_m(t) = integral of sin^m over [0, t], by the power-reduction recursion.
pub fn sin_power_antiderivative(m: usize, t: f64) -> f64 {
    match m {
        0 => t,
        1 => 1.0 - t.cos(),
        _ => {
            let lower = sin_power_antiderivative(m - 2, t);
            (-t.cos() * t.sin().powi((m - 1) as i32) + (m - 1) as f64 * lower) / m as f64
        }
    }
}

/// Area of the unit m-sphere: 2 pi^{(m+1)/2} / Gamma((m+1)/2).
pub fn unit_sphere_area(m: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf((m + 1) as f64 / 2.0) / gamma_half_integer(m + 1)
}

/// Gamma(k/2) for positive integer k.
fn gamma_half_integer(k: usize) -> f64 {
    match k {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2),
    }
}

/// Fornberg weights: coefficients of the nodes `xs` approximating the
/// derivatives of order 0..=m at `x0`. Returns one row per derivative order.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0_f64; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Smooth,
    /// Lipschitz glue at the given node index; one-sided derivatives differ.
    LipschitzGlued(usize),
}

/// A positive conformal-factor field sampled on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    regularity: Regularity,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, regularity: Regularity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v <= 0.0)
        {
            return Err(Error::Grid(format!(
                "field values must be positive and finite; node {i} carries {v}"
            )));
        }
        if let Regularity::LipschitzGlued(k) = regularity {
            if k == 0 || k + 1 >= grid.len() {
                return Err(Error::Grid(format!(
                    "glue interface index {k} is not interior"
                )));
            }
        }
        Ok(RadialField { grid, values, regularity })
    }

    pub fn constant(grid: Arc<RadialGrid>, value: f64) -> Result<Self> {
        let len = grid.len();
        Self::new(grid, vec![value; len], Regularity::Smooth)
    }

    pub fn sample(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values, Regularity::Smooth)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundary_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &RadialField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation on the four nearest nodes. Glued fields
    /// interpolate on one side of the interface only, preserving the kink.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let nodes = self.grid.nodes();
        let len = nodes.len();
        let span = (nodes[0], nodes[len - 1]);
        let eps = 1e-12 * (1.0 + span.1.abs());
        if t < span.0 - eps || t > span.1 + eps {
            return Err(Error::OutsideDomain(t, span.0, span.1));
        }
        let t = t.clamp(span.0, span.1);

        // window bounds respecting a glue interface
        let (lo_limit, hi_limit) = match self.regularity {
            Regularity::Smooth => (0usize, len - 1),
            Regularity::LipschitzGlued(k) => {
                if t < nodes[k] {
                    (0, k)
                } else {
                    (k, len - 1)
                }
            }
        };

        let seg = nodes[lo_limit..=hi_limit].partition_point(|&x| x <= t) + lo_limit;
        let seg = seg.clamp(lo_limit + 1, hi_limit.max(lo_limit + 1));
        let window = 4.min(hi_limit - lo_limit + 1);
        let mut start = seg.saturating_sub(2).max(lo_limit);
        if start + window > hi_limit + 1 {
            start = hi_limit + 1 - window;
        }

        let xs = &nodes[start..start + window];
        let fs = &self.values[start..start + window];
        let mut acc = 0.0;
        for j in 0..window {
            let mut lj = 1.0;
            for i in 0..window {
                if i != j {
                    lj *= (t - xs[i]) / (xs[j] - xs[i]);
                }
            }
            acc += lj * fs[j];
        }
        Ok(acc)
    }
}

/// The radial Laplacian f'' + (n-1) cot(theta) f' (sphere) or
/// f'' + (n-1)/r f' (flat), with the regular limit n f''(0) at the origin.
///
/// Stencils come from Fornberg weights over six-node windows, with an even
/// mirror extension at an included origin; accuracy is fourth order on
/// uniform grids. Glued fields are rejected: the one-sided machinery of the
/// gluing module must be used instead.
pub fn laplacian_radial(field: &RadialField) -> Result<Vec<f64>> {
    if let Regularity::LipschitzGlued(_) = field.regularity() {
        return Err(Error::GluedFieldMisuse(
            "laplacian_radial expects a smooth field; glued fields need interface-aware handling"
                .into(),
        ));
    }
    let grid = field.grid();
    let nodes = grid.nodes();
    let values = field.values();
    let len = nodes.len();

    // even extension through the origin, when present
    const GHOSTS: usize = 3;
    let (xs, fs, offset) = if grid.includes_origin() {
        let mut xs = Vec::with_capacity(len + GHOSTS);
        let mut fs = Vec::with_capacity(len + GHOSTS);
        for j in (1..=GHOSTS).rev() {
            xs.push(-nodes[j]);
            fs.push(values[j]);
        }
        xs.extend_from_slice(nodes);
        fs.extend_from_slice(values);
        (xs, fs, GHOSTS)
    } else {
        (nodes.to_vec(), values.to_vec(), 0)
    };

    const WINDOW: usize = 6;
    let ext_len = xs.len();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let t = nodes[i];
        let center = i + offset;
        let mut start = center.saturating_sub(WINDOW / 2 - 1);
        if start + WINDOW > ext_len {
            start = ext_len - WINDOW;
        }
        let w = fd_weights(t, &xs[start..start + WINDOW], 2);
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for j in 0..WINDOW {
            d1 += w[1][j] * fs[start + j];
            d2 += w[2][j] * fs[start + j];
        }
        let lap = if t == 0.0 {
            grid.n() as f64 * d2
        } else {
            d2 + grid.drift_coefficient(t) * d1
        };
        out.push(lap);
    }
    Ok(out)
}

/// One-sided derivative at the first or last node over `points` nodes
/// (Fornberg weights, order `points - 1`).
pub fn one_sided_derivative(nodes: &[f64], values: &[f64], at_end: bool, points: usize) -> f64 {
    let len = nodes.len();
    assert!(len >= points && points >= 2);
    let (xs, fs, x0) = if at_end {
        (&nodes[len - points..], &values[len - points..], nodes[len - 1])
    } else {
        (&nodes[..points], &values[..points], nodes[0])
    };
    let w = fd_weights(x0, xs, 1);
    let mut d = 0.0;
    for j in 0..points {
        d += w[1][j] * fs[j];
    }
    d
}

/// Conservative-form radial Laplacian (1/omega)(omega f')' with midpoint
/// fluxes and exact cell volumes. Second order, and exactly self-adjoint
/// with respect to the cell-volume inner product on interior nodes, which
/// is what the distributional machinery and the monotone solver rely on.
/// Entries are control-volume averages; at the one or two nodes adjacent
/// to an included origin these deviate from point values at O(h) since the
/// volume weight varies on the cell scale there. Endpoint entries are zero
/// except at an included origin; callers own the boundary treatment.
pub fn flux_laplacian(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let (sub, diag, sup) = flux_coefficients(grid);
    let len = values.len();
    let mut out = vec![0.0; len];
    for i in 0..len - 1 {
        let lower = if i > 0 { sub[i] * values[i - 1] } else { 0.0 };
        out[i] = lower + diag[i] * values[i] + sup[i] * values[i + 1];
    }
    out
}

/// Tridiagonal coefficients of `flux_laplacian`:
/// (lap f)_i = sub_i f_{i-1} + diag_i f_i + sup_i f_{i+1}.
/// Row 0 is the origin control volume when the grid includes it, otherwise
/// zero; the last row is zero (Dirichlet data lives there).
pub fn flux_coefficients(grid: &RadialGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nodes = grid.nodes();
    let len = nodes.len();
    let vols = grid.cell_volumes();
    let mut sub = vec![0.0; len];
    let mut diag = vec![0.0; len];
    let mut sup = vec![0.0; len];
    for i in 1..len - 1 {
        let hm = nodes[i] - nodes[i - 1];
        let hp = nodes[i + 1] - nodes[i];
        let wm = grid.weight(nodes[i] - 0.5 * hm) / (hm * vols[i]);
        let wp = grid.weight(nodes[i] + 0.5 * hp) / (hp * vols[i]);
        sub[i] = wm;
        sup[i] = wp;
        diag[i] = -(wm + wp);
    }
    if grid.includes_origin() {
        let h = nodes[1] - nodes[0];
        let w = grid.weight(0.5 * h) / (h * vols[0]);
        diag[0] = -w;
        sup[0] = w;
    }
    (sub, diag, sup)
}

/// Geodesic angle between a sphere point and the grid pole.
pub fn angle_from_pole(grid: &RadialGrid, x: &SpherePoint) -> Result<f64> {
    match grid.background() {
        Background::SpherePolar { pole } => Ok(pole.angle_to(x)),
        Background::EuclideanRadial => Err(Error::Grid(
            "angle_from_pole needs a sphere-polar grid".into(),
        )),
    }
}

/// Lightlike lift helper used by modules acting on grid samples.
pub fn lift_to_cone(x: &SpherePoint) -> DVector<f64> {
    let m = x.coords().len();
    let mut v = DVector::zeros(m + 1);
    for i in 0..m {
        v[i] = x.coords()[i];
    }
    v[m] = 1.0;
    v
}
