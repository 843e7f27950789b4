//! The Minkowski quadratic form on R^{n+2} and Lorentz-matrix utilities.
//!
//! The unit n-sphere is modelled on the future light cone of the form
//! q(x) = x_1^2 + ... + x_{n+1}^2 - x_{n+2}^2 (signature (n+1, 1)); the last
//! coordinate is the time coordinate. Conformal transformations of S^n are
//! the Lorentz matrices that preserve q and the future cone, so group
//! operations reduce to matrix algebra against this form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The quadratic form of signature (n+1, 1) on (n+2)-vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinkowskiForm {
    n: usize,
}

impl MinkowskiForm {
    /// Form for the n-sphere, n >= 2.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("sphere dimension must be >= 2, got {n}")));
        }
        Ok(MinkowskiForm { n })
    }

    pub fn sphere_dim(&self) -> usize {
        self.n
    }

    /// Ambient dimension n + 2.
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Index of the time coordinate.
    pub fn time_index(&self) -> usize {
        self.n + 1
    }

    /// q(v) = |v_space|^2 - v_time^2, evaluated exactly as stated.
    pub fn q(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v)
    }

    /// The associated bilinear form <u, v>_q.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(v.len(), self.dim());
        let t = self.time_index();
        let mut s = 0.0;
        for i in 0..t {
            s += u[i] * v[i];
        }
        s - u[t] * v[t]
    }

    /// J = diag(1, ..., 1, -1).
    pub fn j_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut j = DMatrix::identity(d, d);
        j[(d - 1, d - 1)] = -1.0;
        j
    }

    /// Max-norm of A^T J A - J.
    pub fn lorentz_defect(&self, a: &DMatrix<f64>) -> f64 {
        let j = self.j_matrix();
        let m = a.transpose() * &j * a - j;
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Whether A preserves the future cone. For a Lorentz matrix this is
    /// equivalent to a positive time-time entry.
    pub fn is_future_preserving(&self, a: &DMatrix<f64>) -> bool {
        let t = self.time_index();
        a[(t, t)] > 0.0
    }

    /// Project a slightly drifted matrix back onto the Lorentz group by the
    /// Newton iteration A <- A (I - E/2), E = J A^T J A - I, which squares
    /// the defect per step. Basis-free, so it stays stable on matrices with
    /// near-lightlike columns where a Gram-Schmidt sweep cancels badly.
    pub fn reorthogonalize(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let j = self.j_matrix();
        let id = DMatrix::<f64>::identity(d, d);
        let mut x = a.clone();
        let mut defect = self.lorentz_defect(&x);
        if !(defect < 0.1) {
            return Err(Error::NotLorentz(format!(
                "defect {defect:.3e} too large to re-orthogonalize"
            )));
        }
        for _ in 0..6 {
            if defect < 1e-15 {
                break;
            }
            let e = &j * x.transpose() * &j * &x - &id;
            let candidate = &x * (&id - 0.5 * e);
            let next = self.lorentz_defect(&candidate);
            if next >= defect {
                break;
            }
            x = candidate;
            defect = next;
        }
        Ok(x)
    }
}
