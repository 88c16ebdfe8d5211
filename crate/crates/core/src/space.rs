//! Finite-dimensional inner-product spaces.
//!
//! Euclidean `R^d` uses unit weights. A discretized `L^2[0,1]` uses
//! trapezoidal quadrature weights on a uniform grid, so that
//! `<u, v> = sum_i w_i u_i v_i` approximates `int_0^1 u(t) v(t) dt`.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Result, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductSpace {
    weights: Array1<f64>,
    euclidean: bool,
}

impl InnerProductSpace {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            weights: Array1::ones(dim),
            euclidean: true,
        }
    }

    /// Arbitrary positive quadrature weights.
    pub fn weighted(weights: Array1<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SolverError::InvalidParameter("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(SolverError::InvalidParameter(format!(
                "quadrature weight {w} is not strictly positive"
            )));
        }
        Ok(Self {
            weights,
            euclidean: false,
        })
    }

    /// Trapezoidal rule on `n` uniform nodes of `[0, 1]`; weights sum to 1.
    pub fn trapezoidal_unit_interval(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(SolverError::InvalidParameter(format!(
                "trapezoidal grid needs at least 3 nodes, got {n}"
            )));
        }
        let h = 1.0 / (n - 1) as f64;
        let mut w = Array1::from_elem(n, h);
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        Self::weighted(w)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn is_euclidean(&self) -> bool {
        self.euclidean
    }

    pub fn dot(&self, u: &ArrayView1<f64>, v: &ArrayView1<f64>) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        debug_assert_eq!(v.len(), self.dim());
        if self.euclidean {
            u.dot(v)
        } else {
            Zip::from(&self.weights)
                .and(u)
                .and(v)
                .fold(0.0, |acc, &w, &a, &b| acc + w * a * b)
        }
    }

    pub fn norm_sq(&self, u: &ArrayView1<f64>) -> f64 {
        self.dot(u, u)
    }

    pub fn norm(&self, u: &ArrayView1<f64>) -> f64 {
        self.norm_sq(u).sqrt()
    }

    pub fn dist(&self, u: &ArrayView1<f64>, v: &ArrayView1<f64>) -> f64 {
        let d = u - v;
        self.norm(&d.view())
    }

    pub fn check(&self, u: &ArrayView1<f64>) -> Result<()> {
        crate::error::check_dim(self.dim(), u.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn trapezoid_weights_sum_to_one() {
        let s = InnerProductSpace::trapezoidal_unit_interval(1001).unwrap();
        let total: f64 = s.weights().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(InnerProductSpace::trapezoidal_unit_interval(2).is_err());
    }

    #[test]
    fn trapezoid_integrates_polynomials() {
        let n = 1001;
        let s = InnerProductSpace::trapezoidal_unit_interval(n).unwrap();
        let t = Array1::linspace(0.0, 1.0, n);
        // int_0^1 t * t dt = 1/3, trapezoid error h^2/6
        let ip = s.dot(&t.view(), &t.view());
        assert!((ip - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(InnerProductSpace::weighted(array![1.0, 0.0]).is_err());
        assert!(InnerProductSpace::weighted(array![1.0, -2.0]).is_err());
    }

    #[test]
    fn weighted_dot_is_symmetric_positive() {
        let s = InnerProductSpace::weighted(array![0.5, 2.0, 1.5]).unwrap();
        let u = array![1.0, -2.0, 0.5];
        let v = array![0.3, 0.1, -4.0];
        assert_eq!(s.dot(&u.view(), &v.view()), s.dot(&v.view(), &u.view()));
        assert!(s.norm_sq(&u.view()) > 0.0);
        assert_eq!(s.norm(&array![0.0, 0.0, 0.0].view()), 0.0);
    }
}
