//! Test integrands with known integrals against `N(0, I)`.

use nalgebra::DMatrix;

use crate::linalg::dot;
use crate::measure::GaussianMeasure;
use crate::proposals::Integrand;

/// `G(z) = exp(a^T z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpLinear {
    pub a: Vec<f64>,
}

impl ExpLinear {
    pub fn new(a: Vec<f64>) -> Self {
        Self { a }
    }

    /// `exp(a^T mu0 + a^T Sigma0 a / 2)`.
    pub fn exact(&self, base: &GaussianMeasure) -> f64 {
        let a = nalgebra::DVector::from_column_slice(&self.a);
        (a.dot(base.mu0()) + 0.5 * (a.transpose() * base.sigma0() * &a)[(0, 0)]).exp()
    }
}

impl Integrand for ExpLinear {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        dot(&self.a, z)
    }

    fn grad_log_g(&self, _z: &[f64]) -> Option<Vec<f64>> {
        Some(self.a.clone())
    }

    fn hess_log_g(&self, _z: &[f64]) -> Option<DMatrix<f64>> {
        let d = self.a.len();
        Some(DMatrix::zeros(d, d))
    }
}

/// `G = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
}

impl Integrand for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_log_g(&self, _z: &[f64]) -> f64 {
        0.0
    }

    fn grad_log_g(&self, _z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }

    fn hess_log_g(&self, _z: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim, self.dim))
    }
}

/// Signed `G(z) = z` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Identity1;

impl Integrand for Identity1 {
    fn dim(&self) -> usize {
        1
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        z[0].abs().ln()
    }

    fn eval_g(&self, z: &[f64]) -> f64 {
        z[0]
    }

    fn is_signed(&self) -> bool {
        true
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0 / z[0]])
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, -1.0 / (z[0] * z[0])))
    }
}

/// Signed `G(z) = z^3 - z` in one dimension; derivatives are of `log |G|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CubicMinusLinear;

impl Integrand for CubicMinusLinear {
    fn dim(&self) -> usize {
        1
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        self.eval_g(z).abs().ln()
    }

    fn eval_g(&self, z: &[f64]) -> f64 {
        let x = z[0];
        x * x * x - x
    }

    fn is_signed(&self) -> bool {
        true
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        let x = z[0];
        Some(vec![(3.0 * x * x - 1.0) / (x * x * x - x)])
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let x = z[0];
        let g = x * x * x - x;
        let g1 = 3.0 * x * x - 1.0;
        Some(DMatrix::from_element(
            1,
            1,
            (6.0 * x * g - g1 * g1) / (g * g),
        ))
    }
}
