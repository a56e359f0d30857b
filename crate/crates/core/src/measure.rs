//! Gaussian base measures, Gaussian and Student-t proposals, log-space
//! likelihood ratios and the eigenvalue check on `L^T Sigma0^-1 L`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricEigen};
use crate::transforms::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The measure `N(mu0, Sigma0)` an integral is taken against.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
    sigma0_inv: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det_sigma0: f64,
}

impl GaussianMeasure {
    pub fn new(mu0: DVector<f64>, sigma0: DMatrix<f64>) -> Result<Self> {
        if sigma0.nrows() != mu0.len() {
            return Err(Error::Argument(format!(
                "mean has length {} but covariance is {}x{}",
                mu0.len(),
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        linalg::check_symmetric(&sigma0, 1e-12)?;
        let chol = linalg::cholesky(&sigma0)?;
        let sigma0_inv = linalg::spd_inverse_from_cholesky(&chol);
        let log_det_sigma0 = linalg::log_det_from_cholesky(&chol);
        Ok(Self {
            mu0,
            sigma0,
            sigma0_inv,
            chol,
            log_det_sigma0,
        })
    }

    /// `N(0, I_d)`.
    pub fn standard(d: usize) -> Self {
        Self::new(DVector::zeros(d), DMatrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn sigma0_inv(&self) -> &DMatrix<f64> {
        &self.sigma0_inv
    }

    /// Lower Cholesky factor of `Sigma0`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det_sigma0(&self) -> f64 {
        self.log_det_sigma0
    }

    /// `(x - mu0)^T Sigma0^-1 (x - mu0)` for the displacement `r = x - mu0`.
    pub(crate) fn mahalanobis_sq(&self, r: &mut [f64]) -> f64 {
        linalg::solve_lower_in_place(&self.chol, r);
        r.iter().map(|v| v * v).sum()
    }

    /// `log p(x; mu0, Sigma0)`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = x.iter().zip(self.mu0.iter()).map(|(a, b)| a - b).collect();
        let q = self.mahalanobis_sq(&mut r);
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det_sigma0 + q)
    }
}

/// Proposal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    StudentT { nu: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT { .. } => "student_t",
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match self {
            Family::Gaussian => None,
            Family::StudentT { nu } => Some(*nu),
        }
    }
}

/// An importance sampling proposal `mu + L x`, with `x` standard normal or
/// standard multivariate t.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    family: Family,
    mu: DVector<f64>,
    root_l: DMatrix<f64>,
    log_det_sigma: f64,
}

impl Proposal {
    pub fn gaussian(mu: DVector<f64>, root_l: DMatrix<f64>) -> Result<Self> {
        Self::new(Family::Gaussian, mu, root_l)
    }

    pub fn student_t(mu: DVector<f64>, root_l: DMatrix<f64>, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Argument(format!(
                "degrees of freedom must be positive, got {nu}"
            )));
        }
        Self::new(Family::StudentT { nu }, mu, root_l)
    }

    pub fn new(family: Family, mu: DVector<f64>, root_l: DMatrix<f64>) -> Result<Self> {
        if !root_l.is_square() || root_l.nrows() != mu.len() {
            return Err(Error::Argument(format!(
                "root is {}x{} for a mean of length {}",
                root_l.nrows(),
                root_l.ncols(),
                mu.len()
            )));
        }
        if root_l.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Argument("proposal has non-finite entries".into()));
        }
        let det = root_l.clone().lu().determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Singular(format!(
                "proposal root has determinant {det}"
            )));
        }
        Ok(Self {
            family,
            mu,
            root_l,
            log_det_sigma: 2.0 * det.abs().ln(),
        })
    }

    /// Same centre and scale with another family.
    pub fn with_family(&self, family: Family) -> Result<Self> {
        Self::new(family, self.mu.clone(), self.root_l.clone())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn root_l(&self) -> &DMatrix<f64> {
        &self.root_l
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        &self.root_l * self.root_l.transpose()
    }

    pub fn log_det_sigma(&self) -> f64 {
        self.log_det_sigma
    }

    /// Number of uniform inputs one sample consumes.
    pub fn input_dim(&self) -> usize {
        match self.family {
            Family::Gaussian => self.dim(),
            Family::StudentT { .. } => self.dim() + 1,
        }
    }

    /// `mu + L x` into `out`.
    pub(crate) fn locate_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = self.mu[i]
                + x.iter()
                    .enumerate()
                    .map(|(j, &xj)| self.root_l[(i, j)] * xj)
                    .sum::<f64>();
        }
    }

    pub fn locate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.locate_into(x, &mut out);
        out
    }

    /// `log c_{mu,Sigma,nu}` of the multivariate t density.
    pub fn log_t_normalizer(&self, nu: f64) -> f64 {
        let d = self.dim() as f64;
        ln_gamma(0.5 * (nu + d))
            - ln_gamma(0.5 * nu)
            - 0.5 * self.log_det_sigma
            - 0.5 * d * (nu * PI).ln()
    }
}

/// Square-root method for a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootMethod {
    #[default]
    Cholesky,
    Spectral,
}

/// `L` with `L L^T = sigma`: lower-triangular (Cholesky) or the symmetric
/// PSD root (spectral).
pub fn root_from_cov(sigma: &DMatrix<f64>, method: RootMethod) -> Result<DMatrix<f64>> {
    linalg::check_symmetric(sigma, 1e-12)?;
    match method {
        RootMethod::Cholesky => linalg::cholesky(sigma),
        RootMethod::Spectral => {
            let SymmetricEigen { values, vectors } = linalg::jacobi_eigen(sigma)?;
            if let Some((pivot, &value)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                return Err(Error::NotPositiveDefinite { pivot, value });
            }
            let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
                vectors[(r, c)] * values[c].sqrt()
            });
            Ok(linalg::symmetrize(&(scaled * vectors.transpose())))
        }
    }
}

fn check_lengths(z: &[f64], prop: &Proposal, base: &GaussianMeasure) -> Result<()> {
    if z.len() != prop.dim() || base.dim() != prop.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: point {}, proposal {}, base {}",
            z.len(),
            prop.dim(),
            base.dim()
        )));
    }
    Ok(())
}

/// `log W(z)` for a Gaussian proposal.
pub fn log_lr_gaussian(z: &[f64], prop: &Proposal, base: &GaussianMeasure) -> Result<f64> {
    check_lengths(z, prop, base)?;
    if prop.family != Family::Gaussian {
        return Err(Error::Argument(
            "log_lr_gaussian needs a gaussian proposal".into(),
        ));
    }
    let mut r = vec![0.0; z.len()];
    Ok(log_lr_gaussian_raw(z, prop, base, &mut r))
}

pub(crate) fn log_lr_gaussian_raw(
    z: &[f64],
    prop: &Proposal,
    base: &GaussianMeasure,
    scratch: &mut [f64],
) -> f64 {
    prop.locate_into(z, scratch);
    for (ri, m0) in scratch.iter_mut().zip(base.mu0.iter()) {
        *ri -= m0;
    }
    let q = base.mahalanobis_sq(scratch);
    let zz: f64 = z.iter().map(|v| v * v).sum();
    0.5 * (prop.log_det_sigma - base.log_det_sigma0) + 0.5 * zz - 0.5 * q
}

/// `log[p(mu + L x; mu0, Sigma0) / q(mu + L x; mu, Sigma, nu)]` for a t proposal.
pub fn log_lr_t(x: &[f64], prop: &Proposal, base: &GaussianMeasure) -> Result<f64> {
    check_lengths(x, prop, base)?;
    let Family::StudentT { nu } = prop.family else {
        return Err(Error::Argument(
            "log_lr_t needs a student_t proposal".into(),
        ));
    };
    let mut r = vec![0.0; x.len()];
    Ok(log_lr_t_raw(
        x,
        nu,
        prop.log_t_normalizer(nu),
        prop,
        base,
        &mut r,
    ))
}

pub(crate) fn log_lr_t_raw(
    x: &[f64],
    nu: f64,
    log_c: f64,
    prop: &Proposal,
    base: &GaussianMeasure,
    scratch: &mut [f64],
) -> f64 {
    let d = x.len() as f64;
    prop.locate_into(x, scratch);
    for (ri, m0) in scratch.iter_mut().zip(base.mu0.iter()) {
        *ri -= m0;
    }
    let q = base.mahalanobis_sq(scratch);
    let log_p = -0.5 * (d * LN_2PI + base.log_det_sigma0 + q);
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let log_q = log_c - 0.5 * (nu + d) * (xx / nu).ln_1p();
    log_p - log_q
}

/// Spectrum of `L^T Sigma0^-1 L` and the verdict of the `>= 1` check.
#[derive(Debug, Clone, PartialEq)]
pub struct BgcDiagnostic {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub passes: bool,
    pub tol: f64,
}

impl BgcDiagnostic {
    pub const DEFAULT_TOL: f64 = 1e-10;

    /// Eigenvalues `1 - eig` of `C = I - L^T Sigma0^-1 L`, descending.
    pub fn growth_spectrum(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| 1.0 - e).collect()
    }
}

/// Eigenvalues of `L^T Sigma0^-1 L`. The likelihood ratio meets the
/// QMC-friendly growth condition iff all of them are `>= 1`.
pub fn bgc_eigen_diagnostic(
    l: &DMatrix<f64>,
    base: &GaussianMeasure,
    tol: f64,
) -> Result<BgcDiagnostic> {
    if !l.is_square() || l.nrows() != base.dim() {
        return Err(Error::Argument(format!(
            "root is {}x{} for a {}-dimensional base",
            l.nrows(),
            l.ncols(),
            base.dim()
        )));
    }
    let det = l.clone().lu().determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular(format!("root has determinant {det}")));
    }
    let b = linalg::solve_lower_matrix(base.cholesky(), l);
    let m = b.transpose() * &b;
    let eigen = linalg::jacobi_eigen(&linalg::symmetrize(&m))?;
    let min_eig = eigen.values[0];
    if !(min_eig > 0.0) {
        return Err(Error::Singular(format!(
            "L^T Sigma0^-1 L has eigenvalue {min_eig:e}"
        )));
    }
    Ok(BgcDiagnostic {
        passes: min_eig >= 1.0 - tol,
        eigenvalues: eigen.values,
        min_eig,
        tol,
    })
}

/// `L U` for orthogonal `U`; leaves `L L^T` unchanged.
pub fn rotate_root(l: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !u.is_square() || u.nrows() != l.ncols() {
        return Err(Error::Argument(format!(
            "rotation is {}x{} for a root with {} columns",
            u.nrows(),
            u.ncols(),
            l.ncols()
        )));
    }
    let defect = linalg::orthogonality_defect(u);
    if !(defect <= 1e-10) {
        return Err(Error::Argument(format!(
            "matrix is not orthogonal: max |U^T U - I| = {defect:e}"
        )));
    }
    Ok(l * u)
}
