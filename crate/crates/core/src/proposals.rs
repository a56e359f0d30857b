//! Integrand interface, Newton mode search and the ODIS / LapIS / PriorIS
//! proposal builders.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{root_from_cov, Family, GaussianMeasure, Proposal, RootMethod};

/// An integrand `G` on `R^d` with optional derivatives of `log G`.
///
/// `eval_log_g` may return `-inf` where `G = 0`. Signed integrands return
/// `log |G|` there and report the sign through `eval_g`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    fn eval_log_g(&self, z: &[f64]) -> f64;

    fn eval_g(&self, z: &[f64]) -> f64 {
        self.eval_log_g(z).exp()
    }

    /// Whether `G` can be negative, in which case estimators use `eval_g`.
    fn is_signed(&self) -> bool {
        false
    }

    fn grad_log_g(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn hess_log_g(&self, _z: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

type LogFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Box<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// An [`Integrand`] assembled from closures.
pub struct FnIntegrand {
    dim: usize,
    log_g: LogFn,
    g: Option<LogFn>,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
}

impl FnIntegrand {
    pub fn new(dim: usize, log_g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            log_g: Box::new(log_g),
            g: None,
            grad: None,
            hess: None,
        }
    }

    /// Overrides `G` itself, for signed integrands.
    pub fn with_g(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.g = Some(Box::new(g));
        self
    }

    pub fn with_grad(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    pub fn with_hess(
        mut self,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Box::new(hess));
        self
    }
}

impl fmt::Debug for FnIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnIntegrand")
            .field("dim", &self.dim)
            .field("signed", &self.g.is_some())
            .field("grad", &self.grad.is_some())
            .field("hess", &self.hess.is_some())
            .finish()
    }
}

impl Integrand for FnIntegrand {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        (self.log_g)(z)
    }

    fn eval_g(&self, z: &[f64]) -> f64 {
        match &self.g {
            Some(g) => g(z),
            None => (self.log_g)(z).exp(),
        }
    }

    fn is_signed(&self) -> bool {
        self.g.is_some()
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(z))
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        self.hess.as_ref().map(|h| h(z))
    }
}

/// Settings for [`find_mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOptions {
    /// Sup-norm tolerance on the gradient of `H`.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; the base mean when `None`.
    pub init: Option<Vec<f64>>,
}

impl Default for ModeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub mu_star: Vec<f64>,
    /// `H(mu_star)` including the Gaussian normalizing constant.
    pub h_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// `grad_norm <= tol`, or a Newton stall whose predicted gain is below
    /// the rounding level of `H`.
    pub converged: bool,
}

struct Objective<'a, F: Integrand + ?Sized> {
    f: &'a F,
    base: &'a GaussianMeasure,
}

impl<F: Integrand + ?Sized> Objective<'_, F> {
    fn value(&self, z: &[f64]) -> f64 {
        self.f.eval_log_g(z) + self.base.log_density(z)
    }

    fn grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut g = self
            .f
            .grad_log_g(z)
            .ok_or(Error::MissingDerivative("gradient of log G"))?;
        let r = DVector::from_iterator(
            z.len(),
            z.iter().zip(self.base.mu0().iter()).map(|(a, b)| a - b),
        );
        let pr = self.base.sigma0_inv() * r;
        for (gi, p) in g.iter_mut().zip(pr.iter()) {
            *gi -= p;
        }
        Ok(g)
    }

    /// `-Hess H = Sigma0^-1 - Hess log G`.
    fn neg_hess(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let h = self
            .f
            .hess_log_g(z)
            .ok_or(Error::MissingDerivative("Hessian of log G"))?;
        Ok(linalg::symmetrize(&(self.base.sigma0_inv() - h)))
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes `H(z) = log G(z) + log p(z; mu0, Sigma0)` by damped Newton.
///
/// Falls back to a `Sigma0`-preconditioned gradient step when the Newton
/// direction is unavailable or not an ascent direction.
pub fn find_mode<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    opts: &ModeOptions,
) -> Result<ModeResult> {
    let d = base.dim();
    if f.dim() != d {
        return Err(Error::Argument(format!(
            "integrand has dimension {} but the base has {d}",
            f.dim()
        )));
    }
    let mut z = match &opts.init {
        Some(init) if init.len() != d => {
            return Err(Error::Argument(format!(
                "initial point has length {}, expected {d}",
                init.len()
            )));
        }
        Some(init) => init.clone(),
        None => base.mu0().as_slice().to_vec(),
    };
    let obj = Objective { f, base };
    let mut h = obj.value(&z);
    if !h.is_finite() {
        return Err(Error::Domain(format!(
            "log G + log p is {h} at the initial point {z:?}; choose another starting point"
        )));
    }
    let mut grad = obj.grad(&z)?;
    let mut iterations = 0;
    let mut at_rounding_floor = false;
    while iterations < opts.max_iter {
        if sup_norm(&grad) <= opts.tol {
            break;
        }
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let newton = linalg::cholesky(&obj.neg_hess(&z)?).ok().map(|l| {
            let mut step = grad.clone();
            linalg::solve_lower_in_place(&l, &mut step);
            linalg::solve_upper_transposed_in_place(&l, &mut step);
            step
        });
        let (dir, is_newton) = match newton {
            Some(step) if linalg::dot(&step, &grad) > 0.0 => (step, true),
            _ => ((base.sigma0() * &g).as_slice().to_vec(), false),
        };
        let slope = linalg::dot(&dir, &grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let ht = obj.value(&trial);
            if ht.is_finite() && ht >= h + 1e-4 * t * slope {
                accepted = Some((trial, ht));
                break;
            }
            t *= 0.5;
        }
        let stalled = match &accepted {
            None => true,
            Some((trial, _)) => *trial == z,
        };
        if stalled {
            // The Newton decrement `slope` is twice the predicted gain in H.
            // Below the rounding level of H no step can make progress.
            at_rounding_floor = is_newton && slope <= 1e-13 * h.abs().max(1.0);
            break;
        }
        let (trial, ht) = accepted.expect("checked above");
        z = trial;
        h = ht;
        grad = obj.grad(&z)?;
    }
    let grad_norm = sup_norm(&grad);
    Ok(ModeResult {
        mu_star: z,
        h_value: h,
        grad_norm,
        iterations,
        converged: grad_norm <= opts.tol || at_rounding_floor,
    })
}

/// `Sigma_star = (Sigma0^-1 - Hess log G(mu_star))^-1`.
pub fn laplace_cov<F: Integrand + ?Sized>(
    f: &F,
    mu_star: &[f64],
    base: &GaussianMeasure,
) -> Result<DMatrix<f64>> {
    if mu_star.len() != base.dim() {
        return Err(Error::Argument(format!(
            "mode has length {}, expected {}",
            mu_star.len(),
            base.dim()
        )));
    }
    let a = Objective { f, base }.neg_hess(mu_star)?;
    match linalg::cholesky(&a) {
        Ok(l) => Ok(linalg::spd_inverse_from_cholesky(&l)),
        Err(_) => {
            let eigenvalue = linalg::jacobi_eigen(&a)
                .map(|e| e.values[0])
                .unwrap_or(f64::NAN);
            Err(Error::DegenerateCurvature { eigenvalue })
        }
    }
}

fn converged_mode<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    opts: &ModeOptions,
) -> Result<ModeResult> {
    let mode = find_mode(f, base, opts)?;
    if !mode.converged {
        return Err(Error::NonConvergence {
            iterations: mode.iterations,
            grad_norm: mode.grad_norm,
        });
    }
    Ok(mode)
}

/// `N(mu_star, Sigma0)`.
pub fn build_odis<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    opts: &ModeOptions,
) -> Result<Proposal> {
    let mode = converged_mode(f, base, opts)?;
    Proposal::gaussian(DVector::from_vec(mode.mu_star), base.cholesky().clone())
}

/// `N(mu_star, Sigma_star)` with a Cholesky root.
pub fn build_laplace<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    opts: &ModeOptions,
) -> Result<Proposal> {
    build_laplace_with(f, base, opts, RootMethod::Cholesky)
}

pub fn build_laplace_with<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    opts: &ModeOptions,
    root: RootMethod,
) -> Result<Proposal> {
    let mode = converged_mode(f, base, opts)?;
    let sigma = laplace_cov(f, &mode.mu_star, base)?;
    Proposal::gaussian(
        DVector::from_vec(mode.mu_star),
        root_from_cov(&sigma, root)?,
    )
}

/// The base measure itself; the likelihood ratio is identically one.
pub fn build_prior(base: &GaussianMeasure) -> Proposal {
    Proposal::gaussian(base.mu0().clone(), base.cholesky().clone())
        .expect("base Cholesky factor is nonsingular")
}

/// Proposal construction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    PriorIs,
    Odis,
    LapIs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::PriorIs, Method::Odis, Method::LapIs];

    pub fn name(&self) -> &'static str {
        match self {
            Method::PriorIs => "prioris",
            Method::Odis => "odis",
            Method::LapIs => "lapis",
        }
    }

    /// Builds the proposal of this rule in the given family.
    pub fn build<F: Integrand + ?Sized>(
        &self,
        f: &F,
        base: &GaussianMeasure,
        opts: &ModeOptions,
        family: Family,
    ) -> Result<Proposal> {
        let gaussian = match self {
            Method::PriorIs => build_prior(base),
            Method::Odis => build_odis(f, base, opts)?,
            Method::LapIs => build_laplace(f, base, opts)?,
        };
        match family {
            Family::Gaussian => Ok(gaussian),
            t => gaussian.with_family(t),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prioris" | "prior" => Ok(Method::PriorIs),
            "odis" => Ok(Method::Odis),
            "lapis" | "laplace" => Ok(Method::LapIs),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected prioris, odis or lapis)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_linear(a: Vec<f64>) -> FnIntegrand {
        let d = a.len();
        let a1 = a.clone();
        let a2 = a.clone();
        FnIntegrand::new(d, move |z| linalg::dot(&a1, z))
            .with_grad(move |_| a2.clone())
            .with_hess(move |_| DMatrix::zeros(d, d))
    }

    #[test]
    fn quadratic_mode_in_one_step() {
        let f = exp_linear(vec![0.5, -1.0, 2.0]);
        let base = GaussianMeasure::standard(3);
        let m = find_mode(&f, &base, &ModeOptions::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.iterations, 1);
        for (got, want) in m.mu_star.iter().zip([0.5, -1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let s = laplace_cov(&f, &m.mu_star, &base).unwrap();
        assert!((s - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn missing_derivatives_are_reported() {
        let f = FnIntegrand::new(1, |z| -z[0] * z[0]);
        let base = GaussianMeasure::standard(1);
        assert!(matches!(
            find_mode(&f, &base, &ModeOptions::default()),
            Err(Error::MissingDerivative(_))
        ));
    }

    #[test]
    fn iteration_cap_is_not_an_error() {
        let f = FnIntegrand::new(1, |z| (z[0] - 3.0).exp())
            .with_grad(|z| vec![(z[0] - 3.0).exp()])
            .with_hess(|z| DMatrix::from_element(1, 1, (z[0] - 3.0).exp()));
        let base = GaussianMeasure::standard(1);
        let opts = ModeOptions {
            max_iter: 1,
            ..ModeOptions::default()
        };
        let m = find_mode(&f, &base, &opts).unwrap();
        assert!(!m.converged);
        assert!(matches!(
            build_odis(&f, &base, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn degenerate_curvature_names_eigenvalue() {
        let f = FnIntegrand::new(1, |z| z[0] * z[0])
            .with_grad(|z| vec![2.0 * z[0]])
            .with_hess(|_| DMatrix::from_element(1, 1, 2.0));
        let base = GaussianMeasure::standard(1);
        match laplace_cov(&f, &[0.0], &base) {
            Err(Error::DegenerateCurvature { eigenvalue }) => assert_eq!(eigenvalue, -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("mcmc".parse::<Method>().is_err());
    }

    #[test]
    fn prior_has_unit_ratio() {
        let base = GaussianMeasure::standard(2);
        let p = build_prior(&base);
        let lr = crate::measure::log_lr_gaussian(&[1.5, -0.7], &p, &base).unwrap();
        assert!(lr.abs() < 1e-15);
    }
}
