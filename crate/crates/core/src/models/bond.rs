//! Discount bond under a one-step Rendleman-Bartter rate:
//! `G(z) = 1 / (1 + r1(z))` with `r1(z) = c e^(sigma z)`, `c = r0 e^(-sigma^2/2)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measure::{log_lr_gaussian, GaussianMeasure, Proposal};
use crate::models::{sigmoid, softplus};
use crate::proposals::{Integrand, Method};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondModel {
    r0: f64,
    sigma: f64,
}

impl BondModel {
    pub const DEFAULT_R0: f64 = 0.05;
    pub const DEFAULT_SIGMA: f64 = 0.5;

    pub fn new(r0: f64, sigma: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!(
                "bond needs positive r0 and sigma, got r0={r0}, sigma={sigma}"
            )));
        }
        Ok(Self { r0, sigma })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn c(&self) -> f64 {
        self.r0 * (-0.5 * self.sigma * self.sigma).exp()
    }

    pub fn r1(&self, z: f64) -> f64 {
        self.c() * (self.sigma * z).exp()
    }

    /// `log r1(z)`, the logit of `r1 / (1 + r1)`.
    fn log_r1(&self, z: f64) -> f64 {
        self.c().ln() + self.sigma * z
    }

    pub fn integrand(&self) -> BondIntegrand {
        BondIntegrand { model: *self }
    }
}

impl Default for BondModel {
    fn default() -> Self {
        Self {
            r0: Self::DEFAULT_R0,
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondIntegrand {
    model: BondModel,
}

impl BondIntegrand {
    pub fn model(&self) -> &BondModel {
        &self.model
    }

    /// `dG/dz = -sigma r1 / (1 + r1)^2`.
    pub fn dg_dz(&self, z: f64) -> f64 {
        let s = sigmoid(self.model.log_r1(z));
        -self.model.sigma * s * (1.0 - s)
    }
}

impl Integrand for BondIntegrand {
    fn dim(&self) -> usize {
        1
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        -softplus(self.model.log_r1(z[0]))
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(vec![-self.model.sigma * sigmoid(self.model.log_r1(z[0]))])
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let s = sigmoid(self.model.log_r1(z[0]));
        let sg = self.model.sigma;
        Some(DMatrix::from_element(1, 1, -sg * sg * s * (1.0 - s)))
    }
}

/// `mu + sigma r1(mu) / (1 + r1(mu))`, zero at the mode.
pub fn bond_mode_residual(model: &BondModel, mu: f64) -> f64 {
    mu + model.sigma * sigmoid(model.log_r1(mu))
}

/// Root of [`bond_mode_residual`] by Newton safeguarded to the bracket `(-sigma, 0)`.
pub fn bond_mode_solve(model: &BondModel) -> f64 {
    let sg = model.sigma;
    let (mut lo, mut hi) = (-sg, 0.0);
    let mut mu = -0.5 * sg * sigmoid(model.log_r1(0.0));
    for _ in 0..200 {
        let r = bond_mode_residual(model, mu);
        if r == 0.0 {
            break;
        }
        if r > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let s = sigmoid(model.log_r1(mu));
        let step = r / (1.0 + sg * sg * s * (1.0 - s));
        let mut next = mu - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 1e-16 * mu.abs().max(1e-300) {
            mu = next;
            break;
        }
        mu = next;
    }
    mu
}

/// `(1 - F''(mu))^-1` with `F''(mu) = -sigma^2 r1 / (1 + r1)^2`.
pub fn bond_sigma_star(model: &BondModel, mu_star: f64) -> f64 {
    let s = sigmoid(model.log_r1(mu_star));
    1.0 / (1.0 + model.sigma * model.sigma * s * (1.0 - s))
}

/// The bond ODIS or LapIS proposal from the scalar solvers.
pub fn bond_proposal(model: &BondModel, method: Method) -> Proposal {
    let mu = bond_mode_solve(model);
    let l = match method {
        Method::PriorIs => return crate::proposals::build_prior(&GaussianMeasure::standard(1)),
        Method::Odis => 1.0,
        Method::LapIs => bond_sigma_star(model, mu).sqrt(),
    };
    Proposal::gaussian(DVector::from_element(1, mu), DMatrix::from_element(1, 1, l))
        .expect("positive scale is nonsingular")
}

/// Bond price `E[G(Z)]`, `Z ~ N(0,1)`, by the trapezoid rule on `[-40, 40]`.
/// The integrand is smooth with Gaussian tails, so the rule converges
/// geometrically; step `2^-7` is accurate to rounding.
pub fn bond_price_quadrature(model: &BondModel) -> f64 {
    let f = model.integrand();
    let h = 1.0 / 128.0;
    let k = (40.0 / h) as i64;
    let mut acc = crate::estimators::KahanSum::new();
    for i in -k..=k {
        let z = i as f64 * h;
        let w = if i.abs() == k { 0.5 } else { 1.0 };
        acc.add(w * (f.eval_log_g(&[z]) - 0.5 * z * z).exp());
    }
    acc.value() * h / (2.0 * std::f64::consts::PI).sqrt()
}

/// Tail behaviour of `G_IS` on a probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClass {
    /// Some grid extreme is at least ten times `G_IS(0)`.
    Growing,
    /// Both grid extremes are below `G_IS(0)`.
    Decaying,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailProbe {
    pub grid: Vec<f64>,
    /// `log G_IS` at each grid point.
    pub log_g_is: Vec<f64>,
    pub log_g_is_at_zero: f64,
    /// `max |G_IS|` on the grid, `+inf` on overflow.
    pub max_g_is: f64,
    pub argmax: f64,
    pub class: TailClass,
}

/// Evaluates `G_IS(z) = G(mu + L z) W(z)` on `grid` in log space and
/// classifies the tails by the grid extremes relative to `G_IS(0)`.
pub fn bond_tail_probe(model: &BondModel, method: Method, grid: &[f64]) -> Result<TailProbe> {
    if grid.len() < 2 {
        return Err(Error::Argument(
            "tail probe needs at least two grid points".into(),
        ));
    }
    let prop = bond_proposal(model, method);
    let base = GaussianMeasure::standard(1);
    let f = model.integrand();
    let log_g_is_at = |z: f64| -> Result<f64> {
        Ok(f.eval_log_g(&prop.locate(&[z])) + log_lr_gaussian(&[z], &prop, &base)?)
    };
    let log_g_is = grid
        .iter()
        .map(|&z| log_g_is_at(z))
        .collect::<Result<Vec<_>>>()?;
    let at_zero = log_g_is_at(0.0)?;
    let (imax, &lmax) = log_g_is
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let (lo, hi) = grid.iter().zip(&log_g_is).fold(
        (None::<(f64, f64)>, None::<(f64, f64)>),
        |(lo, hi), (&z, &l)| {
            let lo = match lo {
                Some(p) if p.0 <= z => Some(p),
                _ => Some((z, l)),
            };
            let hi = match hi {
                Some(p) if p.0 >= z => Some(p),
                _ => Some((z, l)),
            };
            (lo, hi)
        },
    );
    let (l_lo, l_hi) = (lo.expect("non-empty").1, hi.expect("non-empty").1);
    let class = if l_lo.max(l_hi) >= at_zero + 10f64.ln() {
        TailClass::Growing
    } else if l_lo < at_zero && l_hi < at_zero {
        TailClass::Decaying
    } else {
        TailClass::Inconclusive
    };
    Ok(TailProbe {
        grid: grid.to_vec(),
        max_g_is: lmax.exp(),
        argmax: grid[imax],
        log_g_is,
        log_g_is_at_zero: at_zero,
        class,
    })
}

/// `n + 1` equally spaced points on `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mode_is_in_bracket() {
        let m = BondModel::default();
        let mu = bond_mode_solve(&m);
        assert!(mu > -m.sigma() && mu < 0.0);
        assert!(bond_mode_residual(&m, mu).abs() < 1e-14);
        let s = bond_sigma_star(&m, mu);
        assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BondModel::new(0.0, 0.5).is_err());
        assert!(BondModel::new(0.05, -1.0).is_err());
    }

    #[test]
    fn log_g_is_stable_far_out() {
        let f = BondModel::default().integrand();
        assert!(f.eval_log_g(&[1e4]).is_finite());
        assert_eq!(f.eval_log_g(&[-1e4]), 0.0);
    }
}
