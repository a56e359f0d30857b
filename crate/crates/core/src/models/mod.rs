//! Worked integrands: closed-form synthetic problems, the discount bond and
//! Bayesian logistic regression.

pub mod bond;
pub mod logistic;
pub mod synthetic;

pub use bond::{
    bond_mode_solve, bond_sigma_star, bond_tail_probe, BondIntegrand, BondModel, TailClass,
    TailProbe,
};
pub use logistic::{logistic_load, logistic_test_fn, LogisticIntegrand, LogisticModel, RowSlice};
pub use synthetic::{Constant, CubicMinusLinear, ExpLinear, Identity1};

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^-t)` without overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
