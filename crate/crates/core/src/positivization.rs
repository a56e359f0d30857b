//! Smooth positive split `y = v+(y) - v-(y)` of a signed integrand and the
//! two-part IS estimator on common points.

use crate::error::{Error, Result};
use crate::estimators::{for_each_sample, Estimator, KahanSum};
use crate::measure::{Family, GaussianMeasure, Proposal};
use crate::nets::PointSet;
use crate::proposals::Integrand;
use crate::transforms::ChiSquareCoordinate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivizationParams {
    eta: f64,
}

impl PositivizationParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Argument(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Default for PositivizationParams {
    fn default() -> Self {
        Self { eta: 1.0 }
    }
}

/// `y/2 + sqrt(eta + y^2/4)`, rearranged to avoid cancellation for `y < 0`.
pub fn v_plus(y: f64, p: PositivizationParams) -> f64 {
    let r = p.eta.sqrt().hypot(0.5 * y);
    if y >= 0.0 {
        0.5 * y + r
    } else {
        p.eta / (r - 0.5 * y)
    }
}

/// `sqrt(eta + y^2/4) - y/2`, rearranged to avoid cancellation for `y > 0`.
pub fn v_minus(y: f64, p: PositivizationParams) -> f64 {
    v_plus(-y, p)
}

/// Derivative of [`v_plus`].
pub fn v_plus_derivative(y: f64, p: PositivizationParams) -> f64 {
    0.5 + y / (4.0 * p.eta.sqrt().hypot(0.5 * y))
}

fn check_gaussian(prop: &Proposal) -> Result<()> {
    if prop.family() != Family::Gaussian {
        return Err(Error::Argument(
            "positivization uses gaussian proposals".into(),
        ));
    }
    Ok(())
}

/// The two estimates `(I(G+_IS), I(G-_IS))` on the same points.
pub fn positivized_parts<F: Integrand + ?Sized>(
    f: &F,
    prop_plus: &Proposal,
    prop_minus: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    params: PositivizationParams,
) -> Result<(f64, f64)> {
    split_parts(f, prop_plus, prop_minus, base, points, |y| {
        (v_plus(y, params), v_minus(y, params))
    })
}

/// `I(G+_IS) - I(G-_IS)`.
pub fn positivized_estimate<F: Integrand + ?Sized>(
    f: &F,
    prop_plus: &Proposal,
    prop_minus: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    params: PositivizationParams,
) -> Result<f64> {
    let (p, m) = positivized_parts(f, prop_plus, prop_minus, base, points, params)?;
    Ok(p - m)
}

/// Comparison baseline with `max(G, 0)` and `max(-G, 0)`. The kinks violate
/// the growth condition, so this is not the recommended estimator.
pub fn hard_split_estimate<F: Integrand + ?Sized>(
    f: &F,
    prop_plus: &Proposal,
    prop_minus: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
) -> Result<f64> {
    let (p, m) = split_parts(f, prop_plus, prop_minus, base, points, |y| {
        (y.max(0.0), (-y).max(0.0))
    })?;
    Ok(p - m)
}

fn split_parts<F: Integrand + ?Sized>(
    f: &F,
    prop_plus: &Proposal,
    prop_minus: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    split: impl Fn(f64) -> (f64, f64),
) -> Result<(f64, f64)> {
    check_gaussian(prop_plus)?;
    check_gaussian(prop_minus)?;
    let part = |prop: &Proposal, pick: &dyn Fn((f64, f64)) -> f64| -> Result<f64> {
        let mut acc = KahanSum::new();
        for_each_sample(
            prop,
            base,
            points,
            ChiSquareCoordinate::Last,
            |i, loc, log_w| {
                let v = pick(split(f.eval_g(loc))) * log_w.exp();
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: i, value: v });
                }
                acc.add(v);
                Ok(())
            },
        )?;
        Ok(acc.value() / points.len() as f64)
    };
    Ok((part(prop_plus, &|s| s.0)?, part(prop_minus, &|s| s.1)?))
}

/// Experiment estimator for a signed integrand: the smooth split and the
/// hard-split baseline, both with one proposal for the two parts.
pub struct PositivizedEstimator<'a, F: Integrand + ?Sized> {
    pub f: &'a F,
    pub params: PositivizationParams,
}

impl<F: Integrand + ?Sized> Estimator for PositivizedEstimator<'_, F> {
    fn estimands(&self) -> Vec<String> {
        vec!["positivized".into(), "hard_split_baseline".into()]
    }

    fn estimate(
        &self,
        prop: &Proposal,
        base: &GaussianMeasure,
        points: &PointSet,
        _coord: ChiSquareCoordinate,
    ) -> Result<Vec<f64>> {
        Ok(vec![
            positivized_estimate(self.f, prop, prop, base, points, self.params)?,
            hard_split_estimate(self.f, prop, prop, base, points)?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_and_hand_values() {
        let p = PositivizationParams::default();
        assert_eq!(v_plus(0.0, p), 1.0);
        assert_eq!(v_minus(0.0, p), 1.0);
        let q = PositivizationParams::new(0.25).unwrap();
        assert!((v_plus(3.0, q) - 3.081_138_830_084_19).abs() < 1e-12);
        assert!((v_minus(3.0, q) - 0.081_138_830_084_19).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_eta() {
        assert!(PositivizationParams::new(0.0).is_err());
        assert!(PositivizationParams::new(f64::NAN).is_err());
    }

    #[test]
    fn extreme_arguments_stay_positive() {
        let p = PositivizationParams::default();
        for y in [-1e200, -1e8, 1e8, 1e200] {
            assert!(v_plus(y, p) > 0.0 && v_minus(y, p) > 0.0);
        }
    }
}
