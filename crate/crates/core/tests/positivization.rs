use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rqmcis::estimators::{is_estimate, Estimator};
use rqmcis::measure::{GaussianMeasure, Proposal};
use rqmcis::models::{CubicMinusLinear, Identity1};
use rqmcis::nets::{scrambled_sobol, NetSpec};
use rqmcis::positivization::{
    hard_split_estimate, positivized_estimate, positivized_parts, v_minus, v_plus,
    v_plus_derivative, PositivizationParams, PositivizedEstimator,
};
use rqmcis::proposals::build_prior;
use rqmcis::transforms::ChiSquareCoordinate;

fn wide(scale: f64) -> Proposal {
    Proposal::gaussian(DVector::zeros(1), DMatrix::from_element(1, 1, scale)).unwrap()
}

#[test]
fn identity_integrand_estimates_zero() {
    let base = GaussianMeasure::standard(1);
    let p = PositivizationParams::default();
    for seed in 0..20 {
        let ps = scrambled_sobol(NetSpec::new(14, 1).unwrap(), seed).unwrap();
        for prop in [build_prior(&base), wide(1.5)] {
            let e = positivized_estimate(&Identity1, &prop, &prop, &base, &ps, p).unwrap();
            assert!(e.abs() < 1e-3, "seed {seed}: {e}");
        }
    }
}

#[test]
fn cubic_estimate_is_near_zero() {
    let base = GaussianMeasure::standard(1);
    let prop = wide(1.5);
    let p = PositivizationParams::default();
    for seed in 0..20 {
        let ps = scrambled_sobol(NetSpec::new(14, 1).unwrap(), seed).unwrap();
        let e = positivized_estimate(&CubicMinusLinear, &prop, &prop, &base, &ps, p).unwrap();
        assert!(e.abs() < 1e-3, "seed {seed}: {e}");
    }
}

#[test]
fn shared_proposal_reduces_to_plain_is() {
    let base = GaussianMeasure::standard(1);
    let prop = wide(1.3);
    let p = PositivizationParams::new(0.7).unwrap();
    let ps = scrambled_sobol(NetSpec::new(10, 1).unwrap(), 4).unwrap();
    let pos = positivized_estimate(&CubicMinusLinear, &prop, &prop, &base, &ps, p).unwrap();
    let plain = is_estimate(
        &CubicMinusLinear,
        &prop,
        &base,
        &ps,
        ChiSquareCoordinate::Last,
    )
    .unwrap();
    let (a, b) = positivized_parts(&CubicMinusLinear, &prop, &prop, &base, &ps, p).unwrap();
    // identical up to the rounding of two sums of magnitude a and b
    assert!(
        (pos - plain).abs() <= 8.0 * f64::EPSILON * (a + b),
        "{pos} vs {plain}"
    );
    let hard = hard_split_estimate(&CubicMinusLinear, &prop, &prop, &base, &ps).unwrap();
    assert!((hard - plain).abs() <= 8.0 * f64::EPSILON * (a + b));
}

#[test]
fn distinct_proposals_estimate_the_same_integral() {
    let base = GaussianMeasure::standard(1);
    let plus = Proposal::gaussian(
        DVector::from_element(1, 1.0),
        DMatrix::from_element(1, 1, 1.5),
    )
    .unwrap();
    let minus = Proposal::gaussian(
        DVector::from_element(1, -1.0),
        DMatrix::from_element(1, 1, 1.5),
    )
    .unwrap();
    let ps = scrambled_sobol(NetSpec::new(14, 1).unwrap(), 1).unwrap();
    let e = positivized_estimate(
        &CubicMinusLinear,
        &plus,
        &minus,
        &base,
        &ps,
        PositivizationParams::default(),
    )
    .unwrap();
    assert!(e.abs() < 1e-2, "{e}");
}

#[test]
fn estimator_reports_both_estimands() {
    let base = GaussianMeasure::standard(1);
    let est = PositivizedEstimator {
        f: &CubicMinusLinear,
        params: PositivizationParams::default(),
    };
    assert_eq!(est.estimands(), vec!["positivized", "hard_split_baseline"]);
    let ps = scrambled_sobol(NetSpec::new(8, 1).unwrap(), 0).unwrap();
    let v = est
        .estimate(&wide(1.5), &base, &ps, ChiSquareCoordinate::Last)
        .unwrap();
    assert_eq!(v.len(), 2);
}

#[test]
fn t_proposals_are_rejected() {
    let base = GaussianMeasure::standard(1);
    let t = Proposal::student_t(DVector::zeros(1), DMatrix::identity(1, 1), 4.0).unwrap();
    let ps = scrambled_sobol(NetSpec::new(4, 2).unwrap(), 0).unwrap();
    assert!(positivized_estimate(
        &Identity1,
        &t,
        &t,
        &base,
        &ps,
        PositivizationParams::default()
    )
    .is_err());
}

proptest! {
    #[test]
    fn partition_and_positivity(y in -1e6f64..1e6, eta in 1e-6f64..1e3) {
        let p = PositivizationParams::new(eta).unwrap();
        let (a, b) = (v_plus(y, p), v_minus(y, p));
        prop_assert!(a > 0.0 && b > 0.0);
        prop_assert!((a - b - y).abs() <= 4.0 * f64::EPSILON * a.max(b));
    }

    #[test]
    fn partition_at_extremes(e in 0i32..300, neg in any::<bool>()) {
        let y = if neg { -(10f64.powi(e)) } else { 10f64.powi(e) };
        let p = PositivizationParams::default();
        let (a, b) = (v_plus(y, p), v_minus(y, p));
        prop_assert!(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite());
        prop_assert!((a - b - y).abs() <= 4.0 * f64::EPSILON * a.max(b));
    }

    #[test]
    fn derivative_in_unit_interval(y in -1e3f64..1e3, eta in 1e-3f64..1e2) {
        let p = PositivizationParams::new(eta).unwrap();
        let d = v_plus_derivative(y, p);
        prop_assert!(d > 0.0 && d < 1.0);
        let h = 1e-5 * y.abs().max(1.0);
        let fd = (v_plus(y + h, p) - v_plus(y - h, p)) / (2.0 * h);
        prop_assert!((fd - d).abs() < 1e-6);
    }
}
