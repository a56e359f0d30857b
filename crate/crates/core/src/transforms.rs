//! Uniform-to-Gaussian and uniform-to-Student-t input maps.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, `0.5 * erfc(-z / sqrt 2)`.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse standard normal CDF.
///
/// Wichura's AS241 rational approximation followed by Halley polishing
/// against `erfc`. The lower tail is always evaluated directly, so
/// `inv_norm_cdf(1 - u) == -inv_norm_cdf(u)` whenever `1 - u` is exact.
pub fn inv_norm_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "inv_norm_cdf requires 0 < u < 1, got {u}"
        )));
    }
    Ok(inv_norm_cdf_unchecked(u))
}

pub(crate) fn inv_norm_cdf_unchecked(u: f64) -> f64 {
    if u > 0.5 {
        -lower_normal_quantile(1.0 - u)
    } else {
        lower_normal_quantile(u)
    }
}

// Quantile for p in (0, 0.5]; result <= 0.
fn lower_normal_quantile(p: f64) -> f64 {
    let mut z = as241(p);
    for _ in 0..2 {
        let err = norm_cdf(z) - p;
        if err == 0.0 {
            break;
        }
        let pdf = norm_pdf(z);
        if pdf == 0.0 {
            break;
        }
        let step = err / pdf;
        z -= step / (1.0 + 0.5 * z * step);
    }
    z
}

#[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
                + 6.726_577_092_700_87e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
                + 3.930_789_580_009_271e4)
                * r
                + 2.121_379_430_158_659_7e4)
                * r
                + 5.394_196_021_424_751e3)
                * r
                + 6.871_870_074_920_579e2)
                * r
                + 4.231_333_070_160_091e1)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6)
            / (((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Shape of the gamma distribution used for the chi-square coordinate.
/// The scale is fixed at 2, so `Gam(alpha, 2)` is chi-square with `2 alpha`
/// degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    alpha: f64,
}

impl GammaParams {
    pub const SCALE: f64 = 2.0;

    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma shape must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    /// Shape for a chi-square with `nu` degrees of freedom.
    pub fn chi_square(nu: f64) -> Result<Self> {
        Self::new(nu / 2.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `Gamma(alpha)`.
    pub fn complete(&self) -> f64 {
        libm::tgamma(self.alpha)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

const GAMMA_EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

// exp(-x + a ln x - lnGamma(a))
fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// Lower incomplete gamma `gamma_alpha(x) = int_0^x t^(alpha-1) e^-t dt`.
pub fn lower_inc_gamma(p: GammaParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "lower_inc_gamma requires x >= 0, got {x}"
        )));
    }
    Ok(p.complete() * gamma_p(p.alpha, x))
}

/// Inverse of `lower_inc_gamma` on `(0, Gamma(alpha))`.
pub fn inv_lower_inc_gamma(p: GammaParams, y: f64) -> Result<f64> {
    let total = p.complete();
    if !(y > 0.0 && y < total) {
        return Err(Error::Domain(format!(
            "inv_lower_inc_gamma requires 0 < y < Gamma({}) = {total}, got {y}",
            p.alpha
        )));
    }
    inv_gamma_p(p.alpha, y / total)
}

/// Inverse of the regularized lower incomplete gamma: `x` with `P(a, x) = u`.
///
/// Newton iterations with a bisection safeguard, started from the
/// Wilson-Hilferty normal approximation. Above the median the residual is
/// measured on `Q` to keep relative accuracy in the upper tail.
pub fn inv_gamma_p(a: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "inv_gamma_p requires 0 < u < 1, got {u}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma shape must be positive, got {a}"
        )));
    }
    let ln_gamma_a = ln_gamma(a);
    let upper = u > 0.5;
    let target = if upper { 1.0 - u } else { u };
    let residual = |x: f64| -> f64 {
        if upper {
            target - gamma_q(a, x)
        } else {
            gamma_p(a, x) - target
        }
    };

    let k = 2.0 * a;
    let c = 2.0 / (9.0 * k);
    let wh = 0.5 * k * (1.0 - c + inv_norm_cdf_unchecked(u) * c.sqrt()).powi(3);
    let small = ((u.ln() + ln_gamma(a + 1.0)) / a).exp();
    // `small` is the leading term of P(a, x) ~ x^a / Gamma(a + 1), accurate
    // when x << a, which is where Wilson-Hilferty breaks down.
    let mut x = if small < 0.1 * a || !(wh > 0.0 && wh.is_finite()) {
        small
    } else {
        wh
    };
    if !(x > 0.0) {
        x = f64::MIN_POSITIVE;
    }

    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for _ in 0..300 {
        let f = residual(x);
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() - x - ln_gamma_a).exp();
        let mut next = if density > 0.0 && density.is_finite() {
            x - f / density
        } else {
            f64::NAN
        };
        // Steps beyond a factor of two are not trusted: far in the lower
        // tail the density is tiny and Newton overshoots by many decades.
        if !(next > lo && next < hi && next <= 2.0 * x && next >= 0.5 * x) {
            next = if !hi.is_finite() {
                2.0 * x.max(lo)
            } else if lo > 0.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * hi
            };
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Which input coordinate drives the chi-square variable in [`tau_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiSquareCoordinate {
    #[default]
    Last,
    First,
}

/// Maps `u` in `(0,1)^(d+1)` to `z = (Phi^-1(u_1..u_d), 2 gamma^-1(Gamma(nu/2) u_(d+1)))`.
pub fn tau_map(u: &[f64], nu: f64) -> Result<Vec<f64>> {
    tau_map_with(u, nu, ChiSquareCoordinate::Last)
}

/// [`tau_map`] with a configurable chi-square input coordinate. The output
/// always carries the chi-square variable last.
pub fn tau_map_with(u: &[f64], nu: f64, coord: ChiSquareCoordinate) -> Result<Vec<f64>> {
    let mut z = vec![0.0; u.len()];
    tau_map_into(u, nu, coord, &mut z)?;
    Ok(z)
}

pub(crate) fn tau_map_into(
    u: &[f64],
    nu: f64,
    coord: ChiSquareCoordinate,
    z: &mut [f64],
) -> Result<()> {
    if u.len() < 2 {
        return Err(Error::Argument(
            "tau_map needs at least two coordinates".into(),
        ));
    }
    if !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "degrees of freedom must be positive, got {nu}"
        )));
    }
    let d = u.len() - 1;
    let (normals, chi) = match coord {
        ChiSquareCoordinate::Last => (&u[..d], u[d]),
        ChiSquareCoordinate::First => (&u[1..], u[0]),
    };
    for (zi, &ui) in z[..d].iter_mut().zip(normals) {
        *zi = inv_norm_cdf(ui)?;
    }
    z[d] = 2.0 * inv_gamma_p(nu / 2.0, chi)?;
    Ok(())
}

/// `x = z_(1:d) / sqrt(z_(d+1) / nu)`.
pub fn psi_map(z: &[f64], nu: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; z.len().saturating_sub(1)];
    psi_map_into(z, nu, &mut x)?;
    Ok(x)
}

pub(crate) fn psi_map_into(z: &[f64], nu: f64, x: &mut [f64]) -> Result<()> {
    let Some((&last, head)) = z.split_last() else {
        return Err(Error::Argument("psi_map needs a non-empty vector".into()));
    };
    if !(last > 0.0) {
        return Err(Error::Domain(format!(
            "psi_map requires a positive chi-square coordinate, got {last}"
        )));
    }
    let scale = (nu / last).sqrt();
    for (xi, &zi) in x.iter_mut().zip(head) {
        *xi = zi * scale;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_maps_to_zero() {
        assert_eq!(inv_norm_cdf(0.5).unwrap(), 0.0);
    }

    #[test]
    fn rejects_boundary() {
        for u in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(inv_norm_cdf(u), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn exponential_shape_is_closed_form() {
        let p = GammaParams::new(1.0).unwrap();
        for x in [0.0, 1e-8, 0.3, 1.0, 2.0, 7.5, 40.0] {
            let got = lower_inc_gamma(p, x).unwrap();
            assert!((got - (-(-x).exp_m1())).abs() < 1e-13, "x={x}");
        }
        for u in [1e-9, 0.1, 0.5, 0.9, 0.999_999] {
            let x = inv_lower_inc_gamma(p, u).unwrap();
            assert!(
                (x - (-(1.0f64 - u).ln())).abs() < 1e-12 * x.max(1.0),
                "u={u}"
            );
        }
    }

    #[test]
    fn lower_gamma_rejects_negative() {
        let p = GammaParams::new(2.0).unwrap();
        assert!(lower_inc_gamma(p, -1.0).is_err());
        assert!(inv_lower_inc_gamma(p, 0.0).is_err());
        assert!(inv_lower_inc_gamma(p, 1.0).is_err());
        assert!(GammaParams::new(0.0).is_err());
    }

    #[test]
    fn chi_square_two_is_exponential() {
        let z = tau_map(&[0.5, 0.5], 2.0).unwrap();
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 2.0 * std::f64::consts::LN_2).abs() < 1e-13);
    }

    #[test]
    fn chi_square_coordinate_can_move_first() {
        let last = tau_map_with(&[0.3, 0.7, 0.9], 4.0, ChiSquareCoordinate::Last).unwrap();
        let first = tau_map_with(&[0.9, 0.3, 0.7], 4.0, ChiSquareCoordinate::First).unwrap();
        assert_eq!(last, first);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_map(&[1.0, 2.0, 8.0], 2.0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(psi_map(&[0.0, 0.0, 3.0], 5.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(psi_map(&[1.5, -2.0, 4.0], 4.0).unwrap(), vec![1.5, -2.0]);
        assert!(matches!(psi_map(&[1.0, 0.0], 4.0), Err(Error::Domain(_))));
    }

    #[test]
    fn chi_square_coordinate_stays_positive_at_clamp() {
        let u = 0.5f64.powi(33);
        for nu in [0.5, 1.0, 4.0, 30.0] {
            let z = tau_map(&[0.5, u], nu).unwrap();
            assert!(z[1] > 0.0 && (1.0 / z[1]).is_finite(), "nu={nu}");
            let z = tau_map(&[0.5, 1.0 - u], nu).unwrap();
            assert!(z[1].is_finite());
        }
    }
}
