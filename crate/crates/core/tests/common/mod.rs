//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's special functions or linear algebra.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `erf(x)` by its Maclaurin series for `|x| <= 3` and the continued
/// fraction of `erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.abs() > 3.0 {
        return x.signum() * (1.0 - erfc_cf(x.abs()));
    }
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

fn erfc_cf(x: f64) -> f64 {
    // Lentz on erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..5000 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        d = 1.0 / d;
        c = x + a / c;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() / f
}

/// `erfc(x)`, by the continued fraction for `x > 2` to avoid cancellation.
pub fn erfc(x: f64) -> f64 {
    if x > 2.0 {
        erfc_cf(x)
    } else {
        1.0 - erf(x)
    }
}

pub fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / 2f64.sqrt())
}

/// Root of an increasing-or-decreasing `f` on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `log N(y; mu, sigma)` via nalgebra's Cholesky.
pub fn mvn_log_pdf(y: &[f64], mu: &DVector<f64>, sigma: &DMatrix<f64>) -> f64 {
    let d = y.len() as f64;
    let ch = sigma.clone().cholesky().expect("SPD");
    let r = DVector::from_column_slice(y) - mu;
    let s = ch.solve(&r);
    let logdet = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (d * (2.0 * PI).ln() + logdet + r.dot(&s))
}

/// `log t_nu(y; mu, sigma)`, the multivariate Student-t density.
pub fn mvt_log_pdf(y: &[f64], mu: &DVector<f64>, sigma: &DMatrix<f64>, nu: f64) -> f64 {
    let d = y.len() as f64;
    let ch = sigma.clone().cholesky().expect("SPD");
    let r = DVector::from_column_slice(y) - mu;
    let q = r.dot(&ch.solve(&r));
    let logdet = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    ln_gamma_half(nu + d)
        - ln_gamma_half(nu)
        - 0.5 * d * (nu * PI).ln()
        - 0.5 * logdet
        - 0.5 * (nu + d) * (1.0 + q / nu).ln()
}

/// `ln Gamma(k / 2)` for a positive integer `k`, by the recurrence from
/// `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
pub fn ln_gamma_half(k: f64) -> f64 {
    assert!(
        k > 0.0 && k.fract() == 0.0,
        "ln_gamma_half needs a positive integer, got {k}"
    );
    let mut x = if (k as u64).is_multiple_of(2) {
        1.0
    } else {
        0.5
    };
    let mut acc = if x == 1.0 { 0.0 } else { 0.5 * PI.ln() };
    while x < 0.5 * k {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

pub fn std_normal(r: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

pub fn random_vec(r: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * std_normal(r)).collect()
}

/// Well-conditioned SPD matrix `A A^T / d + 0.5 I`.
pub fn random_spd(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| std_normal(r));
    a.clone() * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.5
}

/// Haar-ish random orthogonal matrix from QR of a Gaussian matrix.
pub fn random_orthogonal(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| std_normal(r));
    a.qr().q()
}

/// Central difference of a scalar function with a cube-root step.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, z: &[f64]) -> Vec<f64> {
    let h0 = f64::EPSILON.cbrt();
    (0..z.len())
        .map(|i| {
            let h = h0 * z[i].abs().max(1.0);
            let mut p = z.to_vec();
            let mut m = z.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a gradient.
pub fn fd_hess(g: impl Fn(&[f64]) -> Vec<f64>, z: &[f64]) -> DMatrix<f64> {
    let d = z.len();
    let h0 = f64::EPSILON.cbrt();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let h = h0 * z[j].abs().max(1.0);
        let mut p = z.to_vec();
        let mut m = z.to_vec();
        p[j] += h;
        m[j] -= h;
        let (gp, gm) = (g(&p), g(&m));
        for i in 0..d {
            out[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Max entrywise error relative to the largest entry of `b`.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Student-t CDF by Simpson integration of the density from 0.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    let c = (ln_gamma_half(nu + 1.0) - ln_gamma_half(nu)).exp() / (nu * PI).sqrt();
    let pdf = |t: f64| c * (1.0 + t * t / nu).powf(-0.5 * (nu + 1.0));
    let n = 2000;
    let h = x / n as f64;
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(i as f64 * h);
    }
    0.5 + s * h / 3.0
}
