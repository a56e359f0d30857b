//! C ABI over `rqmcis`.
//!
//! Objects are opaque handles created by `*_new`-style functions and released
//! with the matching `*_free`. Every fallible function returns an
//! [`RqmcisStatus`]; on failure the message is available from
//! [`rqmcis_last_error_message`] on the same thread. Matrices are dense and
//! row-major.

use std::cell::RefCell;
use std::ffi::{c_char, c_void};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use rqmcis::estimators::{is_estimate, Sampler};
use rqmcis::measure::{
    bgc_eigen_diagnostic, log_lr_gaussian, log_lr_t, Family, GaussianMeasure, Proposal,
};
use rqmcis::nets::{self, NetSpec, PointSet};
use rqmcis::proposals::{Integrand, Method, ModeOptions};
use rqmcis::transforms::{self, ChiSquareCoordinate, GammaParams};
use rqmcis::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqmcisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    NotPositiveDefinite = 4,
    Singular = 5,
    NonConvergence = 6,
    NonFinite = 7,
    Config = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for RqmcisStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) | Error::MissingDerivative(_) => RqmcisStatus::InvalidArgument,
            Error::Domain(_) | Error::NonPositiveDenominator(_) => RqmcisStatus::Domain,
            Error::NotPositiveDefinite { .. } | Error::DegenerateCurvature { .. } => {
                RqmcisStatus::NotPositiveDefinite
            }
            Error::Singular(_) => RqmcisStatus::Singular,
            Error::NonConvergence { .. } => RqmcisStatus::NonConvergence,
            Error::NonFinite { .. } => RqmcisStatus::NonFinite,
            Error::Config(_) => RqmcisStatus::Config,
            Error::Load { .. } | Error::Io { .. } => RqmcisStatus::Io,
        }
    }
}

/// Point generator for [`rqmcis_pointset_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqmcisPointKind {
    Sobol = 0,
    ScrambledSobol = 1,
    Iid = 2,
}

/// Proposal rule for [`rqmcis_build_proposal`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqmcisMethod {
    Prior = 0,
    Odis = 1,
    Laplace = 2,
}

/// Opaque point set.
pub struct RqmcisPointSet(PointSet);

/// Opaque Gaussian base measure.
pub struct RqmcisMeasure(GaussianMeasure);

/// Opaque Gaussian or Student-t proposal.
pub struct RqmcisProposal(Proposal);

/// `log G(z)` for `z` of length `d`; return `-INFINITY` where `G = 0`.
pub type RqmcisLogIntegrandFn =
    Option<unsafe extern "C" fn(z: *const f64, d: usize, user: *mut c_void) -> f64>;

/// Writes the gradient of `log G` at `z` into `out` (length `d`).
pub type RqmcisGradFn =
    Option<unsafe extern "C" fn(z: *const f64, d: usize, out: *mut f64, user: *mut c_void)>;

/// Writes the Hessian of `log G` at `z` into `out` (`d * d`, row-major).
pub type RqmcisHessFn =
    Option<unsafe extern "C" fn(z: *const f64, d: usize, out: *mut f64, user: *mut c_void)>;

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn fail(status: RqmcisStatus, msg: &str) -> RqmcisStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), RqmcisStatus>) -> RqmcisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RqmcisStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RqmcisStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: rqmcis::Result<T>) -> Result<T, RqmcisStatus> {
    r.map_err(|e| fail(RqmcisStatus::from(&e), &e.to_string()))
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), RqmcisStatus> {
    if p.is_null() {
        Err(fail(RqmcisStatus::NullPointer, &format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], RqmcisStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    nonnull(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn matrix(p: *const f64, d: usize, name: &str) -> Result<DMatrix<f64>, RqmcisStatus> {
    Ok(DMatrix::from_row_slice(d, d, slice(p, d * d, name)?))
}

unsafe fn out<T>(p: *mut T, v: T, name: &str) -> Result<(), RqmcisStatus> {
    nonnull(p, name)?;
    *p = v;
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Creates `2^m` points in dimension `d`. `seed` is ignored for `Sobol`.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_pointset_new(
    kind: RqmcisPointKind,
    m: u32,
    d: usize,
    seed: u64,
    out_ps: *mut *mut RqmcisPointSet,
) -> RqmcisStatus {
    guard(|| {
        nonnull(out_ps, "out")?;
        let ps = match kind {
            RqmcisPointKind::Sobol => lift(NetSpec::new(m, d).and_then(nets::sobol_net))?,
            RqmcisPointKind::ScrambledSobol => lift(Sampler::Rqmc.points(m, d, seed))?,
            RqmcisPointKind::Iid => lift(Sampler::Mc.points(m, d, seed))?,
        };
        *out_ps = Box::into_raw(Box::new(RqmcisPointSet(ps)));
        Ok(())
    })
}

/// # Safety
/// `ps` must be null or a handle from [`rqmcis_pointset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_pointset_free(ps: *mut RqmcisPointSet) {
    if !ps.is_null() {
        drop(Box::from_raw(ps));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `ps` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_pointset_len(ps: *const RqmcisPointSet) -> usize {
    ps.as_ref().map_or(0, |p| p.0.len())
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `ps` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_pointset_dim(ps: *const RqmcisPointSet) -> usize {
    ps.as_ref().map_or(0, |p| p.0.dim())
}

/// Copies the points row-major into `buf`, which must hold `len * dim` values.
///
/// # Safety
/// `ps` must be a live handle and `buf` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_pointset_copy(
    ps: *const RqmcisPointSet,
    buf: *mut f64,
    cap: usize,
) -> RqmcisStatus {
    guard(|| {
        nonnull(ps, "point set")?;
        nonnull(buf, "buffer")?;
        let data = (*ps).0.as_slice();
        if cap < data.len() {
            return Err(fail(
                RqmcisStatus::InvalidArgument,
                &format!("buffer holds {cap} values, need {}", data.len()),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// `Phi^-1(u)` for `u` in `(0, 1)`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_inv_norm_cdf(u: f64, out_z: *mut f64) -> RqmcisStatus {
    guard(|| out(out_z, lift(transforms::inv_norm_cdf(u))?, "out"))
}

/// Lower incomplete gamma `gamma_alpha(x)`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_lower_inc_gamma(
    alpha: f64,
    x: f64,
    out_y: *mut f64,
) -> RqmcisStatus {
    guard(|| {
        let p = lift(GammaParams::new(alpha))?;
        out(out_y, lift(transforms::lower_inc_gamma(p, x))?, "out")
    })
}

/// Inverse of [`rqmcis_lower_inc_gamma`] in `x` for `y` in `(0, Gamma(alpha))`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_inv_lower_inc_gamma(
    alpha: f64,
    y: f64,
    out_x: *mut f64,
) -> RqmcisStatus {
    guard(|| {
        let p = lift(GammaParams::new(alpha))?;
        out(out_x, lift(transforms::inv_lower_inc_gamma(p, y))?, "out")
    })
}

/// Base measure `N(mu0, sigma0)`.
///
/// # Safety
/// `mu0` must hold `d` values, `sigma0` `d * d`, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_measure_new(
    d: usize,
    mu0: *const f64,
    sigma0: *const f64,
    out_m: *mut *mut RqmcisMeasure,
) -> RqmcisStatus {
    guard(|| {
        nonnull(out_m, "out")?;
        let mu = DVector::from_column_slice(slice(mu0, d, "mu0")?);
        let m = lift(GaussianMeasure::new(mu, matrix(sigma0, d, "sigma0")?))?;
        *out_m = Box::into_raw(Box::new(RqmcisMeasure(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_measure_free(m: *mut RqmcisMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Proposal `mu + L x`; `nu <= 0` selects the Gaussian family, `nu > 0` Student-t.
///
/// # Safety
/// `mu` must hold `d` values, `root_l` `d * d`, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_proposal_new(
    d: usize,
    mu: *const f64,
    root_l: *const f64,
    nu: f64,
    out_p: *mut *mut RqmcisProposal,
) -> RqmcisStatus {
    guard(|| {
        nonnull(out_p, "out")?;
        let mu = DVector::from_column_slice(slice(mu, d, "mu")?);
        let l = matrix(root_l, d, "root_l")?;
        let family = if nu > 0.0 {
            Family::StudentT { nu }
        } else {
            Family::Gaussian
        };
        let p = lift(Proposal::new(family, mu, l))?;
        *out_p = Box::into_raw(Box::new(RqmcisProposal(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_proposal_free(p: *mut RqmcisProposal) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of a proposal, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_proposal_dim(p: *const RqmcisProposal) -> usize {
    p.as_ref().map_or(0, |p| p.0.dim())
}

/// Copies the proposal mean (`d` values) and root (`d * d`, row-major).
/// Either output may be null.
///
/// # Safety
/// Non-null outputs must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_proposal_params(
    p: *const RqmcisProposal,
    mu_out: *mut f64,
    root_out: *mut f64,
) -> RqmcisStatus {
    guard(|| {
        nonnull(p, "proposal")?;
        let p = &(*p).0;
        let d = p.dim();
        if !mu_out.is_null() {
            ptr::copy_nonoverlapping(p.mu().as_ptr(), mu_out, d);
        }
        if !root_out.is_null() {
            for i in 0..d {
                for j in 0..d {
                    *root_out.add(i * d + j) = p.root_l()[(i, j)];
                }
            }
        }
        Ok(())
    })
}

/// Log likelihood ratio at the standardized input `x` for either family.
///
/// # Safety
/// Handles must be live and `x` hold `d` values.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_log_lr(
    p: *const RqmcisProposal,
    base: *const RqmcisMeasure,
    x: *const f64,
    out_lr: *mut f64,
) -> RqmcisStatus {
    guard(|| {
        nonnull(p, "proposal")?;
        nonnull(base, "base")?;
        let (p, base) = (&(*p).0, &(*base).0);
        let x = slice(x, p.dim(), "x")?;
        let v = match p.family() {
            Family::Gaussian => lift(log_lr_gaussian(x, p, base))?,
            Family::StudentT { .. } => lift(log_lr_t(x, p, base))?,
        };
        out(out_lr, v, "out")
    })
}

/// Eigenvalues of `L^T Sigma0^-1 L` (ascending, `d` values into
/// `eigenvalues` unless null) and whether all are `>= 1 - tol`.
///
/// # Safety
/// Handles must be live; outputs valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_bgc_diagnostic(
    p: *const RqmcisProposal,
    base: *const RqmcisMeasure,
    tol: f64,
    eigenvalues: *mut f64,
    min_eig: *mut f64,
    passes: *mut bool,
) -> RqmcisStatus {
    guard(|| {
        nonnull(p, "proposal")?;
        nonnull(base, "base")?;
        let diag = lift(bgc_eigen_diagnostic((*p).0.root_l(), &(*base).0, tol))?;
        if !eigenvalues.is_null() {
            ptr::copy_nonoverlapping(
                diag.eigenvalues.as_ptr(),
                eigenvalues,
                diag.eigenvalues.len(),
            );
        }
        if !min_eig.is_null() {
            *min_eig = diag.min_eig;
        }
        out(passes, diag.passes, "passes")
    })
}

struct CIntegrand {
    d: usize,
    log_g: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    grad: RqmcisGradFn,
    hess: RqmcisHessFn,
    user: *mut c_void,
}

// The callbacks run on the calling thread only; the estimators used here
// do not spawn work.
unsafe impl Sync for CIntegrand {}

impl Integrand for CIntegrand {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        unsafe { (self.log_g)(z.as_ptr(), self.d, self.user) }
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.grad.map(|g| {
            let mut out = vec![0.0; self.d];
            unsafe { g(z.as_ptr(), self.d, out.as_mut_ptr(), self.user) };
            out
        })
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        self.hess.map(|h| {
            let mut out = vec![0.0; self.d * self.d];
            unsafe { h(z.as_ptr(), self.d, out.as_mut_ptr(), self.user) };
            DMatrix::from_row_slice(self.d, self.d, &out)
        })
    }
}

/// `(1/N) sum G(mu + L x_i) W(x_i)` with `G = exp(log_g)`. Gaussian proposals
/// need `d`-dimensional points, Student-t proposals `d + 1`.
///
/// # Safety
/// Handles must be live; `log_g` must be safe to call with `user`.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_is_estimate(
    p: *const RqmcisProposal,
    base: *const RqmcisMeasure,
    ps: *const RqmcisPointSet,
    log_g: RqmcisLogIntegrandFn,
    user: *mut c_void,
    out_est: *mut f64,
) -> RqmcisStatus {
    guard(|| {
        nonnull(p, "proposal")?;
        nonnull(base, "base")?;
        nonnull(ps, "point set")?;
        let Some(log_g) = log_g else {
            return Err(fail(RqmcisStatus::NullPointer, "log_g callback is null"));
        };
        let f = CIntegrand {
            d: (*p).0.dim(),
            log_g,
            grad: None,
            hess: None,
            user,
        };
        let v = lift(is_estimate(
            &f,
            &(*p).0,
            &(*base).0,
            &(*ps).0,
            ChiSquareCoordinate::Last,
        ))?;
        out(out_est, v, "out")
    })
}

/// Builds a PriorIS, ODIS or LapIS proposal for `G = exp(log_g)`;
/// `nu > 0` converts it to Student-t. ODIS needs `grad`, LapIS also `hess`.
///
/// # Safety
/// Handles must be live; callbacks must be safe to call with `user`.
#[no_mangle]
pub unsafe extern "C" fn rqmcis_build_proposal(
    method: RqmcisMethod,
    base: *const RqmcisMeasure,
    log_g: RqmcisLogIntegrandFn,
    grad: RqmcisGradFn,
    hess: RqmcisHessFn,
    user: *mut c_void,
    nu: f64,
    out_p: *mut *mut RqmcisProposal,
) -> RqmcisStatus {
    guard(|| {
        nonnull(base, "base")?;
        nonnull(out_p, "out")?;
        let Some(log_g) = log_g else {
            return Err(fail(RqmcisStatus::NullPointer, "log_g callback is null"));
        };
        let base = &(*base).0;
        let f = CIntegrand {
            d: base.dim(),
            log_g,
            grad,
            hess,
            user,
        };
        let method = match method {
            RqmcisMethod::Prior => Method::PriorIs,
            RqmcisMethod::Odis => Method::Odis,
            RqmcisMethod::Laplace => Method::LapIs,
        };
        let family = if nu > 0.0 {
            Family::StudentT { nu }
        } else {
            Family::Gaussian
        };
        let p = lift(method.build(&f, base, &ModeOptions::default(), family))?;
        *out_p = Box::into_raw(Box::new(RqmcisProposal(p)));
        Ok(())
    })
}
