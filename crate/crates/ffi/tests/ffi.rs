use std::ffi::c_void;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rqmcis_ffi::*;

fn measure(d: usize) -> *mut RqmcisMeasure {
    let mu = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    for i in 0..d {
        sig[i * d + i] = 1.0;
    }
    let mut m = ptr::null_mut();
    let s = unsafe { rqmcis_measure_new(d, mu.as_ptr(), sig.as_ptr(), &mut m) };
    assert_eq!(s, RqmcisStatus::Ok);
    m
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { rqmcis_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

unsafe extern "C" fn exp_linear(z: *const f64, d: usize, user: *mut c_void) -> f64 {
    let a = *(user as *const f64);
    (0..d).map(|i| a * *z.add(i)).sum()
}

unsafe extern "C" fn exp_linear_grad(_z: *const f64, d: usize, out: *mut f64, user: *mut c_void) {
    let a = *(user as *const f64);
    for i in 0..d {
        *out.add(i) = a;
    }
}

unsafe extern "C" fn zero_hess(_z: *const f64, d: usize, out: *mut f64, _user: *mut c_void) {
    for i in 0..d * d {
        *out.add(i) = 0.0;
    }
}

#[test]
fn point_set_roundtrip() {
    let mut ps = ptr::null_mut();
    let s = unsafe { rqmcis_pointset_new(RqmcisPointKind::Sobol, 3, 2, 0, &mut ps) };
    assert_eq!(s, RqmcisStatus::Ok);
    unsafe {
        assert_eq!(rqmcis_pointset_len(ps), 8);
        assert_eq!(rqmcis_pointset_dim(ps), 2);
        let mut buf = vec![0.0; 16];
        assert_eq!(
            rqmcis_pointset_copy(ps, buf.as_mut_ptr(), 15),
            RqmcisStatus::InvalidArgument
        );
        assert_eq!(
            rqmcis_pointset_copy(ps, buf.as_mut_ptr(), 16),
            RqmcisStatus::Ok
        );
        assert!(buf.iter().all(|&u| u > 0.0 && u < 1.0));
        rqmcis_pointset_free(ps);
        rqmcis_pointset_free(ptr::null_mut());
    }
}

#[test]
fn scalar_transforms() {
    let mut z = 0.0;
    assert_eq!(
        unsafe { rqmcis_inv_norm_cdf(0.975, &mut z) },
        RqmcisStatus::Ok
    );
    assert!((z - 1.959963984540054).abs() < 1e-12);
    assert_eq!(
        unsafe { rqmcis_inv_norm_cdf(1.5, &mut z) },
        RqmcisStatus::Domain
    );
    assert!(!last_error().is_empty());

    // gamma_1(x) = 1 - e^-x
    let mut y = 0.0;
    assert_eq!(
        unsafe { rqmcis_lower_inc_gamma(1.0, 2.0, &mut y) },
        RqmcisStatus::Ok
    );
    assert!((y - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    let mut x = 0.0;
    assert_eq!(
        unsafe { rqmcis_inv_lower_inc_gamma(1.0, y, &mut x) },
        RqmcisStatus::Ok
    );
    assert!((x - 2.0).abs() < 1e-10);
}

#[test]
fn null_and_bad_inputs_are_reported() {
    assert_eq!(
        unsafe { rqmcis_inv_norm_cdf(0.5, ptr::null_mut()) },
        RqmcisStatus::NullPointer
    );
    let mut m = ptr::null_mut();
    let sig = [1.0, 2.0, 2.0, 1.0];
    let s = unsafe { rqmcis_measure_new(2, [0.0, 0.0].as_ptr(), sig.as_ptr(), &mut m) };
    assert_eq!(s, RqmcisStatus::NotPositiveDefinite);
    assert!(m.is_null());
    let mut p = ptr::null_mut();
    let s = unsafe {
        rqmcis_proposal_new(
            2,
            [0.0, 0.0].as_ptr(),
            [1.0, 1.0, 1.0, 1.0].as_ptr(),
            0.0,
            &mut p,
        )
    };
    assert_ne!(s, RqmcisStatus::Ok);
    let len = unsafe { rqmcis_last_error_message(ptr::null_mut(), 0) };
    assert!(len > 0);
}

#[test]
fn log_lr_matches_density_ratio() {
    let base = measure(1);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            rqmcis_proposal_new(1, [0.3].as_ptr(), [2.0].as_ptr(), 0.0, &mut p),
            RqmcisStatus::Ok
        );
        let x = 0.7;
        let mut lr = 0.0;
        assert_eq!(
            rqmcis_log_lr(p, base, [x].as_ptr(), &mut lr),
            RqmcisStatus::Ok
        );
        // phi(z) / (phi(x) / 2) with z = 0.3 + 2x
        let z: f64 = 0.3 + 2.0 * x;
        let expect = -0.5 * z * z + 0.5 * x * x + 2f64.ln();
        assert!((lr - expect).abs() < 1e-13);

        let mut eig = [0.0];
        let (mut min, mut pass) = (0.0, false);
        assert_eq!(
            rqmcis_bgc_diagnostic(p, base, 1e-10, eig.as_mut_ptr(), &mut min, &mut pass),
            RqmcisStatus::Ok
        );
        assert!((eig[0] - 4.0).abs() < 1e-12 && (min - 4.0).abs() < 1e-12);
        assert!(pass);
        rqmcis_proposal_free(p);
        rqmcis_measure_free(base);
    }
}

#[test]
fn odis_estimate_of_exp_linear() {
    let d = 2;
    let base = measure(d);
    let mut a = 0.5f64;
    let user = &mut a as *mut f64 as *mut c_void;
    let mut p = ptr::null_mut();
    unsafe {
        let s = rqmcis_build_proposal(
            RqmcisMethod::Laplace,
            base,
            Some(exp_linear),
            Some(exp_linear_grad),
            Some(zero_hess),
            user,
            0.0,
            &mut p,
        );
        assert_eq!(s, RqmcisStatus::Ok, "{}", last_error());
        let mut mu = [0.0; 2];
        assert_eq!(
            rqmcis_proposal_params(p, mu.as_mut_ptr(), ptr::null_mut()),
            RqmcisStatus::Ok
        );
        assert!(mu.iter().all(|&m| (m - 0.5).abs() < 1e-8));

        let mut ps = ptr::null_mut();
        assert_eq!(
            rqmcis_pointset_new(RqmcisPointKind::ScrambledSobol, 8, d, 3, &mut ps),
            RqmcisStatus::Ok
        );
        let mut est = 0.0;
        assert_eq!(
            rqmcis_is_estimate(p, base, ps, Some(exp_linear), user, &mut est),
            RqmcisStatus::Ok
        );
        // E exp(a . Z) = exp(|a|^2 / 2), and the optimal proposal has zero variance
        let exact = (0.5 * d as f64 * 0.25f64).exp();
        assert!((est - exact).abs() < 1e-12 * exact);

        let s = rqmcis_build_proposal(
            RqmcisMethod::Odis,
            base,
            Some(exp_linear),
            None,
            None,
            user,
            0.0,
            &mut p,
        );
        assert_eq!(s, RqmcisStatus::InvalidArgument);
        rqmcis_pointset_free(ps);
        rqmcis_measure_free(base);
    }
}

#[test]
fn student_t_proposal_uses_extra_coordinate() {
    let base = measure(1);
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            rqmcis_proposal_new(1, [0.0].as_ptr(), [1.0].as_ptr(), 4.0, &mut p),
            RqmcisStatus::Ok
        );
        let mut ps = ptr::null_mut();
        assert_eq!(
            rqmcis_pointset_new(RqmcisPointKind::ScrambledSobol, 12, 2, 1, &mut ps),
            RqmcisStatus::Ok
        );
        let mut est = 0.0;
        unsafe extern "C" fn one(_: *const f64, _: usize, _: *mut c_void) -> f64 {
            0.0
        }
        assert_eq!(
            rqmcis_is_estimate(p, base, ps, Some(one), ptr::null_mut(), &mut est),
            RqmcisStatus::Ok
        );
        assert!((est - 1.0).abs() < 1e-3, "{est}");
        rqmcis_pointset_free(ps);
        rqmcis_proposal_free(p);
        rqmcis_measure_free(base);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/rqmcis.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).expect("header generated by build script");
    for sym in [
        "rqmcis_pointset_new",
        "rqmcis_is_estimate",
        "rqmcis_build_proposal",
        "rqmcis_last_error_message",
        "RQMCIS_STATUS_OK",
        "typedef struct RqmcisProposal RqmcisProposal",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let probe = Command::new(&cc).arg("--version").output();
    if probe.map(|o| !o.status.success()).unwrap_or(true) {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"rqmcis.h\"\nint main(void) { RqmcisPointSet *p = 0; \
         return rqmcis_pointset_new(RQMCIS_POINT_KIND_SOBOL, 2, 1, 0, &p) == RQMCIS_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let inc = header();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(inc.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
