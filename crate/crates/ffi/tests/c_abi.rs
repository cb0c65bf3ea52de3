use std::ffi::{c_int, c_void, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mrnprk_ffi::*;

unsafe extern "C" fn product_eval(_: *mut c_void, n: usize, u: *const f64, v: *const f64, out: *mut f64) -> c_int {
    for i in 0..n {
        *out.add(i) = -*u.add(i) * *v.add(i);
    }
    0
}

unsafe extern "C" fn product_solve(
    user: *mut c_void,
    n: usize,
    gh: f64,
    v: *const f64,
    rhs: *const f64,
    out: *mut f64,
) -> c_int {
    *(user as *mut usize) += 1;
    for i in 0..n {
        *out.add(i) = *rhs.add(i) / (1.0 + gh * *v.add(i));
    }
    0
}

unsafe extern "C" fn failing_eval(_: *mut c_void, _: usize, _: *const f64, _: *const f64, _: *mut f64) -> c_int {
    7
}

fn method(name: &str) -> *mut MrnprkMethod {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { mrnprk_method_new(name.as_ptr(), &mut m) }, MrnprkStatus::Ok);
    m
}

fn last_error() -> String {
    let p = mrnprk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn method_queries() {
    let m = method("MR-NPRK2-[ssp2-4x]");
    let (mut s, mut nominal, mut verified) = (0, 0, 0);
    unsafe {
        assert_eq!(mrnprk_method_stages(m, &mut s), MrnprkStatus::Ok);
        assert_eq!(
            mrnprk_method_order(m, 1e-10, &mut nominal, &mut verified),
            MrnprkStatus::Ok
        );
    }
    assert_eq!((s, nominal, verified), (10, 2, 2));

    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(mrnprk_method_to_json(m, &mut json), MrnprkStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.starts_with("{\"s\":10"));
        mrnprk_string_free(json);
    }

    let (mut re, mut im, mut modulus) = (0.0, 0.0, 1.0);
    unsafe {
        assert_eq!(
            mrnprk_stability(m, 0.0, 0.0, 0.0, 0.0, &mut re, &mut im),
            MrnprkStatus::Ok
        );
        assert_eq!((re, im), (1.0, 0.0));
        assert_eq!(mrnprk_stiff_limit(m, -2.0, 0.0, &mut modulus), MrnprkStatus::Ok);
        mrnprk_method_free(m);
    }
    assert!(modulus < 1e-6);
}

#[test]
fn integrate_through_callbacks() {
    let m = method("MR-NPRK3-2[ssp3-2x]");
    let mut calls = 0usize;
    let mut sys = ptr::null_mut();
    let mut y = [1.0];
    let mut st = MrnprkStats::default();
    unsafe {
        assert_eq!(
            mrnprk_system_new(
                1,
                Some(product_eval),
                Some(product_solve),
                &mut calls as *mut usize as *mut c_void,
                &mut sys
            ),
            MrnprkStatus::Ok
        );
        let status = mrnprk_integrate(m, sys, y.as_mut_ptr(), 1, 0.0, 1.0, 50, ptr::null(), &mut st);
        assert_eq!(status, MrnprkStatus::Ok);
        mrnprk_system_free(sys);
        mrnprk_method_free(m);
    }
    assert!((y[0] - 0.5).abs() < 1e-6);
    assert_eq!(st.steps, 50);
    assert_eq!(st.solves, calls);
}

#[test]
fn newton_fallback_and_hook_only() {
    let m = method("MR-NPRK2-[ssp2-2x]");
    let mut sys = ptr::null_mut();
    let mut y = [1.0];
    unsafe {
        assert_eq!(
            mrnprk_system_new(1, Some(product_eval), None, ptr::null_mut(), &mut sys),
            MrnprkStatus::Ok
        );
        let mut st = MrnprkStats::default();
        assert_eq!(
            mrnprk_step(m, sys, y.as_mut_ptr(), 1, 0.1, ptr::null(), &mut st),
            MrnprkStatus::Ok
        );
        assert!(st.newton_iters > 0);

        let mut cfg = mrnprk_solver_config_default();
        cfg.hook_only = 1;
        let before = y[0];
        assert_eq!(
            mrnprk_step(m, sys, y.as_mut_ptr(), 1, 0.1, &cfg, ptr::null_mut()),
            MrnprkStatus::Numerical
        );
        assert_eq!(y[0], before, "state must be untouched on failure");
        mrnprk_system_free(sys);
        mrnprk_method_free(m);
    }
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    let bad = CString::new("MR-NPRK2-[ssp2-0x]").unwrap();
    unsafe {
        assert_eq!(mrnprk_method_new(bad.as_ptr(), &mut m), MrnprkStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(last_error().contains("ssp2-0x"));
        assert_eq!(mrnprk_method_new(ptr::null(), &mut m), MrnprkStatus::NullPointer);
        assert_eq!(
            mrnprk_system_new(1, None, None, ptr::null_mut(), &mut ptr::null_mut()),
            MrnprkStatus::NullPointer
        );
    }

    let m = method("ssp2-[1x]");
    let mut sys = ptr::null_mut();
    let mut y = [1.0, 2.0];
    unsafe {
        mrnprk_system_new(1, Some(failing_eval), None, ptr::null_mut(), &mut sys);
        assert_eq!(
            mrnprk_integrate(m, sys, y.as_mut_ptr(), 2, 0.0, 1.0, 4, ptr::null(), ptr::null_mut()),
            MrnprkStatus::InvalidArgument
        );
        assert_eq!(
            mrnprk_integrate(m, sys, y.as_mut_ptr(), 1, 0.0, 1.0, 4, ptr::null(), ptr::null_mut()),
            MrnprkStatus::Callback
        );
        assert!(last_error().contains('7'));
        mrnprk_system_free(sys);
        mrnprk_method_free(m);
        mrnprk_method_free(ptr::null_mut());
    }
}

#[test]
fn header_is_current() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/mrnprk.h")).unwrap();
    for sym in [
        "mrnprk_method_new",
        "mrnprk_method_free",
        "mrnprk_integrate",
        "mrnprk_step",
        "mrnprk_last_error",
        "MRNPRK_STATUS_CALLBACK",
        "typedef struct MrnprkMethod MrnprkMethod;",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

/// Compiles and runs the C smoke program against the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libmrnprk_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "C program exited with {:?}", run.status.code());
    let stdout = String::from_utf8_lossy(&run.stdout);
    let y: f64 = stdout.trim().strip_prefix("ok ").unwrap().parse().unwrap();
    assert!((y - 0.5).abs() < 1e-6);
}
