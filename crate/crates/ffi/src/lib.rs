//! C ABI for `mrnprk`.
//!
//! Every fallible function returns an [`MrnprkStatus`]. On failure a
//! description is stored per thread and can be read with
//! [`mrnprk_last_error`]. Handles are opaque and must be released with
//! the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mrnprk::harness::{resolve, Method};
use mrnprk::integrate::{integrate, Jacobian, PartitionedSystem, SolverConfig, StepStats};
use mrnprk::stability::StabilityEvaluator;
use mrnprk::verify::order_of;
use mrnprk::Error;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MrnprkStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad method name, malformed tableau, size mismatch and similar.
    InvalidArgument = 2,
    /// Newton divergence, singular systems, non-finite states.
    Numerical = 3,
    /// A user callback returned a nonzero code.
    Callback = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MrnprkStatus {
    match e {
        Error::Io(_) => MrnprkStatus::Io,
        e if e.is_numerical() => MrnprkStatus::Numerical,
        _ => MrnprkStatus::InvalidArgument,
    }
}

fn fail(status: MrnprkStatus, msg: impl Into<String>) -> MrnprkStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), MrnprkStatus>) -> MrnprkStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrnprkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(MrnprkStatus::Panic, "panic inside mrnprk"),
    }
}

fn lib_err(e: Error) -> MrnprkStatus {
    fail(status_of(&e), e.to_string())
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), MrnprkStatus> {
    if p.is_null() {
        Err(fail(MrnprkStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message for the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn mrnprk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// A resolved integration method.
pub struct MrnprkMethod {
    method: Method,
    evaluator: StabilityEvaluator,
}

/// Looks up a method by registry name or JSON file path.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_method_new(name: *const c_char, out: *mut *mut MrnprkMethod) -> MrnprkStatus {
    guard(|| {
        non_null(name, "name")?;
        non_null(out, "out")?;
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| fail(MrnprkStatus::InvalidArgument, "name is not UTF-8"))?;
        let method = resolve(name).map_err(lib_err)?;
        let evaluator = StabilityEvaluator::new(&method.tensor);
        *out = Box::into_raw(Box::new(MrnprkMethod { method, evaluator }));
        Ok(())
    })
}

/// Releases a method; null is ignored.
///
/// # Safety
/// `m` must come from [`mrnprk_method_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_method_free(m: *mut MrnprkMethod) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of stages of the coefficient tensor.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_method_stages(m: *const MrnprkMethod, out: *mut usize) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(out, "out")?;
        *out = (*m).method.tensor.stages();
        Ok(())
    })
}

/// Nominal order and the order verified from the order conditions at `tol`.
///
/// # Safety
/// `m` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_method_order(
    m: *const MrnprkMethod,
    tol: f64,
    nominal: *mut usize,
    verified: *mut usize,
) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(nominal, "nominal")?;
        non_null(verified, "verified")?;
        if !(tol > 0.0) {
            return Err(fail(MrnprkStatus::InvalidArgument, "tol must be positive"));
        }
        *nominal = (*m).method.order;
        *verified = order_of(&(*m).method.tensor, tol).order;
        Ok(())
    })
}

/// Coefficient tensor as a JSON string; free it with [`mrnprk_string_free`].
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_method_to_json(m: *const MrnprkMethod, out: *mut *mut c_char) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(out, "out")?;
        let text = serde_json::to_string(&(*m).method.tensor.to_json())
            .map_err(|e| fail(MrnprkStatus::InvalidArgument, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| fail(MrnprkStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Joint stability function `R(z1, z2)`.
///
/// # Safety
/// `m` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_stability(
    m: *const MrnprkMethod,
    z1_re: f64,
    z1_im: f64,
    z2_re: f64,
    z2_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(out_re, "out_re")?;
        non_null(out_im, "out_im")?;
        let r = (*m)
            .evaluator
            .r_eval(Complex64::new(z1_re, z1_im), Complex64::new(z2_re, z2_im))
            .map_err(lib_err)?;
        *out_re = r.re;
        *out_im = r.im;
        Ok(())
    })
}

/// `|R|` in the stiff limit `z1 -> -inf` at fixed `z2`.
///
/// # Safety
/// `m` must be a live handle and `modulus` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_stiff_limit(
    m: *const MrnprkMethod,
    z2_re: f64,
    z2_im: f64,
    modulus: *mut f64,
) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(modulus, "modulus")?;
        let lim = (*m)
            .evaluator
            .stiff_limit(Complex64::new(z2_re, z2_im))
            .map_err(lib_err)?;
        *modulus = lim.modulus;
        Ok(())
    })
}

/// Writes `F(u, v)` into `out`; all arrays have length `n`. Nonzero return
/// aborts the step with [`MrnprkStatus::Callback`].
pub type MrnprkEvalFn =
    Option<unsafe extern "C" fn(user: *mut c_void, n: usize, u: *const f64, v: *const f64, out: *mut f64) -> c_int>;

/// Solves `Y = rhs + gamma_h F(Y, v)` into `out`. Nonzero return aborts the
/// step with [`MrnprkStatus::Callback`].
pub type MrnprkSolveFn = Option<
    unsafe extern "C" fn(
        user: *mut c_void,
        n: usize,
        gamma_h: f64,
        v: *const f64,
        rhs: *const f64,
        out: *mut f64,
    ) -> c_int,
>;

/// A partitioned right-hand side backed by C callbacks.
pub struct MrnprkSystem {
    n: usize,
    eval: unsafe extern "C" fn(*mut c_void, usize, *const f64, *const f64, *mut f64) -> c_int,
    solve: MrnprkSolveFn,
    user: *mut c_void,
    failed: Option<c_int>,
}

impl PartitionedSystem for MrnprkSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&mut self, u: &[f64], v: &[f64], out: &mut [f64]) {
        if self.failed.is_some() {
            out.fill(f64::NAN);
            return;
        }
        // SAFETY: the caller of `mrnprk_system_new` promised a valid callback
        // and the slices all have length `n`.
        let rc = unsafe { (self.eval)(self.user, self.n, u.as_ptr(), v.as_ptr(), out.as_mut_ptr()) };
        if rc != 0 {
            self.failed = Some(rc);
            out.fill(f64::NAN);
        }
    }

    fn solve(&mut self, gamma_h: f64, v: &[f64], rhs: &[f64], out: &mut [f64]) -> Option<mrnprk::Result<()>> {
        let solve = self.solve?;
        if self.failed.is_some() {
            return Some(Err(Error::SolveFailure("callback failed earlier".into())));
        }
        // SAFETY: as for `eval`.
        let rc = unsafe { solve(self.user, self.n, gamma_h, v.as_ptr(), rhs.as_ptr(), out.as_mut_ptr()) };
        if rc != 0 {
            self.failed = Some(rc);
            return Some(Err(Error::SolveFailure(format!("solve callback returned {rc}"))));
        }
        Some(Ok(()))
    }
}

/// Creates a system of dimension `n`. `solve` may be null, in which case
/// implicit stages use Newton iterations on `eval`.
///
/// # Safety
/// The callbacks must be safe to call with `user` for the lifetime of the
/// handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_system_new(
    n: usize,
    eval: MrnprkEvalFn,
    solve: MrnprkSolveFn,
    user: *mut c_void,
    out: *mut *mut MrnprkSystem,
) -> MrnprkStatus {
    guard(|| {
        non_null(out, "out")?;
        let eval = eval.ok_or_else(|| fail(MrnprkStatus::NullPointer, "eval is null"))?;
        if n == 0 {
            return Err(fail(MrnprkStatus::InvalidArgument, "dimension must be positive"));
        }
        *out = Box::into_raw(Box::new(MrnprkSystem {
            n,
            eval,
            solve,
            user,
            failed: None,
        }));
        Ok(())
    })
}

/// Releases a system; null is ignored.
///
/// # Safety
/// `s` must come from [`mrnprk_system_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_system_free(s: *mut MrnprkSystem) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Implicit-solve settings.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MrnprkSolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Nonzero: fail instead of falling back to Newton iterations.
    pub hook_only: c_int,
}

/// Default implicit-solve settings.
#[no_mangle]
pub extern "C" fn mrnprk_solver_config_default() -> MrnprkSolverConfig {
    let d = SolverConfig::default();
    MrnprkSolverConfig {
        tol: d.tol,
        max_iter: d.max_iter,
        hook_only: 0,
    }
}

/// Work counters.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MrnprkStats {
    pub steps: usize,
    pub f_evals: usize,
    pub solves: usize,
    pub newton_iters: usize,
    pub newton_f_evals: usize,
}

impl From<StepStats> for MrnprkStats {
    fn from(s: StepStats) -> Self {
        Self {
            steps: s.steps,
            f_evals: s.f_evals,
            solves: s.solves,
            newton_iters: s.newton_iters,
            newton_f_evals: s.newton_f_evals,
        }
    }
}

unsafe fn solver_config(cfg: *const MrnprkSolverConfig) -> Result<SolverConfig, MrnprkStatus> {
    let c = if cfg.is_null() {
        mrnprk_solver_config_default()
    } else {
        *cfg
    };
    if !(c.tol > 0.0) || c.max_iter == 0 {
        return Err(fail(MrnprkStatus::InvalidArgument, "tol and max_iter must be positive"));
    }
    Ok(SolverConfig {
        tol: c.tol,
        max_iter: c.max_iter,
        jacobian: if c.hook_only != 0 {
            Jacobian::HookOnly
        } else {
            Jacobian::FiniteDifference
        },
    })
}

fn check_callback(sys: &mut MrnprkSystem) -> Result<(), MrnprkStatus> {
    match sys.failed.take() {
        Some(rc) => Err(fail(MrnprkStatus::Callback, format!("callback returned {rc}"))),
        None => Ok(()),
    }
}

/// Integrates `y` (length `n`) in place from `t0` to `t1` with `nsteps`
/// uniform steps. `cfg` and `stats` may be null.
///
/// # Safety
/// Handles must be live; `y` must hold `n` values; `stats`, if non-null,
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn mrnprk_integrate(
    m: *const MrnprkMethod,
    sys: *mut MrnprkSystem,
    y: *mut f64,
    n: usize,
    t0: f64,
    t1: f64,
    nsteps: usize,
    cfg: *const MrnprkSolverConfig,
    stats: *mut MrnprkStats,
) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(sys, "system")?;
        non_null(y, "y")?;
        let sys = &mut *sys;
        if n != sys.n {
            return Err(fail(
                MrnprkStatus::InvalidArgument,
                format!("state length {n} does not match system dimension {}", sys.n),
            ));
        }
        let cfg = solver_config(cfg)?;
        let state = std::slice::from_raw_parts_mut(y, n);
        sys.failed = None;
        let result = integrate(&(*m).method.stepper, sys, state, t0, t1, nsteps, &cfg);
        check_callback(sys)?;
        let r = result.map_err(lib_err)?;
        state.copy_from_slice(&r.y);
        if !stats.is_null() {
            *stats = r.totals.into();
        }
        Ok(())
    })
}

/// Advances `y` (length `n`) by one step of size `h` in place.
///
/// # Safety
/// As for [`mrnprk_integrate`].
#[no_mangle]
pub unsafe extern "C" fn mrnprk_step(
    m: *const MrnprkMethod,
    sys: *mut MrnprkSystem,
    y: *mut f64,
    n: usize,
    h: f64,
    cfg: *const MrnprkSolverConfig,
    stats: *mut MrnprkStats,
) -> MrnprkStatus {
    guard(|| {
        non_null(m, "method")?;
        non_null(sys, "system")?;
        non_null(y, "y")?;
        let sys = &mut *sys;
        if n != sys.n {
            return Err(fail(
                MrnprkStatus::InvalidArgument,
                format!("state length {n} does not match system dimension {}", sys.n),
            ));
        }
        let cfg = solver_config(cfg)?;
        let state = std::slice::from_raw_parts_mut(y, n);
        sys.failed = None;
        let mut st = StepStats::default();
        let result = (*m).method.stepper.step(sys, state, h, &cfg, &mut st);
        check_callback(sys)?;
        let next = result.map_err(lib_err)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(fail(MrnprkStatus::Numerical, "step produced a non-finite state"));
        }
        state.copy_from_slice(&next);
        if !stats.is_null() {
            *stats = st.into();
        }
        Ok(())
    })
}
