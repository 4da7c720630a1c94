//! C interface to the einsel simulator.
//!
//! Systems and states are opaque handles released with the matching `_free`
//! function. Every fallible call returns an
//! [`EinselStatus`]; on failure `einsel_last_error` describes the cause.
//! Error messages are kept per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DMatrix;

use einsel::bipartite::{assemble, BipartiteSystem};
use einsel::bounds::{max_pairing, theorem4_check};
use einsel::dynamics::{evolve, subsystem_speed};
use einsel::ensembles::{haar_pure_state, random_bipartite};
use einsel::experiments::{run, ConfigOverrides};
use einsel::linalg::{eigh, trace_distance, DensityMatrix};
use einsel::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EinselStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Io = 5,
    /// A run finished but at least one hard assertion failed.
    AssertionFailed = 6,
    Panic = 7,
}

/// Opaque bipartite Hamiltonian.
pub struct EinselSystem {
    inner: BipartiteSystem,
}

/// Opaque density matrix on the composite space.
pub struct EinselState {
    inner: DensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> EinselStatus {
    match err {
        Error::ConfigInvalid(_) | Error::Json(_) => EinselStatus::Config,
        Error::Io { .. } | Error::ManifestMissing(_) => EinselStatus::Io,
        Error::EigenFailure | Error::SpeedRouteMismatch { .. } => EinselStatus::Numerical,
        _ => EinselStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), (EinselStatus, String)>) -> EinselStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EinselStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EinselStatus::Panic
        }
    }
}

fn lib<T>(r: einsel::Result<T>) -> Result<T, (EinselStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EinselStatus, String) {
    (EinselStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (EinselStatus, String)> {
    // SAFETY: caller guarantees p is null or a live handle from this library
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), (EinselStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, by contract, valid for writes
    unsafe { p.write(value) };
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn einsel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn einsel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Random bipartite Hamiltonian with unit-norm local terms and an
/// interaction of operator norm `coupling_scale`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_system_random(
    d_s: usize,
    d_b: usize,
    coupling_scale: f64,
    seed: u64,
    out: *mut *mut EinselSystem,
) -> EinselStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lib(random_bipartite(d_s, d_b, coupling_scale, seed))?;
        // SAFETY: checked non-null above
        unsafe { out.write(Box::into_raw(Box::new(EinselSystem { inner }))) };
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn einsel_system_free(sys: *mut EinselSystem) {
    if !sys.is_null() {
        // SAFETY: caller contract
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// # Safety
/// `sys` must be a live handle; `d_s` and `d_b` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_system_dims(
    sys: *const EinselSystem,
    d_s: *mut usize,
    d_b: *mut usize,
) -> EinselStatus {
    guarded(|| {
        // SAFETY: caller contract
        let sys = unsafe { deref(sys, "sys") }?;
        unsafe {
            write_out(d_s, sys.inner.d_s(), "d_s")?;
            write_out(d_b, sys.inner.d_b(), "d_b")
        }
    })
}

/// Haar-random pure state of dimension `dim`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_state_haar(
    dim: usize,
    seed: u64,
    out: *mut *mut EinselState,
) -> EinselStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err((
                EinselStatus::InvalidArgument,
                "dimension must be positive".into(),
            ));
        }
        let inner = lib(haar_pure_state(dim, seed))?;
        // SAFETY: checked non-null above
        unsafe { out.write(Box::into_raw(Box::new(EinselState { inner }))) };
        Ok(())
    })
}

/// Exact evolution of `state` under the full Hamiltonian of `sys` for time `t`.
///
/// # Safety
/// `sys` and `state` must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_state_evolve(
    sys: *const EinselSystem,
    state: *const EinselState,
    t: f64,
    out: *mut *mut EinselState,
) -> EinselStatus {
    guarded(|| {
        // SAFETY: caller contract
        let (sys, state) = unsafe { (deref(sys, "sys")?, deref(state, "state")?) };
        if out.is_null() {
            return Err(null("out"));
        }
        let sd = lib(eigh(&assemble(&sys.inner)))?;
        let inner = lib(evolve(&sd, &state.inner, t))?;
        // SAFETY: checked non-null above
        unsafe { out.write(Box::into_raw(Box::new(EinselState { inner }))) };
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn einsel_state_free(state: *mut EinselState) {
    if !state.is_null() {
        // SAFETY: caller contract
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Trace distance between two states of equal dimension.
///
/// # Safety
/// `a` and `b` must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_trace_distance(
    a: *const EinselState,
    b: *const EinselState,
    out: *mut f64,
) -> EinselStatus {
    guarded(|| {
        // SAFETY: caller contract
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        let d = lib(trace_distance(&a.inner, &b.inner))?;
        unsafe { write_out(out, d, "out") }
    })
}

/// Instantaneous subsystem speed `1/2 |d rho^S/dt|_1`.
///
/// # Safety
/// `sys` and `state` must be live handles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_subsystem_speed(
    sys: *const EinselSystem,
    state: *const EinselState,
    out: *mut f64,
) -> EinselStatus {
    guarded(|| {
        // SAFETY: caller contract
        let (sys, state) = unsafe { (deref(sys, "sys")?, deref(state, "state")?) };
        let v = lib(subsystem_speed(&sys.inner, &state.inner))?;
        unsafe { write_out(out, v, "out") }
    })
}

/// Pointwise bound `|H_SB| + v_S >= pairing functional` at one state.
/// `satisfied` is set to 1 or 0; any of the outputs may be null.
///
/// # Safety
/// `sys` and `state` must be live handles; non-null outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_pointwise_check(
    sys: *const EinselSystem,
    state: *const EinselState,
    lhs: *mut f64,
    rhs: *mut f64,
    slack: *mut f64,
    satisfied: *mut i32,
) -> EinselStatus {
    guarded(|| {
        // SAFETY: caller contract
        let (sys, state) = unsafe { (deref(sys, "sys")?, deref(state, "state")?) };
        let rep = lib(theorem4_check(&sys.inner, &state.inner))?;
        // SAFETY: each pointer is null or valid, by contract
        unsafe {
            if let Some(p) = lhs.as_mut() {
                *p = rep.lhs;
            }
            if let Some(p) = rhs.as_mut() {
                *p = rep.rhs;
            }
            if let Some(p) = slack.as_mut() {
                *p = rep.slack;
            }
            if let Some(p) = satisfied.as_mut() {
                *p = i32::from(rep.satisfied);
            }
        }
        Ok(())
    })
}

/// Maximum-weight matching value of a symmetric `d x d` weight table given
/// in row-major order.
///
/// # Safety
/// `weights` must point to `d * d` readable doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_max_pairing(
    weights: *const f64,
    d: usize,
    out: *mut f64,
) -> EinselStatus {
    guarded(|| {
        if weights.is_null() && d > 0 {
            return Err(null("weights"));
        }
        let table = if d == 0 {
            DMatrix::zeros(0, 0)
        } else {
            // SAFETY: caller guarantees d * d readable elements
            let data = unsafe { std::slice::from_raw_parts(weights, d * d) };
            DMatrix::from_row_slice(d, d, data)
        };
        let p = lib(max_pairing(&table))?;
        unsafe { write_out(out, p.value, "out") }
    })
}

/// Runs the experiment described by a JSON config file. `hard_failures`, if
/// non-null, receives the number of failed hard assertions.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `hard_failures` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn einsel_run_config(
    config_path: *const c_char,
    hard_failures: *mut usize,
) -> EinselStatus {
    let mut failed = 0;
    let status = guarded(|| {
        if config_path.is_null() {
            return Err(null("config_path"));
        }
        // SAFETY: caller contract
        let path = unsafe { CStr::from_ptr(config_path) }
            .to_str()
            .map_err(|_| {
                (
                    EinselStatus::InvalidArgument,
                    "path is not UTF-8".to_string(),
                )
            })?;
        let config =
            lib(ConfigOverrides::from_file(Path::new(path)).and_then(ConfigOverrides::resolve))?;
        let outcome = lib(run(&config))?;
        failed = outcome.hard_failures.len();
        if failed > 0 {
            return Err((
                EinselStatus::AssertionFailed,
                outcome.hard_failures.join("; "),
            ));
        }
        Ok(())
    });
    // SAFETY: caller contract
    if let Some(p) = unsafe { hard_failures.as_mut() } {
        *p = failed;
    }
    status
}
