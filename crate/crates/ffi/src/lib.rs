//! C ABI over the `stlmc` sampler.
//!
//! Every function returns a [`StlmcStatus`]. On failure a message is kept per
//! thread and can be read with [`stlmc_last_error`]. Handles are opaque and
//! must be released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;

use stlmc::decomposition::FiniteMarkovProcess;
use stlmc::fixtures::mixture_ladder;
use stlmc::sampler::{run_main, MainConfig};
use stlmc::{DensityOracle, Error, MixtureTarget, RngStream, RunParams, ScheduleConstants, TemperatureLadder};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NumericalError = 4,
    /// The sampler gave up: rejection ceiling or retry budget reached.
    Rejected = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Mixture target `f(x) = -ln Σ w_i e^{-f₀(x-μ_i)}`.
pub struct StlmcTarget {
    inner: MixtureTarget,
}

/// Inverse-temperature ladder, with the run schedule when it was derived
/// from a target.
pub struct StlmcLadder {
    ladder: TemperatureLadder,
    params: Option<RunParams>,
}

/// Per-run schedule for [`stlmc_sample`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StlmcRunParams {
    pub swap_rate: f64,
    pub step_size: f64,
    pub total_time: f64,
    pub init_std: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (StlmcStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StlmcStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } => StlmcStatus::DimensionMismatch,
        Error::RejectionCeiling { .. } | Error::RetryBudget { .. } => StlmcStatus::Rejected,
        Error::NonFiniteGradient { .. } | Error::Eigen(_) | Error::NotNormalized { .. } => StlmcStatus::NumericalError,
        Error::AtStep { source, .. } => status_of(source),
        _ => StlmcStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> Failure {
    (StlmcStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StlmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            StlmcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            StlmcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(fail(Error::DimensionMismatch { expected, got }));
    }
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn stlmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a fixture document `{dim, weights, centers, base}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlmc_target_from_json(json: *const c_char, out: *mut *mut StlmcTarget) -> StlmcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (StlmcStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let inner = MixtureTarget::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(StlmcTarget { inner }));
        Ok(())
    })
}

/// # Safety
/// `target` must come from [`stlmc_target_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn stlmc_target_free(target: *mut StlmcTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stlmc_target_dim(target: *const StlmcTarget, out: *mut usize) -> StlmcStatus {
    guard(|| {
        let t = deref(target, "target")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = t.inner.dim();
        Ok(())
    })
}

/// `f(x)` for `x` of length `len`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn stlmc_target_value(
    target: *const StlmcTarget,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> StlmcStatus {
    guard(|| {
        let t = deref(target, "target")?;
        let x = slice(x, len, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        check_len(t.inner.dim(), len)?;
        *out = t.inner.value(x).map_err(fail)?;
        Ok(())
    })
}

/// `∇f(x)` written to `grad`; both buffers have length `len`.
///
/// # Safety
/// `x` and `grad` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stlmc_target_grad(
    target: *const StlmcTarget,
    x: *const f64,
    len: usize,
    grad: *mut f64,
) -> StlmcStatus {
    guard(|| {
        let t = deref(target, "target")?;
        let x = slice(x, len, "x")?;
        let out = slice_mut(grad, len, "grad")?;
        check_len(t.inner.dim(), len)?;
        out.copy_from_slice(&t.inner.grad(x).map_err(fail)?);
        Ok(())
    })
}

/// Ladder and schedule derived from the target's structure at accuracy `eps`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_for_target(
    target: *const StlmcTarget,
    eps: f64,
    out: *mut *mut StlmcLadder,
) -> StlmcStatus {
    guard(|| {
        let t = deref(target, "target")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let (ladder, params) = mixture_ladder(&t.inner, eps, &ScheduleConstants::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(StlmcLadder {
            ladder,
            params: Some(params),
        }));
        Ok(())
    })
}

/// `β₁, β₁r, β₁r², …` capped at 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_geometric(beta1: f64, ratio: f64, out: *mut *mut StlmcLadder) -> StlmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ladder = TemperatureLadder::geometric(beta1, ratio).map_err(fail)?;
        *out = Box::into_raw(Box::new(StlmcLadder { ladder, params: None }));
        Ok(())
    })
}

/// # Safety
/// `ladder` must come from a ladder constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_free(ladder: *mut StlmcLadder) {
    if !ladder.is_null() {
        drop(Box::from_raw(ladder));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_len(ladder: *const StlmcLadder, out: *mut usize) -> StlmcStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = l.ladder.levels();
        Ok(())
    })
}

/// Copies the inverse temperatures into `out`, which holds `len` doubles and
/// must match the ladder length.
///
/// # Safety
/// `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_betas(ladder: *const StlmcLadder, out: *mut f64, len: usize) -> StlmcStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        let out = slice_mut(out, len, "out")?;
        check_len(l.ladder.levels(), len)?;
        out.copy_from_slice(l.ladder.betas());
        Ok(())
    })
}

/// Schedule stored with a target-derived ladder.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stlmc_ladder_run_params(ladder: *const StlmcLadder, out: *mut StlmcRunParams) -> StlmcStatus {
    guard(|| {
        let l = deref(ladder, "ladder")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = l.params.as_ref().ok_or((
            StlmcStatus::InvalidArgument,
            "ladder carries no schedule; it was not built from a target".to_string(),
        ))?;
        *out = StlmcRunParams {
            swap_rate: p.swap_rate,
            step_size: p.step_size,
            total_time: p.total_time,
            init_std: p.init_std,
        };
        Ok(())
    })
}

/// Estimates the partition ratios along the ladder, then writes `n` samples
/// (row-major, `n × dim`) from independent accepted runs to `out`.
///
/// `params` may be null for a target-derived ladder, in which case its stored
/// schedule is used. `out_len` must equal `n × dim`.
///
/// # Safety
/// Pointers must be valid and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stlmc_sample(
    target: *const StlmcTarget,
    ladder: *const StlmcLadder,
    params: *const StlmcRunParams,
    seed: u64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> StlmcStatus {
    guard(|| {
        let t = deref(target, "target")?;
        let l = deref(ladder, "ladder")?;
        let run = match (params.as_ref(), &l.params) {
            (Some(p), _) => RunParams::custom(p.swap_rate, p.step_size, p.total_time, p.init_std),
            (None, Some(p)) => p.clone(),
            (None, None) => return Err(null("params (required for a geometric ladder)")),
        };
        if n == 0 {
            return Err((StlmcStatus::InvalidArgument, "n must be positive".into()));
        }
        let d = t.inner.dim();
        check_len(n * d, out_len)?;
        let out = slice_mut(out, out_len, "out")?;
        let cfg = MainConfig {
            final_samples: n,
            ..MainConfig::default()
        };
        let result = run_main(&t.inner, &l.ladder, &run, &cfg, &RngStream::new(seed)).map_err(fail)?;
        for (row, x) in out.chunks_mut(d).zip(&result.samples) {
            row.copy_from_slice(x);
        }
        Ok(())
    })
}

/// Poincaré constant `1/gap` of a reversible chain given its row-major
/// `n × n` generator and stationary vector. Writes `+∞` for reducible chains.
///
/// # Safety
/// `generator` must hold `n²` doubles and `stationary` `n`.
#[no_mangle]
pub unsafe extern "C" fn stlmc_poincare_constant(
    generator: *const f64,
    stationary: *const f64,
    n: usize,
    out: *mut f64,
) -> StlmcStatus {
    guard(|| {
        if n == 0 {
            return Err((StlmcStatus::InvalidArgument, "n must be positive".into()));
        }
        let q = slice(generator, n * n, "generator")?;
        let p = slice(stationary, n, "stationary")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = FiniteMarkovProcess::new(DMatrix::from_row_slice(n, n, q), p.to_vec()).map_err(fail)?;
        *out = chain.poincare_constant_or_inf().map_err(fail)?;
        Ok(())
    })
}
