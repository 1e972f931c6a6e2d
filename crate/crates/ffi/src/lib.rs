//! C ABI for `twosided_ou`.
//!
//! Every fallible call returns a [`TsouStatus`]; on failure the message is
//! kept per thread and read with [`tsou_last_error_message`]. Handles are
//! opaque and released with their `_free` function. No call unwinds into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twosided_ou::harness::config::RunConfig;
use twosided_ou::harness::simulate::{simulate, Simulation};
use twosided_ou::{Error, FundamentalSolution, SampleKind};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsouStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CoefficientOutOfRange = 3,
    InvalidStep = 4,
    NotGridAligned = 5,
    WindowExhausted = 6,
    GridMismatch = 7,
    TolUnreachable = 8,
    EnvelopeUnavailable = 9,
    DecayFit = 10,
    InfeasibleBudget = 11,
    Internal = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsouKind {
    Delay = 0,
    Anticipation = 1,
}

/// Series stored in a realization, all on the output window.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsouSeries {
    Time = 0,
    W = 1,
    X = 2,
    /// `X - W`.
    A = 3,
}

/// Settings of [`tsou_simulate`]; start from [`tsou_sim_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TsouSimConfig {
    pub a: f64,
    pub dt: f64,
    pub tol: f64,
    pub k_f: usize,
    pub t_left: f64,
    pub t_right: f64,
    pub mean: f64,
    pub stddev: f64,
    pub seed: u64,
    pub kind: TsouKind,
}

/// Opaque fundamental solution.
pub struct TsouFundamental(FundamentalSolution);

/// Opaque process realization.
pub struct TsouRealization(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TsouStatus {
    match e {
        Error::CoefficientOutOfRange(_) => TsouStatus::CoefficientOutOfRange,
        Error::InvalidArgument(_) => TsouStatus::InvalidArgument,
        Error::InvalidStep(_) => TsouStatus::InvalidStep,
        Error::NotGridAligned { .. } => TsouStatus::NotGridAligned,
        Error::WindowExhausted { .. } => TsouStatus::WindowExhausted,
        Error::GridMismatch(..) => TsouStatus::GridMismatch,
        Error::TolUnreachable { .. } => TsouStatus::TolUnreachable,
        Error::EnvelopeUnavailable => TsouStatus::EnvelopeUnavailable,
        Error::DecayFit(_) => TsouStatus::DecayFit,
        Error::InfeasibleBudget { .. } => TsouStatus::InfeasibleBudget,
        Error::Internal(_) => TsouStatus::Internal,
    }
}

fn fail(status: TsouStatus, msg: impl Into<String>) -> TsouStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), TsouStatus>) -> TsouStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TsouStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TsouStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: twosided_ou::Result<T>) -> Result<T, TsouStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), TsouStatus> {
    if p.is_null() {
        Err(fail(TsouStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsou_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator, 0 when there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tsou_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds the fundamental solution for `a` in (-1, 0) on `[0, max_interval]`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_fundamental_new(
    a: f64,
    max_interval: usize,
    out: *mut *mut TsouFundamental,
) -> TsouStatus {
    guard(|| {
        non_null(out, "out")?;
        let fs = lib(FundamentalSolution::build(a, max_interval))?;
        *out = Box::into_raw(Box::new(TsouFundamental(fs)));
        Ok(())
    })
}

/// `r(s)`; zero for `s < 0`.
///
/// # Safety
/// `h` must come from [`tsou_fundamental_new`]; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_fundamental_eval(
    h: *const TsouFundamental,
    s: f64,
    out: *mut f64,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        if !s.is_finite() || s > (*h).0.max_interval() as f64 {
            return Err(fail(
                TsouStatus::InvalidArgument,
                format!("s = {s} outside [0, {}]", (*h).0.max_interval()),
            ));
        }
        *out = (*h).0.eval(s);
        Ok(())
    })
}

/// Fitted decay envelope `|r(s)| <= c exp(-lambda s)`.
///
/// # Safety
/// `h` must come from [`tsou_fundamental_new`]; `lambda` and `c` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tsou_fundamental_decay(
    h: *const TsouFundamental,
    lambda: *mut f64,
    c: *mut f64,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(lambda, "lambda")?;
        non_null(c, "c")?;
        let d = lib((*h).0.decay().ok_or(Error::EnvelopeUnavailable))?;
        *lambda = d.lambda;
        *c = d.c;
        Ok(())
    })
}

/// # Safety
/// `h` must be null or come from [`tsou_fundamental_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsou_fundamental_free(h: *mut TsouFundamental) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Defaults matching the command-line tool.
#[no_mangle]
pub extern "C" fn tsou_sim_config_default() -> TsouSimConfig {
    let d = RunConfig::default();
    TsouSimConfig {
        a: d.a,
        dt: d.dt,
        tol: d.tol,
        k_f: d.k_f,
        t_left: d.t_left,
        t_right: d.t_end,
        mean: d.mean,
        stddev: d.stddev,
        seed: d.seed,
        kind: TsouKind::Delay,
    }
}

/// Samples a driver and assembles one realization on `[t_left, t_right]`.
///
/// # Safety
/// `cfg` must be valid for a read and `out` for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_simulate(
    cfg: *const TsouSimConfig,
    out: *mut *mut TsouRealization,
) -> TsouStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        let c = *cfg;
        let run = RunConfig {
            a: c.a,
            dt: c.dt,
            tol: c.tol,
            k_f: c.k_f,
            t_left: c.t_left,
            t_end: c.t_right,
            mean: c.mean,
            stddev: c.stddev,
            seed: c.seed,
            kind: match c.kind {
                TsouKind::Delay => SampleKind::Delay,
                TsouKind::Anticipation => SampleKind::Anticipation,
            },
            workers: 1,
            ..RunConfig::default()
        };
        let sim = lib(simulate(&run))?;
        *out = Box::into_raw(Box::new(TsouRealization(sim)));
        Ok(())
    })
}

/// Number of grid points on the output window.
///
/// # Safety
/// `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_realization_len(
    h: *const TsouRealization,
    out: *mut usize,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        *out = (*h).0.x.len();
        Ok(())
    })
}

/// The constant `b0` of the realization.
///
/// # Safety
/// `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_realization_b0(
    h: *const TsouRealization,
    out: *mut f64,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        *out = (*h).0.b0;
        Ok(())
    })
}

/// Anchored residual of the process equation; NaN when the window is
/// shorter than one unit.
///
/// # Safety
/// `h` must come from [`tsou_simulate`]; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tsou_realization_residual(
    h: *const TsouRealization,
    out: *mut f64,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(out, "out")?;
        *out = (*h).0.residual.map_or(f64::NAN, |r| r.anchored);
        Ok(())
    })
}

/// Copies one series into `buf`, which must hold at least
/// [`tsou_realization_len`] values.
///
/// # Safety
/// `h` must come from [`tsou_simulate`]; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tsou_realization_copy(
    h: *const TsouRealization,
    series: TsouSeries,
    buf: *mut f64,
    len: usize,
) -> TsouStatus {
    guard(|| {
        non_null(h, "handle")?;
        non_null(buf, "buf")?;
        let sim = &(*h).0;
        let values = match series {
            TsouSeries::Time => sim.times(),
            TsouSeries::W => sim.w.values(),
            TsouSeries::X => sim.x.values(),
            TsouSeries::A => sim.a_values(),
        };
        if len < values.len() {
            return Err(fail(
                TsouStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// # Safety
/// `h` must be null or come from [`tsou_simulate`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsou_realization_free(h: *mut TsouRealization) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
