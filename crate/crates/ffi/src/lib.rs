//! C interface to `paircorr-core`.
//!
//! Objects are opaque handles created by `pc_*_new` and released by the
//! matching `pc_*_free`. Every fallible call returns a [`PcStatus`]; on
//! failure [`pc_last_error`] describes the most recent error on the calling
//! thread. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use paircorr_core::diophantine::{count_condition_a, count_condition_b, CountMode, CountParams};
use paircorr_core::exact::parse_rational;
use paircorr_core::paircorr::{r2_smooth, r2_window, Algorithm, WindowFunction};
use paircorr_core::precision::{Alpha, PhaseTable, SequenceTable};
use paircorr_core::sequences::LacunarySequence;
use paircorr_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    /// Null pointer, malformed string or out-of-range argument.
    InvalidArgument = 1,
    /// Work or precision budget exceeded, or an undecidable tie.
    Budget = 2,
    /// The sequence cannot be certified for this operation.
    Sequence = 3,
    Internal = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcAlgorithm {
    Direct = 0,
    Sorted = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcCountMode {
    Oracle = 0,
    Fast = 1,
    Windowed = 2,
}

/// A parsed lacunary sequence.
pub struct PcSequence(LacunarySequence);

/// Phases `{alpha a(x)}`, `1 <= x <= N`, at 128-bit resolution.
pub struct PcPhases(PhaseTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PcStatus {
    match e {
        _ if e.is_budget() => PcStatus::Budget,
        Error::NotCertified(_) | Error::InvalidSequence(_) | Error::IndexOutOfRange { .. } => {
            PcStatus::Sequence
        }
        Error::Io { .. } => PcStatus::Internal,
        _ => PcStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PcStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(Error::invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::invalid(format!("{what} is not UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Error> {
    if p.is_null() {
        Err(Error::invalid(format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or "" if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `geometric:<ratio>`, `exp` or `custom:<path>`.
///
/// # Safety
/// `spec` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pc_sequence_new(spec: *const c_char, out: *mut *mut PcSequence) -> PcStatus {
    guard(|| {
        non_null(out, "out")?;
        let seq = LacunarySequence::parse_spec(read_str(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(PcSequence(seq)));
        Ok(())
    })
}

/// # Safety
/// `seq` must come from [`pc_sequence_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pc_sequence_free(seq: *mut PcSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Computes the phases of the first `n` terms dilated by `alpha` (decimal or
/// `p/q`). `guard_bits` of 0 selects the default guard.
///
/// # Safety
/// `seq` must be a live handle, `alpha` a valid C string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_phases_new(
    seq: *const PcSequence,
    alpha: *const c_char,
    n: usize,
    guard_bits: u32,
    out: *mut *mut PcPhases,
) -> PcStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(out, "out")?;
        let alpha = Alpha::parse(read_str(alpha, "alpha")?)?;
        let g = if guard_bits == 0 {
            paircorr_core::precision::DEFAULT_GUARD
        } else {
            guard_bits
        };
        let table = SequenceTable::new(&(*seq).0, n, g)?;
        let phases = PhaseTable::new(&table, &alpha)?;
        *out = Box::into_raw(Box::new(PcPhases(phases)));
        Ok(())
    })
}

/// # Safety
/// `phases` must come from [`pc_phases_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pc_phases_free(phases: *mut PcPhases) {
    if !phases.is_null() {
        drop(Box::from_raw(phases));
    }
}

/// Number of phases, or 0 for a null handle.
///
/// # Safety
/// `phases` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pc_phases_len(phases: *const PcPhases) -> usize {
    if phases.is_null() {
        0
    } else {
        (*phases).0.len()
    }
}

/// Copies the phases as doubles in `[0, 1)` into `buf`, which must hold
/// `pc_phases_len` values.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pc_phases_copy(phases: *const PcPhases, buf: *mut f64, len: usize) -> PcStatus {
    guard(|| {
        non_null(phases, "phases")?;
        non_null(buf, "buf")?;
        let pts = (*phases).0.points();
        if len < pts.len() {
            return Err(Error::invalid(format!("buffer holds {len}, need {}", pts.len())));
        }
        for (i, p) in pts.iter().enumerate() {
            *buf.add(i) = p.theta();
        }
        Ok(())
    })
}

/// `R2` for the indicator window of width `s`.
///
/// # Safety
/// `phases` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_r2_window(
    phases: *const PcPhases,
    s: f64,
    algorithm: PcAlgorithm,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        non_null(phases, "phases")?;
        non_null(out, "out")?;
        let alg = match algorithm {
            PcAlgorithm::Direct => Algorithm::Direct,
            PcAlgorithm::Sorted => Algorithm::Sorted,
        };
        *out = r2_window(&(*phases).0.points(), s, alg)?.value;
        Ok(())
    })
}

/// Smoothed `R2` for a window such as `triangle:1` or `gaussian:0.5`.
///
/// # Safety
/// `phases` must be a live handle, `window` a valid C string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_r2_smooth(
    phases: *const PcPhases,
    window: *const c_char,
    out: *mut f64,
) -> PcStatus {
    guard(|| {
        non_null(phases, "phases")?;
        non_null(out, "out")?;
        let w: WindowFunction = read_str(window, "window")?.parse()?;
        *out = r2_smooth(&(*phases).0.points(), &w)?.value;
        Ok(())
    })
}

unsafe fn count(
    seq: *const PcSequence,
    n: usize,
    epsilon: *const c_char,
    mode: PcCountMode,
    out: *mut u64,
    condition_b: bool,
) -> PcStatus {
    guard(|| {
        non_null(seq, "seq")?;
        non_null(out, "out")?;
        let eps = parse_rational(read_str(epsilon, "epsilon")?)?;
        let params = CountParams::from_epsilon(n, &eps)?;
        let mode = match mode {
            PcCountMode::Oracle => CountMode::Oracle,
            PcCountMode::Fast => CountMode::Fast,
            PcCountMode::Windowed => CountMode::Windowed,
        };
        let r = if condition_b {
            count_condition_b(&(*seq).0, &params, mode)?
        } else {
            count_condition_a(&(*seq).0, &params, mode)?
        };
        *out = r.count;
        Ok(())
    })
}

/// `#{1 <= n <= M, x != y <= N : n |a(x) - a(y)| < K}` with
/// `M = floor(N^(1+epsilon))` and `K = N^epsilon`.
///
/// # Safety
/// `seq` must be a live handle, `epsilon` a valid C string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pc_count_a(
    seq: *const PcSequence,
    n: usize,
    epsilon: *const c_char,
    mode: PcCountMode,
    out: *mut u64,
) -> PcStatus {
    count(seq, n, epsilon, mode, out, false)
}

/// Six-tuple count of the variance condition with the same `M` and `K`.
///
/// # Safety
/// As for [`pc_count_a`].
#[no_mangle]
pub unsafe extern "C" fn pc_count_b(
    seq: *const PcSequence,
    n: usize,
    epsilon: *const c_char,
    mode: PcCountMode,
    out: *mut u64,
) -> PcStatus {
    count(seq, n, epsilon, mode, out, true)
}
