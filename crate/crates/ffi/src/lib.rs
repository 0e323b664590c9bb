//! C ABI over the permdtc library.
//!
//! Every fallible function returns a [`PdStatus`]; the message of the most
//! recent failure on the calling thread is available from
//! [`pd_last_error_message`]. Handles are opaque and must be released with
//! their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use permdtc::model::{build_floquet, kac_coefficient, sample_disorder, FloquetOperator, ModelConfig};
use permdtc::spectral::{diagonalize_unitary, gap_statistics, level_ratio, QuasiSpectrum};
use permdtc::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input string or out-of-range argument.
    InvalidArgument = 2,
    /// Configuration or size error.
    Config = 3,
    /// Numerical or linear algebra failure.
    Numerical = 4,
    /// Output buffer shorter than required.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
    Other = 7,
}

/// Floquet operator of one disorder realization, with its spectrum computed on demand.
pub struct PdFloquet {
    op: FloquetOperator,
    spectrum: Option<QuasiSpectrum>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> PdStatus {
    match e {
        Error::Config(_) | Error::Size(_) | Error::Serde(_) => PdStatus::Config,
        Error::Numerical(_)
        | Error::LinAlg(_)
        | Error::NonConvergence { .. }
        | Error::Pole(_)
        | Error::BranchAmbiguity { .. }
        | Error::Validation(_) => PdStatus::Numerical,
        _ => PdStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PdStatus>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside permdtc");
            PdStatus::Panic
        }
    }
}

fn fail(e: Error) -> PdStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> PdStatus {
    set_error(format!("{what} is null"));
    PdStatus::NullPointer
}

unsafe fn handle<'a>(h: *mut PdFloquet) -> Result<&'a mut PdFloquet, PdStatus> {
    h.as_mut().ok_or_else(|| null("handle"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, PdStatus> {
    p.as_mut().ok_or_else(|| null("output pointer"))
}

fn spectrum(h: &mut PdFloquet) -> Result<&QuasiSpectrum, PdStatus> {
    if h.spectrum.is_none() {
        h.spectrum = Some(diagonalize_unitary(h.op.matrix.as_ref()).map_err(fail)?);
    }
    Ok(h.spectrum.as_ref().expect("spectrum was just computed"))
}

/// Builds the Floquet operator of realization `sample` of the model described
/// by the TOML text `model_toml` (a `ModelConfig` table) under master seed `seed`.
///
/// # Safety
/// `model_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_build(
    model_toml: *const c_char,
    seed: u64,
    sample: u64,
    out: *mut *mut PdFloquet,
) -> PdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = std::ptr::null_mut();
        if model_toml.is_null() {
            return Err(null("model_toml"));
        }
        let text = CStr::from_ptr(model_toml).to_str().map_err(|e| {
            set_error(format!("model_toml is not UTF-8: {e}"));
            PdStatus::InvalidArgument
        })?;
        let config = ModelConfig::from_toml(text).map_err(fail)?;
        let r = sample_disorder(&config, seed, sample);
        let op = build_floquet(&config, &r).map_err(fail)?;
        *out = Box::into_raw(Box::new(PdFloquet { op, spectrum: None }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `h` must come from [`pd_floquet_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_free(h: *mut PdFloquet) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Hilbert-space dimension 2^L.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_dimension(h: *mut PdFloquet, out: *mut usize) -> PdStatus {
    guard(|| {
        *out_ref(out)? = handle(h)?.op.dimension();
        Ok(())
    })
}

/// max |(U†U − 1)_{ab}|.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_unitarity_error(h: *mut PdFloquet, out: *mut f64) -> PdStatus {
    guard(|| {
        *out_ref(out)? = handle(h)?.op.unitarity_error();
        Ok(())
    })
}

/// Copies the sorted quasi-energies in (−π, π] into `buf`, which must hold the full dimension.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_quasi_energies(h: *mut PdFloquet, buf: *mut f64, len: usize) -> PdStatus {
    guard(|| {
        let h = handle(h)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let spec = spectrum(h)?;
        if len < spec.len() {
            set_error(format!("buffer holds {len} values but {} are needed", spec.len()));
            return Err(PdStatus::BufferTooSmall);
        }
        std::slice::from_raw_parts_mut(buf, spec.len()).copy_from_slice(&spec.energies);
        Ok(())
    })
}

/// Mean of log10 of the consecutive quasi-energy spacings.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_mean_log10_gap(h: *mut PdFloquet, out: *mut f64) -> PdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = gap_statistics(&spectrum(handle(h)?)?.energies).mean_log10;
        Ok(())
    })
}

/// Mean adjacent-gap ratio ⟨r⟩ of the full spectrum.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pd_floquet_level_ratio(h: *mut PdFloquet, out: *mut f64) -> PdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = level_ratio(&spectrum(handle(h)?)?.energies).map_err(fail)?;
        Ok(())
    })
}

/// Number of length-`n` unit configurations whose minimal period is exactly `k`; zero when `k` does not divide `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_count_min_period_states(n: usize, k: usize, out: *mut u64) -> PdStatus {
    guard(|| {
        let out = out_ref(out)?;
        if !(1..64).contains(&n) {
            set_error("unit period must lie in 1..64");
            return Err(PdStatus::InvalidArgument);
        }
        *out = permdtc::basis::count_min_period_states(n).get(&k).copied().unwrap_or(0);
        Ok(())
    })
}

/// Kac normalisation of power-law couplings with exponent `kappa` on `sites` sites.
#[no_mangle]
pub extern "C" fn pd_kac_coefficient(sites: f64, kappa: f64) -> f64 {
    kac_coefficient(sites, kappa)
}

/// Copies the last error message of this thread, NUL-terminated and truncated to
/// `len`, and returns its full length in bytes without the terminator.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn pd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
