//! C interface to the `hypersac` optimizer.
//!
//! Configurations and reports are opaque handles owned by the caller and
//! released with their `*_free` function. Every fallible call returns a
//! [`HypersacStatus`]; on failure a description is available from
//! [`hypersac_last_error`] on the same thread. Strings returned by the
//! library are released with [`hypersac_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hypersac::env::{compute_reward, RewardConfig};
use hypersac::harness::{emit_metrics, run_random_search, run_sac_hpo, RunConfig, RunReport, Variant};
use hypersac::replay::mix_closed_form;
use hypersac::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypersacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Invalid configuration or arguments.
    ConfigError = 3,
    /// Failure while running, including I/O.
    RuntimeError = 4,
    /// A loss did not clear the reward baseline.
    BaselineTooHigh = 5,
    /// Index or buffer length out of range.
    OutOfRange = 6,
    /// Internal panic; the handle involved should be considered unusable.
    Panic = 7,
}

/// Opaque run configuration.
pub struct HypersacConfig {
    inner: RunConfig,
}

/// Opaque result of one run.
pub struct HypersacReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn status_of(e: &Error) -> HypersacStatus {
    match e {
        Error::BaselineTooHigh { .. } => HypersacStatus::BaselineTooHigh,
        e if e.is_config() => HypersacStatus::ConfigError,
        _ => HypersacStatus::RuntimeError,
    }
}

/// Runs `f`, turning errors and panics into a status and the thread's
/// last-error message.
fn guard(f: impl FnOnce() -> Result<(), (HypersacStatus, String)>) -> HypersacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HypersacStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HypersacStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (HypersacStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HypersacStatus, String) {
    (HypersacStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HypersacStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HypersacStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HypersacStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (HypersacStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Description of the last failure on this thread, or null after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hypersac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hypersac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hypersac_config_default(out: *mut *mut HypersacConfig) -> HypersacStatus {
    guard(|| {
        let cfg = Box::new(HypersacConfig {
            inner: RunConfig::default(),
        });
        write_out(out, Box::into_raw(cfg), "out")
    })
}

/// Parses a JSON configuration; absent fields take their defaults.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for writing
/// a pointer.
#[no_mangle]
pub unsafe extern "C" fn hypersac_config_from_json(
    json: *const c_char,
    out: *mut *mut HypersacConfig,
) -> HypersacStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let inner = RunConfig::from_json(text).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(HypersacConfig { inner })), "out")
    })
}

/// Serializes a configuration as JSON. Release the string with
/// [`hypersac_string_free`].
///
/// # Safety
/// `config` must come from this library; `out` must be valid for writing a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn hypersac_config_to_json(
    config: *const HypersacConfig,
    out: *mut *mut c_char,
) -> HypersacStatus {
    guard(|| {
        let cfg = ref_arg(config, "config")?;
        let s = CString::new(cfg.inner.to_json()).expect("json has no nul");
        write_out(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn hypersac_config_free(config: *mut HypersacConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn hypersac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// One SAC tuning run. `variant` is `full`, `sq-hpo`, `hmr-hpo` or `base`;
/// null selects the configured variant.
///
/// # Safety
/// `config` must come from this library; `variant` must be null or a
/// nul-terminated string; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn hypersac_run(
    config: *const HypersacConfig,
    variant: *const c_char,
    seed: u64,
    out: *mut *mut HypersacReport,
) -> HypersacStatus {
    guard(|| {
        let cfg = ref_arg(config, "config")?;
        let variant = if variant.is_null() {
            cfg.inner.variant
        } else {
            str_arg(variant, "variant")?.parse::<Variant>().map_err(lib_err)?
        };
        let inner = run_sac_hpo(&cfg.inner, variant, seed).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(HypersacReport { inner })), "out")
    })
}

/// Random search with the configuration's evaluation budget.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for writing a
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn hypersac_random_search(
    config: *const HypersacConfig,
    seed: u64,
    out: *mut *mut HypersacReport,
) -> HypersacStatus {
    guard(|| {
        let cfg = ref_arg(config, "config")?;
        let inner = run_random_search(&cfg.inner, seed).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(HypersacReport { inner })), "out")
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_free(report: *mut HypersacReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_episodes(report: *const HypersacReport, out: *mut usize) -> HypersacStatus {
    guard(|| write_out(out, ref_arg(report, "report")?.inner.records.len(), "out"))
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_evaluations(
    report: *const HypersacReport,
    out: *mut usize,
) -> HypersacStatus {
    guard(|| write_out(out, ref_arg(report, "report")?.inner.evaluations, "out"))
}

/// Best loss found; `OutOfRange` when nothing was evaluated.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_best_loss(report: *const HypersacReport, out: *mut f64) -> HypersacStatus {
    guard(|| {
        let best = ref_arg(report, "report")?
            .inner
            .best_loss
            .ok_or((HypersacStatus::OutOfRange, "report has no evaluations".to_string()))?;
        write_out(out, best, "out")
    })
}

/// Average reward of 0-based episode `index`.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_avg_reward(
    report: *const HypersacReport,
    index: usize,
    out: *mut f64,
) -> HypersacStatus {
    guard(|| {
        let records = &ref_arg(report, "report")?.inner.records;
        let r = records.get(index).ok_or_else(|| {
            (
                HypersacStatus::OutOfRange,
                format!("episode index {index} out of range (0..{})", records.len()),
            )
        })?;
        write_out(out, r.avg_reward, "out")
    })
}

/// Copies the best hyper-parameter vector into `buf`. `len_out` receives
/// the vector's length; when `buf_len` is too small nothing is copied and
/// `OutOfRange` is returned.
///
/// # Safety
/// `buf` must be valid for `buf_len` writes (it may be null when `buf_len`
/// is 0); `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_best_lambda(
    report: *const HypersacReport,
    buf: *mut f64,
    buf_len: usize,
    len_out: *mut usize,
) -> HypersacStatus {
    guard(|| {
        let lambda = &ref_arg(report, "report")?.inner.best_lambda;
        write_out(len_out, lambda.len(), "len_out")?;
        if buf_len < lambda.len() {
            return Err((
                HypersacStatus::OutOfRange,
                format!("buffer holds {buf_len} values, need {}", lambda.len()),
            ));
        }
        if !lambda.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(lambda.as_ptr(), buf, lambda.len());
        }
        Ok(())
    })
}

/// Writes the report's JSON-Lines metrics and summary CSV into `dir`.
///
/// # Safety
/// `report` must come from this library; `dir` must be a nul-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn hypersac_report_write_metrics(
    report: *const HypersacReport,
    dir: *const c_char,
) -> HypersacStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let dir = str_arg(dir, "dir")?;
        emit_metrics(std::slice::from_ref(&r.inner), Path::new(dir)).map_err(lib_err)?;
        Ok(())
    })
}

/// `1/(loss − baseline)`; `BaselineTooHigh` unless
/// `loss > baseline + min_gap`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hypersac_compute_reward(
    loss: f64,
    baseline: f64,
    min_gap: f64,
    out: *mut f64,
) -> HypersacStatus {
    guard(|| {
        let cfg = RewardConfig {
            baseline,
            min_gap,
            adaptive_margin: None,
        };
        cfg.validate().map_err(lib_err)?;
        write_out(out, compute_reward(loss, &cfg).map_err(lib_err)?, "out")
    })
}

/// Hierarchical mixture of `base` (length `dim`) with `n_partners`
/// partner rows stored row-major in `partners`, written to `out`
/// (length `dim`).
///
/// # Safety
/// `base` and `out` must be valid for `dim` values, `partners` for
/// `n_partners * dim` values.
#[no_mangle]
pub unsafe extern "C" fn hypersac_mix_closed_form(
    base: *const f64,
    dim: usize,
    partners: *const f64,
    n_partners: usize,
    alpha: f64,
    out: *mut f64,
) -> HypersacStatus {
    guard(|| {
        if dim == 0 {
            return Ok(());
        }
        if base.is_null() {
            return Err(null("base"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if n_partners == 0 || !(alpha > 0.0 && alpha < 1.0) {
            return Err((
                HypersacStatus::ConfigError,
                "need at least one partner and alpha in (0, 1)".to_string(),
            ));
        }
        if partners.is_null() {
            return Err(null("partners"));
        }
        let base = std::slice::from_raw_parts(base, dim);
        let flat = std::slice::from_raw_parts(partners, n_partners * dim);
        let rows: Vec<&[f64]> = flat.chunks(dim).collect();
        let mixed = mix_closed_form(base, &rows, alpha).map_err(lib_err)?;
        ptr::copy_nonoverlapping(mixed.as_ptr(), out, dim);
        Ok(())
    })
}
