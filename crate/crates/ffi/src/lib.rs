//! C ABI over the batch driver. Configurations live behind an opaque
//! handle; results come back as numbers or as JSON strings owned by the
//! library. Every entry point returns an [`AcfStatus`]; on failure the
//! message is available from [`acf_last_error`] on the same thread.

use acforms::cli::{self, RunConfig, Suite};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Status codes. `ACF_STATUS_COMPUTATION` and `ACF_STATUS_USAGE` match the
/// command-line exit codes 1 and 2.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcfStatus {
    Ok = 0,
    Computation = 1,
    Usage = 2,
    NullArgument = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// Parsed run configuration.
pub struct AcfConfig {
    inner: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AcfStatus, String);

impl From<acforms::Error> for Failure {
    fn from(e: acforms::Error) -> Self {
        let status = if cli::exit_code(&e) == 2 { AcfStatus::Usage } else { AcfStatus::Computation };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior nul removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard<F>(body: F) -> AcfStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(AcfStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            set_last_error(None);
            AcfStatus::Ok
        }
        Err(Failure(status, msg)) => {
            set_last_error(Some(msg));
            status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AcfStatus::NullArgument, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(AcfStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn config<'a>(p: *const AcfConfig) -> Result<&'a RunConfig, Failure> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("config"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

fn serialization(e: serde_json::Error) -> Failure {
    Failure(AcfStatus::Computation, e.to_string())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn acf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn acf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses configuration text (dotted key-value lines or JSON).
///
/// # Safety
/// `text` must be null or a nul-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn acf_config_parse(text: *const c_char, out: *mut *mut AcfConfig) -> AcfStatus {
    guard(|| {
        let inner = RunConfig::parse(self::text(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(AcfConfig { inner })), "out")
    })
}

/// Reads and parses a configuration file.
///
/// # Safety
/// As for [`acf_config_parse`].
#[no_mangle]
pub unsafe extern "C" fn acf_config_load(path: *const c_char, out: *mut *mut AcfConfig) -> AcfStatus {
    guard(|| {
        let inner = RunConfig::load(Path::new(text(path, "path")?))?;
        write_out(out, Box::into_raw(Box::new(AcfConfig { inner })), "out")
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acf_config_free(cfg: *mut AcfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Canonical dotted-key text of the configuration. Free with
/// [`acf_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn acf_config_canonical(cfg: *const AcfConfig, out: *mut *mut c_char) -> AcfStatus {
    guard(|| {
        let canonical = config(cfg)?.canonical();
        write_out(out, owned_string(canonical), "out")
    })
}

/// Value of the configured functional on the extended structure.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn acf_functional_value(cfg: *const AcfConfig, out: *mut f64) -> AcfStatus {
    guard(|| {
        let (value, _, _) = cli::evaluate_functional(config(cfg)?)?;
        write_out(out, value, "out")
    })
}

/// Classification report as JSON. `lattice_consistent` receives 1 or 0 when
/// not null. Free the string with [`acf_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out_json` must be null or writable;
/// `lattice_consistent` may be null.
#[no_mangle]
pub unsafe extern "C" fn acf_classify(
    cfg: *const AcfConfig,
    out_json: *mut *mut c_char,
    lattice_consistent: *mut c_int,
) -> AcfStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let (report, alpha) = cli::classify_config(config(cfg)?)?;
        let mut value = serde_json::to_value(&report).map_err(serialization)?;
        value["alpha"] = alpha.into();
        if !lattice_consistent.is_null() {
            lattice_consistent.write(report.lattice_consistent() as c_int);
        }
        write_out(out_json, owned_string(value.to_string()), "out_json")
    })
}

/// Runs a named verification suite. The report is written as JSON and
/// `passed` receives 1 or 0 when not null.
///
/// # Safety
/// `cfg` must be a live handle; `suite` a nul-terminated string; `out_json`
/// must be null or writable; `passed` may be null.
#[no_mangle]
pub unsafe extern "C" fn acf_verify(
    cfg: *const AcfConfig,
    suite: *const c_char,
    out_json: *mut *mut c_char,
    passed: *mut c_int,
) -> AcfStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let suite: Suite = text(suite, "suite")?.parse()?;
        let report = cli::run_suite(suite, config(cfg)?)?;
        if !passed.is_null() {
            passed.write(report.passed as c_int);
        }
        write_out(out_json, owned_string(serde_json::to_string(&report).map_err(serialization)?), "out_json")
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
