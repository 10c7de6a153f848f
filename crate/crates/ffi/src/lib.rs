//! C ABI over the flag-case pipeline: load a case file, run it, read the
//! report back as JSON. Handles are opaque; every entry point returns a
//! status code and the last error message is kept per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use azflag::corpus::{self, CaseReport, CorpusError, FlagCase};

/// Status of an FFI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum AzStatus {
    Ok = 0,
    /// File could not be read.
    Io = 1,
    /// Malformed JSON.
    Parse = 2,
    /// Well-formed but invalid case data.
    Validation = 3,
    /// The pipeline rejected the case.
    Compute = 4,
    /// A required pointer argument was null or not valid UTF-8.
    BadArgument = 5,
    /// Internal failure; details via az_last_error.
    Internal = 6,
}

/// Opaque loaded flag case.
pub struct AzCase(FlagCase);

/// Opaque computation report.
pub struct AzReport(CaseReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &CorpusError) -> AzStatus {
    match err {
        CorpusError::Io { .. } => AzStatus::Io,
        CorpusError::Parse { .. } => AzStatus::Parse,
        CorpusError::Validation { .. } => AzStatus::Validation,
    }
}

/// Message of the most recent failure on this thread, or null when the
/// last call succeeded. Valid until the next FFI call on the thread.
#[no_mangle]
pub extern "C" fn az_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

unsafe fn load_common(
    text_or_path: *const c_char,
    out: *mut *mut AzCase,
    from_path: bool,
) -> AzStatus {
    clear_error();
    if text_or_path.is_null() || out.is_null() {
        set_error("null argument");
        return AzStatus::BadArgument;
    }
    let Ok(arg) = CStr::from_ptr(text_or_path).to_str() else {
        set_error("argument is not valid UTF-8");
        return AzStatus::BadArgument;
    };
    let loaded = if from_path {
        corpus::load_flag(Path::new(arg))
    } else {
        corpus::load_flag_str(arg)
    };
    match loaded {
        Ok(case) => {
            *out = Box::into_raw(Box::new(AzCase(case)));
            AzStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            *out = ptr::null_mut();
            status_of(&e)
        }
    }
}

/// Load and validate a case file. On success writes a handle the caller
/// must release with az_case_free.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn az_case_load(path: *const c_char, out: *mut *mut AzCase) -> AzStatus {
    load_common(path, out, true)
}

/// Load and validate a case from a JSON string instead of a file.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn az_case_load_json(json: *const c_char, out: *mut *mut AzCase) -> AzStatus {
    load_common(json, out, false)
}

/// Release a case handle. Null is ignored.
///
/// # Safety
/// `case` must come from az_case_load / az_case_load_json, unreleased.
#[no_mangle]
pub unsafe extern "C" fn az_case_free(case: *mut AzCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// Name of a loaded case; free with az_string_free.
///
/// # Safety
/// `case` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn az_case_name(case: *const AzCase) -> *mut c_char {
    clear_error();
    if case.is_null() {
        set_error("null argument");
        return ptr::null_mut();
    }
    CString::new((*case).0.name.clone())
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Run the full pipeline on a loaded case. On success writes a report
/// handle the caller must release with az_report_free. Verification or
/// computation failures still produce a report (with pass = 0); only
/// infrastructure errors return a non-Ok status.
///
/// # Safety
/// `case` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn az_case_run(case: *const AzCase, out: *mut *mut AzReport) -> AzStatus {
    clear_error();
    if case.is_null() || out.is_null() {
        set_error("null argument");
        return AzStatus::BadArgument;
    }
    let case = &(*case).0;
    match catch_unwind(AssertUnwindSafe(|| corpus::run_case(case))) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(AzReport(report)));
            AzStatus::Ok
        }
        Err(_) => {
            set_error("internal panic during computation");
            *out = ptr::null_mut();
            AzStatus::Internal
        }
    }
}

/// Release a report handle. Null is ignored.
///
/// # Safety
/// `report` must come from az_case_run, unreleased.
#[no_mangle]
pub unsafe extern "C" fn az_report_free(report: *mut AzReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// 1 when the case passed all checks and expected-value comparisons.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn az_report_pass(report: *const AzReport) -> i32 {
    if report.is_null() {
        return 0;
    }
    i32::from((*report).0.pass)
}

/// Certified lower bound as an exact "p/q" string, or null when the
/// pipeline failed; free with az_string_free.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn az_report_delta_bound(report: *const AzReport) -> *mut c_char {
    clear_error();
    if report.is_null() {
        set_error("null argument");
        return ptr::null_mut();
    }
    match &(*report).0.values {
        Some(v) => CString::new(v.delta_bound.to_string())
            .map(CString::into_raw)
            .unwrap_or(ptr::null_mut()),
        None => {
            set_error("report carries no values");
            ptr::null_mut()
        }
    }
}

/// Whole report serialized as JSON (schema azflag-report/1); free with
/// az_string_free.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn az_report_json(report: *const AzReport) -> *mut c_char {
    clear_error();
    if report.is_null() {
        set_error("null argument");
        return ptr::null_mut();
    }
    let mut value = match serde_json::to_value(&(*report).0) {
        Ok(v) => v,
        Err(e) => {
            set_error(&e.to_string());
            return ptr::null_mut();
        }
    };
    value
        .as_object_mut()
        .expect("report serializes to an object")
        .insert("schema".into(), "azflag-report/1".into());
    CString::new(value.to_string())
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an az_* function, unreleased.
#[no_mangle]
pub unsafe extern "C" fn az_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn path_cstr(name: &str) -> CString {
        let p = corpus::default_corpus_dir().join(name);
        CString::new(p.to_str().unwrap()).unwrap()
    }

    #[test]
    fn load_run_read_free() {
        unsafe {
            let mut case: *mut AzCase = ptr::null_mut();
            let status = az_case_load(path_cstr("flag_D.json").as_ptr(), &mut case);
            assert!(status == AzStatus::Ok && !case.is_null());
            let mut report: *mut AzReport = ptr::null_mut();
            assert!(az_case_run(case, &mut report) == AzStatus::Ok);
            assert_eq!(az_report_pass(report), 1);
            let bound = az_report_delta_bound(report);
            assert_eq!(CStr::from_ptr(bound).to_str().unwrap(), "208/205");
            az_string_free(bound);
            let json = az_report_json(report);
            let text = CStr::from_ptr(json).to_str().unwrap();
            let parsed: serde_json::Value = serde_json::from_str(text).unwrap();
            assert_eq!(parsed["schema"], "azflag-report/1");
            assert_eq!(parsed["values"]["delta_bound"], "208/205");
            az_string_free(json);
            az_report_free(report);
            az_case_free(case);
        }
    }

    #[test]
    fn missing_file_reports_io_error() {
        unsafe {
            let mut case: *mut AzCase = ptr::null_mut();
            let path = CString::new("/nonexistent/case.json").unwrap();
            let status = az_case_load(path.as_ptr(), &mut case);
            assert!(status == AzStatus::Io && case.is_null());
            assert!(!az_last_error().is_null());
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut case: *mut AzCase = ptr::null_mut();
            assert!(az_case_load(ptr::null(), &mut case) == AzStatus::BadArgument);
            assert!(az_case_run(ptr::null(), ptr::null_mut()) == AzStatus::BadArgument);
            az_case_free(ptr::null_mut());
            az_string_free(ptr::null_mut());
        }
    }
}
