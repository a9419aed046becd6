//! C ABI for the poisson-forge kernel.
//!
//! The surface mirrors the command-line front end: a session handle fixes
//! the truncation order, commands take JSON documents and return JSON
//! staged reports. Strings returned by the library are owned by the
//! caller and must be released with `pf_string_free`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use poisson_forge::cli::{self, Cli, Command, Format};
use poisson_forge::report::Status;

/// Opaque session: truncation order plus the last error message and
/// status. Handles are not thread-safe; use one per thread.
pub struct PfSession {
    order: u32,
    last_error: Option<CString>,
    last_status: i32,
}

/// Status codes mirroring the CLI exit codes.
pub const PF_STATUS_PASS: i32 = 0;
pub const PF_STATUS_FAIL: i32 = 1;
pub const PF_STATUS_ERROR: i32 = 2;
pub const PF_STATUS_USAGE: i32 = 3;

/// Create a session with the given truncation order (0 picks the default).
#[no_mangle]
pub extern "C" fn pf_session_new(order: u32) -> *mut PfSession {
    let order = if order == 0 { 8 } else { order };
    Box::into_raw(Box::new(PfSession {
        order,
        last_error: None,
        last_status: PF_STATUS_PASS,
    }))
}

/// Release a session created by [`pf_session_new`].
///
/// # Safety
/// `session` must be a pointer returned by `pf_session_new` that has not
/// been freed yet, or null.
#[no_mangle]
pub unsafe extern "C" fn pf_session_free(session: *mut PfSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Version string of the underlying kernel; statically allocated.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!("poisson-forge ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this session, or null.
///
/// # Safety
/// `session` must be a live session pointer. The returned string is owned
/// by the session and invalidated by the next call on it.
#[no_mangle]
pub unsafe extern "C" fn pf_last_error(session: *const PfSession) -> *const c_char {
    match session.as_ref().and_then(|s| s.last_error.as_ref()) {
        Some(msg) => msg.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Status of the last run: 0 pass, 1 fail, 2 error, 3 usage.
///
/// # Safety
/// `session` must be a live session pointer or null.
#[no_mangle]
pub unsafe extern "C" fn pf_last_status(session: *const PfSession) -> i32 {
    session.as_ref().map_or(PF_STATUS_USAGE, |s| s.last_status)
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a `pf_` function that
/// yields an owned string, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn set_error(session: &mut PfSession, status: i32, message: &str) {
    session.last_status = status;
    session.last_error = CString::new(message).ok();
}

fn build_command(verb: &str, input: String, option: Option<String>) -> Result<Command, String> {
    let need = |opt: Option<String>, what: &str| -> Result<String, String> {
        opt.ok_or_else(|| format!("verb {verb:?} needs the {what} option"))
    };
    Ok(match verb {
        "jacobi" => Command::Jacobi { input },
        "split" => Command::Split { input },
        "linearize" => Command::Linearize {
            input,
            algebra: need(option, "algebra")?,
        },
        "divide" => Command::Divide {
            model: need(option, "model")?,
            input,
        },
        "average" => Command::Average { input },
        "coupling-check" => Command::CouplingCheck { input },
        "path" => Command::Path { input },
        "equivariant-split" => Command::EquivariantSplit { input },
        "equivariant-linearize" => Command::EquivariantLinearize { input },
        "demo" => Command::Demo {
            name: if input.is_empty() { None } else { Some(input) },
            list: false,
        },
        other => return Err(format!("unknown verb {other:?}")),
    })
}

/// Run a command with a JSON input document (or a demo name for the
/// `demo` verb) and an optional second argument (the model for `divide`,
/// the algebra for `linearize`). Returns the JSON staged report as an
/// owned string, or null on a usage-level failure; consult
/// `pf_last_status` and `pf_last_error` either way.
///
/// # Safety
/// `session` must be a live session pointer; `verb` and `input` must be
/// valid NUL-terminated UTF-8 strings; `option` may be null.
#[no_mangle]
pub unsafe extern "C" fn pf_run(
    session: *mut PfSession,
    verb: *const c_char,
    input: *const c_char,
    option: *const c_char,
) -> *mut c_char {
    let Some(session) = session.as_mut() else {
        return std::ptr::null_mut();
    };
    let (Some(verb), Some(input)) = (read_str(verb), read_str(input)) else {
        set_error(session, PF_STATUS_USAGE, "verb and input must be valid UTF-8");
        return std::ptr::null_mut();
    };
    let option = read_str(option).map(str::to_owned);
    let command = match build_command(verb, input.to_owned(), option) {
        Ok(c) => c,
        Err(msg) => {
            set_error(session, PF_STATUS_USAGE, &msg);
            return std::ptr::null_mut();
        }
    };
    let cli = Cli {
        order: session.order,
        format: Format::Json,
        out: None,
        command,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let report = cli::run_command(&cli);
        let status = match report.status {
            Status::Pass => PF_STATUS_PASS,
            Status::Fail => PF_STATUS_FAIL,
            Status::Error => PF_STATUS_ERROR,
        };
        (status, report.to_json())
    }));
    match outcome {
        Ok((status, json)) => {
            session.last_status = status;
            session.last_error = None;
            CString::new(json).map_or(std::ptr::null_mut(), CString::into_raw)
        }
        Err(_) => {
            set_error(session, PF_STATUS_ERROR, "internal panic");
            std::ptr::null_mut()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn run(
        session: *mut PfSession,
        verb: &str,
        input: &str,
        option: Option<&str>,
    ) -> (i32, Option<String>) {
        let v = CString::new(verb).unwrap();
        let i = CString::new(input).unwrap();
        let o = option.map(|o| CString::new(o).unwrap());
        unsafe {
            let out = pf_run(
                session,
                v.as_ptr(),
                i.as_ptr(),
                o.as_ref().map_or(std::ptr::null(), |c| c.as_ptr()),
            );
            let text = if out.is_null() {
                None
            } else {
                let s = CStr::from_ptr(out).to_str().unwrap().to_owned();
                pf_string_free(out);
                Some(s)
            };
            (pf_last_status(session), text)
        }
    }

    #[test]
    fn session_round_trip() {
        let session = pf_session_new(6);
        let (status, text) = run(session, "demo", "jacobi-so3", None);
        assert_eq!(status, PF_STATUS_PASS);
        let parsed: serde_json::Value = serde_json::from_str(&text.unwrap()).unwrap();
        assert_eq!(parsed["status"], "pass");
        unsafe { pf_session_free(session) };
    }

    #[test]
    fn error_kinds_surface() {
        let session = pf_session_new(6);
        // Euler field is not tangent: report-level error, stable kind
        let euler = r#"{
            "vars": ["x","y","z"], "order": 6, "degree": 1,
            "components": [
                {"idx":[0],"jet":{"vars":["x","y","z"],"order":6,"terms":[{"mono":[1,0,0],"coeff":"1"}]}},
                {"idx":[1],"jet":{"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,1,0],"coeff":"1"}]}},
                {"idx":[2],"jet":{"vars":["x","y","z"],"order":6,"terms":[{"mono":[0,0,1],"coeff":"1"}]}}
            ]
        }"#;
        let (status, text) = run(session, "divide", euler, Some("so3"));
        assert_eq!(status, PF_STATUS_ERROR);
        let parsed: serde_json::Value = serde_json::from_str(&text.unwrap()).unwrap();
        assert_eq!(parsed["error"]["kind"], "NotTangent");
        // unknown verbs are usage errors with a message
        let (status, text) = run(session, "frobnicate", "{}", None);
        assert_eq!(status, PF_STATUS_USAGE);
        assert!(text.is_none());
        unsafe {
            assert!(!pf_last_error(session).is_null());
            pf_session_free(session);
        }
    }

    #[test]
    fn version_is_static() {
        let v = pf_version();
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert!(s.starts_with("poisson-forge"));
    }
}
