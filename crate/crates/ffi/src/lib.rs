//! C ABI over `stc_core`.
//!
//! Programs live behind an opaque `StcProgram` handle. Every fallible call
//! returns an `StcStatus`; on failure a message is available from
//! `stc_last_error` until the next call on the same thread. Strings handed
//! out by the library are NUL-terminated UTF-8 and must be released with
//! `stc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stc_core::check::{check_fuzz, CheckOptions};
use stc_core::dot::export_dot;
use stc_core::exec::ExecConfig;
use stc_core::fuzz::FuzzConfig;
use stc_core::program::{parse_program, run_program, Mode, Program};
use stc_core::Error;

/// Result codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StcStatus {
    Ok = 0,
    CheckFailed = 1,
    Validation = 2,
    Runtime = 3,
    InvalidArgument = 4,
    Panic = 5,
}

/// A parsed and validated program.
pub struct StcProgram {
    inner: Program,
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

fn from_core(e: &Error) -> StcStatus {
    set_error(e.to_string());
    if e.is_validation() {
        StcStatus::Validation
    } else {
        StcStatus::Runtime
    }
}

fn invalid(msg: &str) -> StcStatus {
    set_error(msg);
    StcStatus::InvalidArgument
}

fn guard(f: impl FnOnce() -> StcStatus) -> StcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            StcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, StcStatus> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> StcStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            StcStatus::Ok
        }
        Err(_) => invalid("result contains a NUL byte"),
    }
}

/// Parses a JSON program. On success `*out` receives a handle owned by the
/// caller, to be released with `stc_program_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_program_parse(json: *const c_char, out: *mut *mut StcProgram) -> StcStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_program(text) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(StcProgram { inner: p }));
                StcStatus::Ok
            }
            Err(e) => from_core(&e),
        }
    })
}

/// # Safety
/// `program` must be null or a handle from `stc_program_parse` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stc_program_free(program: *mut StcProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Runs the program on its own input. `mode` is one of `seq`,
/// `interleaved`, `pipeline`, `auto`; `workers == 0` means one per CPU.
/// `*out_json` receives `{"output": [...], "final_state": {...}}`.
///
/// # Safety
/// `program` must be a live handle, `mode` a valid string, `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_program_run(
    program: *const StcProgram,
    mode: *const c_char,
    workers: u32,
    out_json: *mut *mut c_char,
) -> StcStatus {
    guard(|| {
        if program.is_null() || out_json.is_null() {
            return invalid("program or out_json is null");
        }
        *out_json = ptr::null_mut();
        let mode: Mode = match read_str(mode, "mode").map(str::parse) {
            Ok(Ok(m)) => m,
            Ok(Err(msg)) => return invalid(&msg),
            Err(s) => return s,
        };
        let cfg = if workers == 0 { ExecConfig::default() } else { ExecConfig::with_workers(workers as usize) };
        match run_program(&(*program).inner, mode, &cfg) {
            Ok(r) => write_string(out_json, r.to_json().to_string()),
            Err(e) => from_core(&e),
        }
    })
}

/// Renders the thread graph as DOT.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_program_dot(program: *const StcProgram, extended: bool, out: *mut *mut c_char) -> StcStatus {
    guard(|| {
        if program.is_null() || out.is_null() {
            return invalid("program or out is null");
        }
        write_string(out, export_dot(&(*program).inner.graph, extended))
    })
}

/// Canonical JSON serialization of the program.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_program_to_json(program: *const StcProgram, out: *mut *mut c_char) -> StcStatus {
    guard(|| {
        if program.is_null() || out.is_null() {
            return invalid("program or out is null");
        }
        write_string(out, (*program).inner.serialize())
    })
}

/// Runs the fuzz equivalence suite. `*passed` receives the number of
/// trials on which every executor agreed. Returns `CheckFailed` when any
/// trial diverged.
///
/// # Safety
/// `passed` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stc_check_fuzz(seed: u64, trials: u32, passed: *mut u32) -> StcStatus {
    guard(|| {
        let cfg = FuzzConfig { seed, trials: trials as usize, ..FuzzConfig::default() };
        let report = check_fuzz(&cfg, &CheckOptions::default());
        if !passed.is_null() {
            *passed = report.passed() as u32;
        }
        match report.first_failure().and_then(|t| t.divergence.as_ref()) {
            Some(d) => {
                set_error(d.to_string());
                StcStatus::CheckFailed
            }
            None => StcStatus::Ok,
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn stc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn stc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
