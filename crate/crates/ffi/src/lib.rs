//! C ABI for the gptc circuit engine.
//!
//! Circuits are opaque `GptcCircuit` handles created by
//! [`gptc_circuit_parse`] and released with [`gptc_circuit_free`]. Every
//! fallible function returns a [`GptcStatus`]; on failure a message is
//! available from [`gptc_last_error`] on the same thread. Strings returned by
//! the library are freed with [`gptc_string_free`].
//!
//! The generated header is `include/gptc.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gptc_core::circuit::enumerate_complete_foliations;
use gptc_core::dsl::{compile, parse_any, render_diagnostics, serialize_circuit, to_json, CircuitDocument, CompiledCircuit};
use gptc_core::engine::{evaluate_circuit, EngineError, OutcomeAssignment};
use gptc_core::theory::{composite_counting_check, CountingModel};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GptcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// The circuit text could not be parsed.
    ParseError = 3,
    /// The document parsed but is not a valid closed circuit.
    InvalidCircuit = 4,
    /// Bad outcome assignment or foliation index.
    InvalidArgument = 5,
    /// Evaluation failed.
    EvaluationError = 6,
    /// A check ran and failed.
    CheckFailed = 7,
    /// An internal panic was caught.
    Panic = 8,
}

/// A compiled circuit.
pub struct GptcCircuit {
    doc: CircuitDocument,
    compiled: CompiledCircuit,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: GptcStatus, msg: impl Into<String>) -> GptcStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> GptcStatus>(f: F) -> GptcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == GptcStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(GptcStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, GptcStatus> {
    if p.is_null() {
        return Err(fail(GptcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(GptcStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a>(c: *const GptcCircuit) -> Result<&'a GptcCircuit, GptcStatus> {
    c.as_ref()
        .ok_or_else(|| fail(GptcStatus::NullPointer, "null circuit handle"))
}

fn into_c_string(s: String, out: *mut *mut c_char) -> GptcStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            GptcStatus::Ok
        }
        Err(e) => fail(GptcStatus::EvaluationError, e.to_string()),
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn load(source: &str) -> Result<GptcCircuit, GptcStatus> {
    let doc = parse_any(source)
        .map_err(|d| fail(GptcStatus::ParseError, render_diagnostics(&d)))?;
    let compiled =
        compile(&doc).map_err(|d| fail(GptcStatus::InvalidCircuit, render_diagnostics(&d)))?;
    Ok(GptcCircuit { doc, compiled })
}

/// Parse and compile a circuit from `.gptc` text or its JSON form.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gptc_circuit_parse(source: *const c_char, out: *mut *mut GptcCircuit) -> GptcStatus {
    guard(|| {
        if out.is_null() {
            return fail(GptcStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let s = try_status!(text(source));
        let c = try_status!(load(s));
        *out = Box::into_raw(Box::new(c));
        GptcStatus::Ok
    })
}

/// Release a circuit. Null is ignored.
///
/// # Safety
/// `circuit` must come from [`gptc_circuit_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gptc_circuit_free(circuit: *mut GptcCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Check a document without keeping it: `Ok`, `ParseError` or
/// `InvalidCircuit`.
///
/// # Safety
/// `source` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gptc_validate(source: *const c_char) -> GptcStatus {
    guard(|| {
        let s = try_status!(text(source));
        try_status!(load(s));
        GptcStatus::Ok
    })
}

/// Probability of a joint outcome. `outcomes` is `op=token,...` or null for
/// the document's default assignment. `foliation` selects the k-th
/// enumerated complete foliation; pass a negative value for the canonical
/// one.
///
/// # Safety
/// `circuit` must be a live handle, `outcomes` null or NUL-terminated, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gptc_circuit_evaluate(
    circuit: *const GptcCircuit,
    outcomes: *const c_char,
    foliation: i64,
    out: *mut f64,
) -> GptcStatus {
    guard(|| {
        let c = try_status!(handle(circuit));
        if out.is_null() {
            return fail(GptcStatus::NullPointer, "null output pointer");
        }
        let cc = &c.compiled;
        let mut assignment = cc.assignment.clone();
        if !outcomes.is_null() {
            let s = try_status!(text(outcomes));
            match OutcomeAssignment::parse(s) {
                Ok(a) => {
                    for (op, tok) in a.0 {
                        assignment.set(op, tok);
                    }
                }
                Err(e) => return fail(GptcStatus::InvalidArgument, e.to_string()),
            }
        }
        let chosen = if foliation < 0 {
            None
        } else {
            let k = foliation as usize;
            match enumerate_complete_foliations(&cc.circuit, k.saturating_add(1)) {
                Ok(mut fs) if k < fs.len() => Some(fs.swap_remove(k)),
                Ok(fs) => {
                    return fail(
                        GptcStatus::InvalidArgument,
                        format!("foliation {k} requested, {} available", fs.len()),
                    )
                }
                Err(e) => return fail(GptcStatus::EvaluationError, e.to_string()),
            }
        };
        match evaluate_circuit(&cc.model, &assignment, &cc.theory, chosen.as_ref()) {
            Ok(p) => {
                *out = p;
                GptcStatus::Ok
            }
            Err(e @ (EngineError::Assignment(_) | EngineError::InvalidArgument(_))) => {
                fail(GptcStatus::InvalidArgument, e.to_string())
            }
            Err(e) => fail(GptcStatus::EvaluationError, e.to_string()),
        }
    })
}

/// Number of complete foliations, counting at most `limit`.
///
/// # Safety
/// `circuit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gptc_circuit_foliation_count(
    circuit: *const GptcCircuit,
    limit: usize,
    out: *mut usize,
) -> GptcStatus {
    guard(|| {
        let c = try_status!(handle(circuit));
        if out.is_null() {
            return fail(GptcStatus::NullPointer, "null output pointer");
        }
        match enumerate_complete_foliations(&c.compiled.circuit, limit) {
            Ok(fs) => {
                *out = fs.len();
                GptcStatus::Ok
            }
            Err(e) => fail(GptcStatus::EvaluationError, e.to_string()),
        }
    })
}

/// Canonical `.gptc` text (`json == false`) or the JSON form. Free the
/// result with [`gptc_string_free`].
///
/// # Safety
/// `circuit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gptc_circuit_serialize(
    circuit: *const GptcCircuit,
    json: bool,
    out: *mut *mut c_char,
) -> GptcStatus {
    guard(|| {
        let c = try_status!(handle(circuit));
        if out.is_null() {
            return fail(GptcStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let s = if json { to_json(&c.doc) } else { serialize_circuit(&c.doc) };
        into_c_string(s, out)
    })
}

/// Compare K_ab with K_a K_b for a counting model (`classical`, `quantum`,
/// `real`, `quaternionic`). Returns `CheckFailed` when K_ab < K_a K_b; the
/// outputs are filled either way. Output pointers may be null.
///
/// # Safety
/// `model` must be NUL-terminated; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn gptc_counting_check(
    model: *const c_char,
    n_a: u64,
    n_b: u64,
    k_ab: *mut u64,
    k_a_k_b: *mut u64,
) -> GptcStatus {
    guard(|| {
        let m: CountingModel = match try_status!(text(model)).parse() {
            Ok(m) => m,
            Err(e) => return fail(GptcStatus::InvalidArgument, format!("{e}")),
        };
        if !(1..=4096).contains(&n_a) || !(1..=4096).contains(&n_b) {
            return fail(GptcStatus::InvalidArgument, "N must lie in 1..=4096");
        }
        let r = composite_counting_check(m, n_a, n_b);
        if !k_ab.is_null() {
            *k_ab = r.k_ab;
        }
        if !k_a_k_b.is_null() {
            *k_a_k_b = r.product;
        }
        if r.bound_satisfied {
            GptcStatus::Ok
        } else {
            fail(GptcStatus::CheckFailed, r.to_string())
        }
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn gptc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Free a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gptc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn gptc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
