//! C ABI for the cremona engine.
//!
//! Conventions: opaque handles for parsed documents, integer status codes,
//! JSON strings for structured results (the same canonical reports the CLI
//! emits). Every returned string is allocated here and must be released with
//! [`cremona_string_free`]; documents with [`cremona_document_free`]. All
//! entry points catch panics; the last error message is kept per thread and
//! read back with [`cremona_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cremona::coolidge::CoolidgeConfig;
use cremona::{
    ci_projection_certificate, classify_singularities, enumerate_standard_models,
    enumerate_standard_models_ruled, is_minimal_degree, line_equivalent, log_discrepancies,
    minimal_plane_report, noether_fano_certificate, scroll_reduction, standard_model,
    ClassificationScope, CurveDocument, EngineError, Pair, ProjectionPair, TieBreak,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CremonaStatus {
    /// Success.
    Ok = 0,
    /// A null pointer or malformed argument.
    InvalidArgument = 1,
    /// The input was not valid JSON for the document schema.
    ParseError = 2,
    /// The document violates a cluster or pair invariant.
    ValidationError = 3,
    /// An engine precondition failed.
    EngineError = 4,
    /// An internal invariant failed (or a panic was caught).
    InternalError = 5,
}

/// Opaque handle to a parsed curve document.
pub struct CremonaDocument {
    doc: CurveDocument,
    pair: Pair,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let cleaned: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn engine_status(err: &EngineError) -> CremonaStatus {
    match err {
        EngineError::InvariantViolation { .. } | EngineError::Internal(_) => {
            CremonaStatus::InternalError
        }
        _ => CremonaStatus::EngineError,
    }
}

/// Last error message of the current thread; a static empty string when no
/// error occurred. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn cremona_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Engine version as a static string.
#[no_mangle]
pub extern "C" fn cremona_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn out_string(value: String, out: *mut *mut c_char) -> CremonaStatus {
    let cleaned: String = value.chars().filter(|&c| c != '\0').collect();
    match CString::new(cleaned) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            CremonaStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL");
            CremonaStatus::InternalError
        }
    }
}

fn guarded<F: FnOnce() -> CremonaStatus>(f: F) -> CremonaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic caught at the FFI boundary");
            CremonaStatus::InternalError
        }
    }
}

/// Parse a JSON curve document into an opaque handle. On success the handle
/// is written to `out` and must be freed with [`cremona_document_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cremona_document_parse(
    json: *const c_char,
    out: *mut *mut CremonaDocument,
) -> CremonaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CremonaStatus::InvalidArgument;
        }
        let Some(text) = (unsafe { read_str(json) }) else {
            set_error("input is null or not UTF-8");
            return CremonaStatus::InvalidArgument;
        };
        match cremona::parse_document(text.as_bytes()) {
            Ok(doc) => match doc.to_pair() {
                Ok(pair) => {
                    let handle = Box::new(CremonaDocument { doc, pair });
                    unsafe { *out = Box::into_raw(handle) };
                    CremonaStatus::Ok
                }
                Err(err) => {
                    set_error(&err.to_string());
                    CremonaStatus::ValidationError
                }
            },
            Err(err) => {
                set_error(&err.to_string());
                CremonaStatus::ParseError
            }
        }
    })
}

/// Release a document handle. Null is a no-op.
///
/// # Safety
/// `doc` must come from [`cremona_document_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cremona_document_free(doc: *mut CremonaDocument) {
    if !doc.is_null() {
        drop(unsafe { Box::from_raw(doc) });
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cremona_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

unsafe fn with_document<F>(
    doc: *const CremonaDocument,
    out: *mut *mut c_char,
    f: F,
) -> CremonaStatus
where
    F: FnOnce(&CremonaDocument) -> Result<String, (CremonaStatus, String)>,
{
    guarded(AssertUnwindSafe(|| {
        if doc.is_null() || out.is_null() {
            set_error("null pointer");
            return CremonaStatus::InvalidArgument;
        }
        let handle = unsafe { &*doc };
        match f(handle) {
            Ok(json) => out_string(json, out),
            Err((status, message)) => {
                set_error(&message);
                status
            }
        }
    }))
}

fn engine_err(err: EngineError) -> (CremonaStatus, String) {
    (engine_status(&err), err.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, (CremonaStatus, String)> {
    serde_json::to_value(value)
        .and_then(|v| serde_json::to_string_pretty(&v))
        .map_err(|e| (CremonaStatus::InternalError, e.to_string()))
}

/// The normalized document back as canonical JSON (useful for echoing the
/// parsed input from bindings).
///
/// # Safety
/// Pointer contract as in [`cremona_genus`].
#[no_mangle]
pub unsafe extern "C" fn cremona_document_echo(
    doc: *const CremonaDocument,
    out: *mut *mut c_char,
) -> CremonaStatus {
    unsafe { with_document(doc, out, |handle| to_json(&handle.doc)) }
}

/// Combinatorial genus as a "p/q" string.
///
/// # Safety
/// `doc` from [`cremona_document_parse`]; `out` valid; result freed with
/// [`cremona_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cremona_genus(
    doc: *const CremonaDocument,
    out: *mut *mut c_char,
) -> CremonaStatus {
    unsafe {
        with_document(doc, out, |handle| {
            Ok(cremona::cluster::rational_string(
                &handle.pair.combinatorial_genus(),
            ))
        })
    }
}

/// Log discrepancies at coefficient `coeff` ("p/q"), as a JSON report.
///
/// # Safety
/// Pointer contract as in [`cremona_genus`]; `coeff` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cremona_discrepancies(
    doc: *const CremonaDocument,
    coeff: *const c_char,
    out: *mut *mut c_char,
) -> CremonaStatus {
    let coeff_text = unsafe { read_str(coeff) }.map(str::to_string);
    unsafe {
        with_document(doc, out, move |handle| {
            let coeff_text =
                coeff_text.ok_or((CremonaStatus::InvalidArgument, "null coefficient".into()))?;
            let c = cremona::cluster::parse_rational(&coeff_text).map_err(engine_err)?;
            let report = log_discrepancies(handle.pair.cluster(), &c).map_err(engine_err)?;
            to_json(&report)
        })
    }
}

/// Terminal/canonical classification at coefficient `coeff`; set `along_c0`
/// to restrict the minimum to valuations centered on C0.
///
/// # Safety
/// Pointer contract as in [`cremona_discrepancies`].
#[no_mangle]
pub unsafe extern "C" fn cremona_classify(
    doc: *const CremonaDocument,
    coeff: *const c_char,
    along_c0: bool,
    out: *mut *mut c_char,
) -> CremonaStatus {
    let coeff_text = unsafe { read_str(coeff) }.map(str::to_string);
    unsafe {
        with_document(doc, out, move |handle| {
            let coeff_text =
                coeff_text.ok_or((CremonaStatus::InvalidArgument, "null coefficient".into()))?;
            let c = cremona::cluster::parse_rational(&coeff_text).map_err(engine_err)?;
            let scope = if along_c0 {
                ClassificationScope::AlongC0
            } else {
                ClassificationScope::Global
            };
            let classification =
                classify_singularities(handle.pair.cluster(), &c, scope).map_err(engine_err)?;
            to_json(&classification)
        })
    }
}

/// Standard model (or enumeration when `enumerate_all` is set), as a JSON
/// report with full traces.
///
/// # Safety
/// Pointer contract as in [`cremona_genus`].
#[no_mangle]
pub unsafe extern "C" fn cremona_standard_model(
    doc: *const CremonaDocument,
    enumerate_all: bool,
    branch_bound: usize,
    out: *mut *mut c_char,
) -> CremonaStatus {
    unsafe {
        with_document(doc, out, move |handle| {
            if enumerate_all {
                let models = match &handle.pair {
                    Pair::Plane(p) => enumerate_standard_models(p, branch_bound),
                    Pair::Ruled(r) => enumerate_standard_models_ruled(r, branch_bound),
                }
                .map_err(engine_err)?;
                to_json(&models)
            } else {
                let model =
                    standard_model(&handle.pair, &TieBreak::default()).map_err(engine_err)?;
                to_json(&model)
            }
        })
    }
}

/// Minimal-degree verdict (plane input) or minimal plane model (ruled input).
///
/// # Safety
/// Pointer contract as in [`cremona_genus`].
#[no_mangle]
pub unsafe extern "C" fn cremona_minimal_degree(
    doc: *const CremonaDocument,
    branch_bound: usize,
    out: *mut *mut c_char,
) -> CremonaStatus {
    unsafe {
        with_document(doc, out, move |handle| match &handle.pair {
            Pair::Plane(p) => {
                let verdict = is_minimal_degree(p, branch_bound).map_err(engine_err)?;
                to_json(&verdict)
            }
            Pair::Ruled(r) => {
                let mpm = minimal_plane_report(r).map_err(engine_err)?;
                to_json(&mpm)
            }
        })
    }
}

/// Cremona equivalence to a line for a rational plane input.
///
/// # Safety
/// Pointer contract as in [`cremona_genus`].
#[no_mangle]
pub unsafe extern "C" fn cremona_line_equivalence(
    doc: *const CremonaDocument,
    max_class_degree: i64,
    out: *mut *mut c_char,
) -> CremonaStatus {
    unsafe {
        with_document(doc, out, move |handle| {
            let plane = match &handle.pair {
                Pair::Plane(p) => p,
                Pair::Ruled(_) => {
                    return Err((
                        CremonaStatus::EngineError,
                        "line equivalence takes a plane input".into(),
                    ))
                }
            };
            let config = CoolidgeConfig {
                max_class_degree,
                ..CoolidgeConfig::default()
            };
            let verdict = line_equivalent(plane, &config).map_err(engine_err)?;
            to_json(&verdict)
        })
    }
}

/// Noether-Fano certificate for embeddings of degrees d_high > d_low in P^n
/// with the given multiplicity bound.
///
/// # Safety
/// `out` must be valid; result freed with [`cremona_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cremona_noether_fano(
    n: i64,
    d_high: i64,
    d_low: i64,
    max_mult: i64,
    out: *mut *mut c_char,
) -> CremonaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CremonaStatus::InvalidArgument;
        }
        match noether_fano_certificate(n, d_high, d_low, max_mult) {
            Ok(cert) => match to_json(&cert) {
                Ok(json) => out_string(json, out),
                Err((status, message)) => {
                    set_error(&message);
                    status
                }
            },
            Err(err) => {
                set_error(&err.to_string());
                engine_status(&err)
            }
        }
    })
}

/// Scroll case reduction trace for the given degree.
///
/// # Safety
/// `out` must be valid; result freed with [`cremona_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cremona_scroll_reduction(
    degree: i64,
    out: *mut *mut c_char,
) -> CremonaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CremonaStatus::InvalidArgument;
        }
        match scroll_reduction(degree) {
            Ok(reduction) => match to_json(&reduction) {
                Ok(json) => out_string(json, out),
                Err((status, message)) => {
                    set_error(&message);
                    status
                }
            },
            Err(err) => {
                set_error(&err.to_string());
                engine_status(&err)
            }
        }
    })
}

/// Complete-intersection projection certificate for (a, b) in dimension k.
///
/// # Safety
/// `out` must be valid; result freed with [`cremona_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cremona_ci_certificate(
    a: i64,
    b: i64,
    k: i64,
    out: *mut *mut c_char,
) -> CremonaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return CremonaStatus::InvalidArgument;
        }
        let result = ProjectionPair::new(a, b, k).and_then(|p| ci_projection_certificate(&p));
        match result {
            Ok(cert) => match to_json(&cert) {
                Ok(json) => out_string(json, out),
                Err((status, message)) => {
                    set_error(&message);
                    status
                }
            },
            Err(err) => {
                set_error(&err.to_string());
                engine_status(&err)
            }
        }
    })
}
