//! C ABI for the exact q-series verification engine.
//!
//! Conventions:
//! * the catalog is an opaque handle created by `qtheta_catalog_new` (or
//!   `qtheta_catalog_with_definitions`) and released by
//!   `qtheta_catalog_free`;
//! * every function reports a status code (`QTHETA_OK`, `QTHETA_MISMATCH`,
//!   `QTHETA_USAGE`, `QTHETA_INTERNAL`) matching the CLI exit codes;
//! * strings returned through out-pointers are UTF-8, NUL-terminated and
//!   owned by the caller, who must release them with `qtheta_string_free`;
//! * reports and listings are JSON with a top-level `schema` field.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use qtheta_core::catalog::{check_identity_struct, load_definitions, Catalog};
use qtheta_core::error::Error;
use qtheta_core::expr::{eval_expr, validate_evaluable};
use qtheta_core::report::{OracleReport, Report, SCHEMA_VERSION};
use qtheta_core::rewrite::normalize;
use qtheta_core::window::oracle_check;

/// Status codes mirroring the CLI exit codes.
pub const QTHETA_OK: i32 = 0;
/// An identity failed: at least one coefficient differs.
pub const QTHETA_MISMATCH: i32 = 1;
/// Bad arguments: unknown id, malformed JSON, window too small, null input.
pub const QTHETA_USAGE: i32 = 2;
/// Internal or non-evaluable error.
pub const QTHETA_INTERNAL: i32 = 3;

/// Opaque catalog handle.
pub struct QthetaCatalog {
    inner: Catalog,
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::UnknownIdentity(_) | Error::Usage(_) | Error::WindowTooSmall { .. } => QTHETA_USAGE,
        _ => QTHETA_INTERNAL,
    }
}

/// Transfer a Rust string to the caller. NUL bytes are replaced so the
/// conversion cannot fail.
fn export_string(s: String) -> *mut c_char {
    let safe = s.replace('\0', " ");
    CString::new(safe).expect("no interior NUL").into_raw()
}

fn write_out(out: *mut *mut c_char, s: String) {
    if !out.is_null() {
        unsafe { *out = export_string(s) };
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Create a catalog with the standard identities.
#[no_mangle]
pub extern "C" fn qtheta_catalog_new() -> *mut QthetaCatalog {
    Box::into_raw(Box::new(QthetaCatalog {
        inner: Catalog::standard(),
    }))
}

/// Create a catalog extended with identities from a definitions JSON
/// document (schema 1). On failure returns NULL and, when `err_out` is
/// non-null, stores a description the caller must free.
///
/// # Safety
/// `defs_json` must be NULL or a valid NUL-terminated UTF-8 string;
/// `err_out`, when non-null, must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qtheta_catalog_with_definitions(
    defs_json: *const c_char,
    err_out: *mut *mut c_char,
) -> *mut QthetaCatalog {
    let mut entries = qtheta_core::catalog::standard_entries();
    if let Some(json) = read_str(defs_json) {
        match load_definitions(json) {
            Ok(extra) => entries.extend(extra),
            Err(e) => {
                write_out(err_out, e.to_string());
                return ptr::null_mut();
            }
        }
    } else if !defs_json.is_null() {
        write_out(err_out, "definitions must be valid UTF-8".to_string());
        return ptr::null_mut();
    }
    match Catalog::from_entries(entries) {
        Ok(inner) => Box::into_raw(Box::new(QthetaCatalog { inner })),
        Err(e) => {
            write_out(err_out, e.to_string());
            ptr::null_mut()
        }
    }
}

/// Release a catalog handle. NULL is allowed.
///
/// # Safety
/// `cat` must be NULL or a pointer previously returned by a catalog
/// constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtheta_catalog_free(cat: *mut QthetaCatalog) {
    if !cat.is_null() {
        drop(Box::from_raw(cat));
    }
}

/// Number of identities in the catalog; -1 for a NULL handle.
///
/// # Safety
/// `cat` must be NULL or a live catalog handle.
#[no_mangle]
pub unsafe extern "C" fn qtheta_catalog_len(cat: *const QthetaCatalog) -> i32 {
    match cat.as_ref() {
        Some(c) => c.inner.entries().len() as i32,
        None => -1,
    }
}

/// JSON listing of the catalog (`{"schema":1,"identities":[...]}`).
/// Returns a status code; the listing is stored in `json_out`.
///
/// # Safety
/// `cat` must be a live catalog handle; `json_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qtheta_catalog_list_json(
    cat: *const QthetaCatalog,
    json_out: *mut *mut c_char,
) -> i32 {
    let Some(c) = cat.as_ref() else {
        return QTHETA_USAGE;
    };
    let rows: Vec<serde_json::Value> = c
        .inner
        .entries()
        .iter()
        .map(|e| {
            serde_json::json!({
                "id": e.id,
                "title": e.title,
                "source": e.source,
                "default_order": e.default_order,
            })
        })
        .collect();
    let doc = serde_json::json!({ "schema": SCHEMA_VERSION, "identities": rows });
    write_out(json_out, doc.to_string());
    QTHETA_OK
}

/// Default verification order of one identity; -1 when unknown.
///
/// # Safety
/// `cat` must be a live catalog handle; `id` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qtheta_default_order(cat: *const QthetaCatalog, id: *const c_char) -> i64 {
    let (Some(c), Some(id)) = (cat.as_ref(), read_str(id)) else {
        return -1;
    };
    c.inner.get(id).map(|e| e.default_order).unwrap_or(-1)
}

/// Check one identity to the given order (0 means the identity's default).
/// Returns QTHETA_OK on an exact match, QTHETA_MISMATCH when a coefficient
/// differs, QTHETA_USAGE / QTHETA_INTERNAL on errors. When `report_out` is
/// non-null it receives the JSON report (schema 1) on success or mismatch.
///
/// # Safety
/// `cat` must be a live catalog handle, `id` a NUL-terminated string, and
/// `report_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qtheta_check(
    cat: *const QthetaCatalog,
    id: *const c_char,
    order: i64,
    report_out: *mut *mut c_char,
) -> i32 {
    let (Some(c), Some(id)) = (cat.as_ref(), read_str(id)) else {
        return QTHETA_USAGE;
    };
    let ident = match c.inner.get(id) {
        Ok(e) => e,
        Err(e) => {
            write_out(report_out, e.to_string());
            return classify(&e);
        }
    };
    let n = if order > 0 {
        order
    } else {
        ident.default_order
    };
    match check_identity_struct(ident, n) {
        Ok(outcome) => {
            let report = Report::from_outcome(&outcome);
            write_out(report_out, serde_json::to_string(&report).unwrap());
            if outcome.passed() {
                QTHETA_OK
            } else {
                QTHETA_MISMATCH
            }
        }
        Err(e) => {
            write_out(report_out, e.to_string());
            classify(&e)
        }
    }
}

/// Dual-path oracle check: windowed brute force against exact evaluation.
/// `window` of 0 means the minimum admissible window `2 * order + 4`.
///
/// # Safety
/// As for `qtheta_check`.
#[no_mangle]
pub unsafe extern "C" fn qtheta_oracle(
    cat: *const QthetaCatalog,
    id: *const c_char,
    order: i64,
    window: i64,
    report_out: *mut *mut c_char,
) -> i32 {
    let (Some(c), Some(id)) = (cat.as_ref(), read_str(id)) else {
        return QTHETA_USAGE;
    };
    let ident = match c.inner.get(id) {
        Ok(e) => e,
        Err(e) => {
            write_out(report_out, e.to_string());
            return classify(&e);
        }
    };
    let n = if order > 0 {
        order
    } else {
        ident.default_order
    };
    let w = if window > 0 {
        window
    } else {
        qtheta_core::window::min_window(n)
    };
    match oracle_check(ident, n, w) {
        Ok(outcome) => {
            let report = OracleReport::from_outcome(&outcome);
            write_out(report_out, serde_json::to_string(&report).unwrap());
            if outcome.passed() {
                QTHETA_OK
            } else {
                QTHETA_MISMATCH
            }
        }
        Err(e) => {
            write_out(report_out, e.to_string());
            classify(&e)
        }
    }
}

/// Expand an identity side (`"<id>.lhs"` / `"<id>.rhs"`) or an inline JSON
/// expression to the given order. The dump (one `q^e : coefficient` line
/// per exponent) is stored in `dump_out`.
///
/// # Safety
/// As for `qtheta_check`.
#[no_mangle]
pub unsafe extern "C" fn qtheta_expand(
    cat: *const QthetaCatalog,
    target: *const c_char,
    order: i64,
    dump_out: *mut *mut c_char,
) -> i32 {
    let (Some(c), Some(target)) = (cat.as_ref(), read_str(target)) else {
        return QTHETA_USAGE;
    };
    let expr = if target.trim_start().starts_with('{') {
        match serde_json::from_str::<qtheta_core::expr::Expr>(target) {
            Ok(e) => normalize(&e),
            Err(e) => {
                write_out(dump_out, format!("bad expression JSON: {e}"));
                return QTHETA_USAGE;
            }
        }
    } else {
        let Some((id, side)) = target.rsplit_once('.') else {
            write_out(dump_out, "expected <id>.lhs or <id>.rhs".to_string());
            return QTHETA_USAGE;
        };
        let ident = match c.inner.get(id) {
            Ok(e) => e,
            Err(e) => {
                write_out(dump_out, e.to_string());
                return classify(&e);
            }
        };
        match side {
            "lhs" => ident.lhs.clone(),
            "rhs" => ident.rhs.clone(),
            _ => {
                write_out(dump_out, "side must be lhs or rhs".to_string());
                return QTHETA_USAGE;
            }
        }
    };
    if let Err(e) = validate_evaluable(&expr) {
        write_out(dump_out, e.to_string());
        return classify(&e);
    }
    let n = if order > 0 { order } else { 10 };
    match eval_expr(&expr, n) {
        Ok(series) => {
            write_out(dump_out, series.truncated(n).dump());
            QTHETA_OK
        }
        Err(e) => {
            write_out(dump_out, e.to_string());
            classify(&e)
        }
    }
}

/// Release a string returned by this library. NULL is allowed.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned through one of the
/// out-parameters, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtheta_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
