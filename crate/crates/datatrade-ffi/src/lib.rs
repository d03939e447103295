//! C ABI for the datatrade solver: opaque primitives handles, status codes,
//! and JSON-string results so any language with a C FFI can drive the
//! library. The generated header lives at `include/datatrade.h`.
//!
//! Ownership rules: every `char*` written to an out-parameter was allocated
//! here and must be released with [`dt_string_free`]; handles from
//! [`dt_primitives_parse`] must be released with [`dt_primitives_free`].
//! Error details for the most recent failing call on the current thread are
//! available via [`dt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use datatrade::closed_form::{self, RegimeTag, Selection, ServiceSpace, SolveOptions};
use datatrade::model::{check_constraints, Mechanism, Primitives};
use datatrade::oracle::verify_closed_form;
use datatrade::policy;
use datatrade::report::to_json_string;
use datatrade::sim::simulate;

/// Result of every fallible call. Mirrors the CLI exit codes: 2 for invalid
/// input, 3 for an oracle disagreement.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Disagreement = 3,
}

/// Opaque validated economy handle.
pub struct DtPrimitives(Primitives);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl AsRef<str>) {
    let sanitized = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(message: impl AsRef<str>) -> DtStatus {
    set_error(message);
    DtStatus::InvalidArgument
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DtStatus> {
    if ptr.is_null() {
        set_error(format!("{what} pointer is null"));
        return Err(DtStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|e| {
        set_error(format!("{what} is not valid UTF-8: {e}"));
        DtStatus::InvalidArgument
    })
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> DtStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return DtStatus::NullPointer;
    }
    match CString::new(text) {
        Ok(s) => {
            *out = s.into_raw();
            DtStatus::Ok
        }
        Err(e) => fail(format!("result contains an interior NUL: {e}")),
    }
}

unsafe fn handle<'a>(p: *const DtPrimitives) -> Result<&'a Primitives, DtStatus> {
    if p.is_null() {
        set_error("primitives handle is null");
        return Err(DtStatus::NullPointer);
    }
    Ok(&(*p).0)
}

/// Parses and validates a primitives JSON object
/// (`{"L":..,"H":..,"V":..,"v_L":..,"v_H":..,"mu0":..}`) into a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
/// The returned handle must be freed with [`dt_primitives_free`].
#[no_mangle]
pub unsafe extern "C" fn dt_primitives_parse(
    json: *const c_char,
    out: *mut *mut DtPrimitives,
) -> DtStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return DtStatus::NullPointer;
    }
    let text = match read_str(json, "primitives json") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let parsed: Primitives = match serde_json::from_str(text) {
        Ok(p) => p,
        Err(e) => return fail(format!("malformed primitives: {e}")),
    };
    if let Err(e) = parsed.validate() {
        return fail(e.to_string());
    }
    *out = Box::into_raw(Box::new(DtPrimitives(parsed)));
    DtStatus::Ok
}

/// Releases a handle from [`dt_primitives_parse`]. Null is a no-op.
///
/// # Safety
/// `p` must be null or a pointer previously returned by
/// [`dt_primitives_parse`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn dt_primitives_free(p: *mut DtPrimitives) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Releases a string written by any `dt_*` call. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer written by this library that has not been
/// freed yet.
#[no_mangle]
pub unsafe extern "C" fn dt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the regime classification as JSON.
///
/// # Safety
/// `p` must be a live handle; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_classify(
    p: *const DtPrimitives,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match closed_form::classify_regime(p) {
        Ok(regime) => write_string(out_json, to_json_string(&regime)),
        Err(e) => fail(e.to_string()),
    }
}

/// Solves the closed form and writes the solution bundle as JSON. On the
/// `mu0 = v_L/v_H` knife edge (with `beta = 1`) the JSON carries both branch
/// solutions instead.
///
/// `selection` is `upper`, `lower`, `mid`, or `value=<v>`; `service_space`
/// is `general` or `binary`; `beta` in (0, 1].
///
/// # Safety
/// `p` must be a live handle; string arguments must be NUL-terminated;
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_solve(
    p: *const DtPrimitives,
    beta: f64,
    selection: *const c_char,
    service_space: *const c_char,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let selection = match read_str(selection, "selection") {
        Ok(t) => match t.parse::<Selection>() {
            Ok(sel) => sel,
            Err(e) => return fail(e),
        },
        Err(s) => return s,
    };
    let space = match read_str(service_space, "service space") {
        Ok(t) => match t.parse::<ServiceSpace>() {
            Ok(sp) => sp,
            Err(e) => return fail(e),
        },
        Err(s) => return s,
    };
    if !(beta > 0.0 && beta <= 1.0) {
        return fail(format!("beta must lie in (0, 1], got {beta}"));
    }
    let opts = SolveOptions {
        selection,
        service_space: space,
    };
    let regime = match closed_form::classify_regime(p) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let result = if regime.tag == RegimeTag::Boundary && beta == 1.0 {
        closed_form::solve_boundary(p, &opts).map(|both| to_json_string(&both))
    } else if beta == 1.0 {
        closed_form::solve(p, &opts).map(|b| to_json_string(&b))
    } else {
        closed_form::solve_bargaining(p, beta, &opts).map(|b| to_json_string(&b))
    };
    match result {
        Ok(text) => write_string(out_json, text),
        Err(e) => fail(e.to_string()),
    }
}

/// Runs the grid oracle against the closed form and writes the verification
/// report as JSON. Returns `Disagreement` (report still written) when the
/// payoffs differ beyond `tol`.
///
/// # Safety
/// `p` must be a live handle; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_verify(
    p: *const DtPrimitives,
    beta: f64,
    tol: f64,
    grid_step: f64,
    refine_rounds: u32,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return fail(format!("tol must be positive, got {tol}"));
    }
    match verify_closed_form(p, beta, tol, grid_step, refine_rounds) {
        Ok(report) => {
            let agree = report.agree;
            let status = write_string(out_json, to_json_string(&report));
            if status != DtStatus::Ok {
                status
            } else if agree {
                DtStatus::Ok
            } else {
                set_error(format!(
                    "closed form {} vs oracle {} (gap {})",
                    report.closed_payoff, report.oracle_payoff, report.gap
                ));
                DtStatus::Disagreement
            }
        }
        Err(e) => fail(e.to_string()),
    }
}

/// Evaluates the eight-constraint ledger for a mechanism JSON object and
/// writes the report as JSON.
///
/// # Safety
/// `p` must be a live handle; `mechanism_json` must be NUL-terminated;
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_check_constraints(
    p: *const DtPrimitives,
    mechanism_json: *const c_char,
    beta: f64,
    eps: f64,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let mechanism = match read_str(mechanism_json, "mechanism json") {
        Ok(t) => match serde_json::from_str::<Mechanism>(t) {
            Ok(m) => m,
            Err(e) => return fail(format!("malformed mechanism: {e}")),
        },
        Err(s) => return s,
    };
    if !(eps >= 0.0 && eps.is_finite()) {
        return fail(format!("eps must be non-negative, got {eps}"));
    }
    let report = check_constraints(p, &mechanism, beta, eps);
    write_string(out_json, to_json_string(&report))
}

/// Simulates `n >= 1` consumers against a mechanism JSON object and writes
/// the empirical report as JSON. Deterministic given `seed`.
///
/// # Safety
/// `p` must be a live handle; `mechanism_json` must be NUL-terminated;
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_simulate(
    p: *const DtPrimitives,
    mechanism_json: *const c_char,
    n: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let mechanism = match read_str(mechanism_json, "mechanism json") {
        Ok(t) => match serde_json::from_str::<Mechanism>(t) {
            Ok(m) => m,
            Err(e) => return fail(format!("malformed mechanism: {e}")),
        },
        Err(s) => return s,
    };
    if n == 0 {
        return fail("n must be at least 1");
    }
    let report = simulate(p, &mechanism, n, seed);
    write_string(out_json, to_json_string(&report))
}

/// Writes the data-trade ban comparison as JSON.
///
/// # Safety
/// `p` must be a live handle; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_compare_ban(
    p: *const DtPrimitives,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match policy::compare_ban(p) {
        Ok(comparison) => write_string(out_json, to_json_string(&comparison)),
        Err(e) => fail(e.to_string()),
    }
}

/// Writes the bargaining-power sweep over `betas` as a JSON array.
///
/// # Safety
/// `p` must be a live handle; `betas` must point to `len` doubles when
/// `len > 0`; `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_beta_sweep(
    p: *const DtPrimitives,
    betas: *const f64,
    len: usize,
    out_json: *mut *mut c_char,
) -> DtStatus {
    let p = match handle(p) {
        Ok(p) => p,
        Err(s) => return s,
    };
    if len == 0 {
        return fail("betas must be non-empty");
    }
    if betas.is_null() {
        set_error("betas pointer is null");
        return DtStatus::NullPointer;
    }
    let betas = std::slice::from_raw_parts(betas, len);
    match policy::beta_sweep(p, betas) {
        Ok(rows) => write_string(out_json, to_json_string(&rows)),
        Err(e) => fail(e.to_string()),
    }
}
