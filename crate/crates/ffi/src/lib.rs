//! C ABI for the transversality certifier. Opaque map handles, integer
//! status codes, and JSON report strings that match the CLI output
//! byte for byte.
//!
//! Every function is panic-safe: panics are caught at the boundary and
//! reported as `CRITREL_STATUS_INTERNAL`. Strings returned through `char**`
//! are owned by the caller and must be released with `critrel_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use critrel::commands::{
    cmd_analyze, cmd_certify, cmd_deficit_check, cmd_lattes_demo, cmd_pushforward, cmd_relations,
    outcome_for_error, parse_relation, parse_sigma, parse_spec, MapInput, Options, Outcome,
};
use critrel::error::Error;
use critrel::fixtures::parse_complex;
use critrel::num::Pt;
use critrel::poly::Poly;
use critrel::ratmap::RatMap;
use num_complex::Complex64;

/// Status codes returned by every fallible function.
pub const CRITREL_STATUS_OK: c_int = 0;
/// The analysis completed and decided the negative (e.g. rank deficient).
pub const CRITREL_STATUS_NEGATIVE: c_int = 1;
/// The input was unusable.
pub const CRITREL_STATUS_INVALID: c_int = 2;
/// The numerics could not certify an answer.
pub const CRITREL_STATUS_UNCERTIFIABLE: c_int = 3;
/// A panic or violated internal invariant.
pub const CRITREL_STATUS_INTERNAL: c_int = 4;
/// A required pointer argument was null.
pub const CRITREL_STATUS_NULL_POINTER: c_int = 5;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_for(outcome: Outcome) -> c_int {
    match outcome {
        Outcome::Success => CRITREL_STATUS_OK,
        Outcome::CertifiedNegative => CRITREL_STATUS_NEGATIVE,
        Outcome::InputError => CRITREL_STATUS_INVALID,
        Outcome::Uncertifiable => CRITREL_STATUS_UNCERTIFIABLE,
    }
}

fn status_for_error(e: &Error) -> c_int {
    set_last_error(e.to_string());
    status_for(outcome_for_error(e))
}

/// Message of the most recent error on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn critrel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must be a pointer previously returned through a `char**` out
/// parameter of this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critrel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn export_string(s: String, out: *mut *mut c_char) -> c_int {
    match CString::new(s) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            CRITREL_STATUS_OK
        }
        Err(_) => {
            set_last_error("report contained an interior nul byte".into());
            CRITREL_STATUS_INTERNAL
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn guarded<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_last_error("internal panic".into());
            CRITREL_STATUS_INTERNAL
        }
    }
}

// ---------------------------------------------------------------------------
// Opaque map handle
// ---------------------------------------------------------------------------

/// Opaque handle to a rational map.
pub struct CritrelMap {
    inner: RatMap,
}

impl CritrelMap {
    fn spec_json(&self) -> String {
        let pairs =
            |p: &Poly| -> Vec<[f64; 2]> { p.coeffs().iter().map(|z| [z.re, z.im]).collect() };
        serde_json::to_string(&serde_json::json!({
            "numerator": pairs(self.inner.num()),
            "denominator": pairs(self.inner.den()),
        }))
        .expect("spec serialization")
    }
}

/// Builds a map handle from a specification string: a fixture name
/// ("chebyshev2", "misiurewicz_i", "lattes:a=2+0i"), inline JSON with
/// "numerator"/"denominator" coefficient arrays, or a path to a JSON file.
///
/// # Safety
/// `spec` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_new(spec: *const c_char, out: *mut *mut CritrelMap) -> c_int {
    guarded(|| {
        let Some(spec) = (unsafe { read_str(spec) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        if out.is_null() {
            return CRITREL_STATUS_NULL_POINTER;
        }
        match parse_spec(spec) {
            Ok(MapInput::Map(map)) => {
                unsafe { *out = Box::into_raw(Box::new(CritrelMap { inner: map })) };
                CRITREL_STATUS_OK
            }
            Ok(MapInput::Symbolic(_)) => {
                set_last_error("symbolic diagrams carry no map handle".into());
                CRITREL_STATUS_INVALID
            }
            Err(e) => status_for_error(&e),
        }
    })
}

/// Builds a map handle from interleaved re/im coefficient arrays in
/// ascending degree order. `den` may be null for a polynomial.
///
/// # Safety
/// `num` must point to `2 * num_terms` doubles (likewise `den` unless null)
/// and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_from_coefficients(
    num: *const c_double,
    num_terms: usize,
    den: *const c_double,
    den_terms: usize,
    out: *mut *mut CritrelMap,
) -> c_int {
    guarded(|| {
        if num.is_null() || out.is_null() {
            return CRITREL_STATUS_NULL_POINTER;
        }
        let read_poly = |ptr: *const c_double, terms: usize| -> Poly {
            let slice = unsafe { std::slice::from_raw_parts(ptr, 2 * terms) };
            Poly::new(
                slice
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            )
        };
        let num_poly = read_poly(num, num_terms);
        let den_poly = if den.is_null() || den_terms == 0 {
            Poly::one()
        } else {
            read_poly(den, den_terms)
        };
        match RatMap::new(num_poly, den_poly, 1e-12) {
            Ok(map) => {
                unsafe { *out = Box::into_raw(Box::new(CritrelMap { inner: map })) };
                CRITREL_STATUS_OK
            }
            Err(e) => status_for_error(&e),
        }
    })
}

/// Degree of the map behind the handle; -1 for a null handle.
///
/// # Safety
/// `map` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_degree(map: *const CritrelMap) -> c_int {
    if map.is_null() {
        return -1;
    }
    unsafe { &*map }.inner.degree() as c_int
}

/// Evaluates the map at a finite point. Returns CRITREL_STATUS_NEGATIVE
/// with NaN outputs when the value is the point at infinity.
///
/// # Safety
/// `map` must be a live handle; `out_re`, `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_eval(
    map: *const CritrelMap,
    re: c_double,
    im: c_double,
    out_re: *mut c_double,
    out_im: *mut c_double,
) -> c_int {
    guarded(|| {
        if map.is_null() || out_re.is_null() || out_im.is_null() {
            return CRITREL_STATUS_NULL_POINTER;
        }
        let handle = unsafe { &*map };
        match handle.inner.eval_pt(Pt::Finite(Complex64::new(re, im))) {
            Pt::Finite(w) => {
                unsafe {
                    *out_re = w.re;
                    *out_im = w.im;
                }
                CRITREL_STATUS_OK
            }
            Pt::Infinity => {
                unsafe {
                    *out_re = f64::NAN;
                    *out_im = f64::NAN;
                }
                CRITREL_STATUS_NEGATIVE
            }
        }
    })
}

/// Releases a map handle. Null is accepted.
///
/// # Safety
/// `map` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_free(map: *mut CritrelMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

// ---------------------------------------------------------------------------
// Report commands (JSON strings, byte-identical with the CLI)
// ---------------------------------------------------------------------------

fn options_from(horizon: usize, tol: c_double, seed: u64, samples: usize) -> Options {
    let mut o = Options::default();
    if horizon > 0 {
        o.horizon = horizon;
    }
    if tol > 0.0 {
        o.tol = tol;
    }
    o.seed = seed;
    if samples > 0 {
        o.samples = samples;
    }
    o
}

macro_rules! report_fn {
    ($body:expr, $out:ident) => {{
        if $out.is_null() {
            return CRITREL_STATUS_NULL_POINTER;
        }
        match $body {
            Ok((report, outcome)) => {
                let code = export_string(report.to_json(), $out);
                if code != CRITREL_STATUS_OK {
                    code
                } else {
                    status_for(outcome)
                }
            }
            Err(e) => status_for_error(&e),
        }
    }};
}

/// Runs the analyze command for a specification string. Pass 0 for
/// `horizon` and `tol` to use the defaults.
///
/// # Safety
/// `spec` must be nul-terminated; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn critrel_analyze_json(
    spec: *const c_char,
    horizon: usize,
    tol: c_double,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(spec) = (unsafe { read_str(spec) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let opts = options_from(horizon, tol, seed, 0);
        report_fn!(cmd_analyze(spec, opts), out_json)
    })
}

/// Runs the relations command.
///
/// # Safety
/// Same contract as `critrel_analyze_json`.
#[no_mangle]
pub unsafe extern "C" fn critrel_relations_json(
    spec: *const c_char,
    horizon: usize,
    tol: c_double,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(spec) = (unsafe { read_str(spec) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let opts = options_from(horizon, tol, seed, 0);
        report_fn!(cmd_relations(spec, opts), out_json)
    })
}

/// Runs the certify command. `chart` is "auto", "rat", "poly" or
/// "family:const"; `sigma` may be null or "a;b;c;d" of complex literals.
/// Returns CRITREL_STATUS_OK when certified, CRITREL_STATUS_NEGATIVE when a
/// rank deficiency was certified.
///
/// # Safety
/// String arguments must be nul-terminated or null; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn critrel_certify_json(
    spec: *const c_char,
    chart: *const c_char,
    sigma: *const c_char,
    horizon: usize,
    tol: c_double,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(spec) = (unsafe { read_str(spec) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let chart = unsafe { read_str(chart) }.unwrap_or("auto");
        let sigma = match unsafe { read_str(sigma) } {
            None => None,
            Some(s) => match parse_sigma(s) {
                Ok(m) => Some(m),
                Err(e) => return status_for_error(&e),
            },
        };
        let opts = options_from(horizon, tol, seed, 0);
        report_fn!(cmd_certify(spec, chart, sigma.as_ref(), opts), out_json)
    })
}

/// Runs the pushforward command for the relation "i,j,m,n".
///
/// # Safety
/// Same contract as `critrel_analyze_json`; `relation` must be valid.
#[no_mangle]
pub unsafe extern "C" fn critrel_pushforward_json(
    spec: *const c_char,
    relation: *const c_char,
    samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let (Some(spec), Some(rel_str)) =
            (unsafe { read_str(spec) }, unsafe { read_str(relation) })
        else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let rel = match parse_relation(rel_str) {
            Ok(r) => r,
            Err(e) => return status_for_error(&e),
        };
        let opts = options_from(0, 0.0, seed, samples);
        report_fn!(cmd_pushforward(spec, &rel, opts), out_json)
    })
}

/// Runs the degeneracy demonstration for the family parameter given as a
/// complex literal such as "2+0.5i".
///
/// # Safety
/// Same contract as `critrel_analyze_json`.
#[no_mangle]
pub unsafe extern "C" fn critrel_lattes_demo_json(
    a: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(a_str) = (unsafe { read_str(a) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let a = match parse_complex(a_str) {
            Ok(z) => z,
            Err(e) => return status_for_error(&e),
        };
        let opts = options_from(0, 0.0, seed, 0);
        report_fn!(cmd_lattes_demo(a, opts), out_json)
    })
}

/// Runs the push-forward deficit identity check; `relation` may be null to
/// use the first constructed relation. Pass 0 for the default threshold.
///
/// # Safety
/// Same contract as `critrel_analyze_json`.
#[no_mangle]
pub unsafe extern "C" fn critrel_deficit_check_json(
    spec: *const c_char,
    relation: *const c_char,
    threshold: c_double,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        let Some(spec) = (unsafe { read_str(spec) }) else {
            return CRITREL_STATUS_NULL_POINTER;
        };
        let rel = match unsafe { read_str(relation) } {
            None => None,
            Some(s) => match parse_relation(s) {
                Ok(r) => Some(r),
                Err(e) => return status_for_error(&e),
            },
        };
        let threshold = if threshold > 0.0 { threshold } else { 1e-5 };
        let opts = options_from(0, 0.0, seed, 0);
        report_fn!(cmd_deficit_check(spec, rel, threshold, opts), out_json)
    })
}

/// Certify directly from a map handle; equivalent to serializing the handle
/// and calling `critrel_certify_json`.
///
/// # Safety
/// `map` must be a live handle; other arguments as in
/// `critrel_certify_json`.
#[no_mangle]
pub unsafe extern "C" fn critrel_map_certify_json(
    map: *const CritrelMap,
    chart: *const c_char,
    horizon: usize,
    tol: c_double,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guarded(|| {
        if map.is_null() {
            return CRITREL_STATUS_NULL_POINTER;
        }
        let spec = unsafe { &*map }.spec_json();
        let chart = unsafe { read_str(chart) }.unwrap_or("auto");
        let opts = options_from(horizon, tol, seed, 0);
        report_fn!(cmd_certify(&spec, chart, None, opts), out_json)
    })
}
