//! C ABI for the `linfty` grid laboratory.
//!
//! Every entry point returns a [`LinftyStatus`]; results come back through
//! out-pointers. On failure the thread-local message from
//! [`linfty_last_error`] describes what went wrong. Handles are opaque and
//! must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use linfty::domain::{rasterize, GridDomain, NodeClass, ScalarField, ShapeSpec};
use linfty::eigensolve::{self, HarmonicOptions, POptions};
use linfty::error::Error;
use linfty::measures::DiscreteMeasure;
use linfty::{lipcalc, metric, transport};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinftyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BadShape = 3,
    EmptyInterior = 4,
    Io = 5,
    SizeMismatch = 6,
    ZeroFunction = 7,
    StadiumDomain = 8,
    SignedMeasure = 9,
    UnbalancedMass = 10,
    ZeroDual = 11,
    SolverFailure = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

/// Rasterized domain.
pub struct LinftyDomain(Arc<GridDomain>);

/// Nodal field on a domain.
pub struct LinftyField(ScalarField);

/// Signed nodal measure on a domain.
pub struct LinftyMeasure(DiscreteMeasure);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> LinftyStatus {
    use LinftyStatus as S;
    match err {
        Error::EmptyInterior => S::EmptyInterior,
        Error::BadShape(_) | Error::UnsupportedShape(_) | Error::OutsideDomain { .. } => S::BadShape,
        Error::Io { .. } | Error::Format { .. } => S::Io,
        Error::SizeMismatch { .. } => S::SizeMismatch,
        Error::ZeroFunction => S::ZeroFunction,
        Error::StadiumDomain => S::StadiumDomain,
        Error::SignedMeasure { .. } => S::SignedMeasure,
        Error::UnbalancedMass(..) => S::UnbalancedMass,
        Error::ZeroDual => S::ZeroDual,
        Error::SolverFailure(_) | Error::CrossCheckFailure { .. } => S::SolverFailure,
        Error::InvalidArgument(_) | Error::BadP(_) | Error::EmptySeedSet | Error::NotNormalized(_) => {
            S::InvalidArgument
        }
        Error::UnsupportedDomain(_) => S::InvalidArgument,
    }
}

struct Fail(LinftyStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LinftyStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LinftyStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LinftyStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LinftyStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(LinftyStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Copies `src` into a caller buffer of `cap` values. `len_out` always
/// receives the required length, so callers can size a retry.
unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, cap: usize, len_out: *mut usize) -> Result<(), Fail> {
    if !len_out.is_null() {
        len_out.write(src.len());
    }
    if cap < src.len() {
        return Err(Fail(LinftyStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

/// Hands a new handle to the caller; nothing is allocated when `out` is null.
unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn linfty_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn linfty_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// ---------------------------------------------------------------- domain

/// Rasterizes a shape given as JSON (the shape-file format) at spacing `h`.
///
/// # Safety
/// `shape_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_new(
    shape_json: *const c_char,
    h: f64,
    out: *mut *mut LinftyDomain,
) -> LinftyStatus {
    guard(|| {
        let text = str_arg(shape_json, "shape_json")?;
        let shape: ShapeSpec =
            serde_json::from_str(text).map_err(|e| Fail(LinftyStatus::BadShape, format!("shape JSON: {e}")))?;
        let d = rasterize(&shape, h)?;
        put_handle(out, LinftyDomain(d))
    })
}

/// Rasterizes a shape file at spacing `h`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_load(path: *const c_char, h: f64, out: *mut *mut LinftyDomain) -> LinftyStatus {
    guard(|| {
        let shape = linfty::domain::load_shape(str_arg(path, "path")?)?;
        let d = rasterize(&shape, h)?;
        put_handle(out, LinftyDomain(d))
    })
}

/// # Safety
/// `domain` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_free(domain: *mut LinftyDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Active node count (Interior plus Boundary).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_len(domain: *const LinftyDomain, out: *mut usize) -> LinftyStatus {
    guard(|| put(out, get(domain, "domain")?.0.len(), "out"))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_spacing(domain: *const LinftyDomain, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, get(domain, "domain")?.0.h(), "out"))
}

/// 1 for Interior nodes, 0 for Boundary nodes, in node order.
///
/// # Safety
/// `buf` must hold `cap` bytes; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_interior_mask(
    domain: *const LinftyDomain,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> LinftyStatus {
    guard(|| {
        let d = &get(domain, "domain")?.0;
        let mask: Vec<u8> = (0..d.len()).map(|i| u8::from(d.class(i) == NodeClass::Interior)).collect();
        copy_out(&mask, buf, cap, len_out)
    })
}

/// Node positions as interleaved `x, y` pairs (`y = 0` in 1D); `cap` and
/// `len_out` count doubles.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_domain_positions(
    domain: *const LinftyDomain,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> LinftyStatus {
    guard(|| {
        let d = &get(domain, "domain")?.0;
        let xy: Vec<f64> = (0..d.len()).flat_map(|i| d.position(i)).collect();
        copy_out(&xy, buf, cap, len_out)
    })
}

// ----------------------------------------------------------------- field

/// Field from `len` nodal values; `len` must equal the domain's node count.
///
/// # Safety
/// `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn linfty_field_new(
    domain: *const LinftyDomain,
    values: *const f64,
    len: usize,
    out: *mut *mut LinftyField,
) -> LinftyStatus {
    guard(|| {
        let d = get(domain, "domain")?.0.clone();
        let f = ScalarField::new(d, slice(values, len, "values")?.to_vec())?;
        put_handle(out, LinftyField(f))
    })
}

/// # Safety
/// `field` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_field_free(field: *mut LinftyField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `buf` must hold `cap` doubles; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_field_values(
    field: *const LinftyField,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> LinftyStatus {
    guard(|| copy_out(get(field, "field")?.0.values(), buf, cap, len_out))
}

/// Graph distance to the boundary.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_distance(domain: *const LinftyDomain, out: *mut *mut LinftyField) -> LinftyStatus {
    guard(|| {
        let f = metric::distance_to_boundary(&get(domain, "domain")?.0);
        put_handle(out, LinftyField(f))
    })
}

/// Inradius of the domain: the maximum of the distance function.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_inradius(domain: *const LinftyDomain, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, metric::inradius(&metric::distance_to_boundary(&get(domain, "domain")?.0)), "out"))
}

/// Discrete Lipschitz constant of a field.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_lip_constant(field: *const LinftyField, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, lipcalc::lip_constant(&get(field, "field")?.0), "out"))
}

/// Rayleigh quotient `Lip(u) / max|u|`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_rayleigh(field: *const LinftyField, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, lipcalc::rayleigh(&get(field, "field")?.0)?, "out"))
}

/// Nodes whose distance value lies within `tol` of the inradius.
///
/// # Safety
/// `buf` must hold `cap` entries; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_high_ridge(
    domain: *const LinftyDomain,
    tol: f64,
    buf: *mut usize,
    cap: usize,
    len_out: *mut usize,
) -> LinftyStatus {
    guard(|| {
        let ridge = metric::high_ridge(&metric::distance_to_boundary(&get(domain, "domain")?.0), tol);
        copy_out(&ridge.nodes, buf, cap, len_out)
    })
}

/// Discrete first p-eigenpair from the distance-function start; the
/// eigenfunction is normalized to `max|u| = 1`.
///
/// # Safety
/// Pointers must be valid; `u_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_p_eigenpair(
    domain: *const LinftyDomain,
    p: f64,
    tol: f64,
    lambda_out: *mut f64,
    u_out: *mut *mut LinftyField,
) -> LinftyStatus {
    guard(|| {
        let d = &get(domain, "domain")?.0;
        if tol.is_nan() || tol <= 0.0 {
            return Err(Fail(LinftyStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        let opts = POptions { tol, ..POptions::default() };
        let rep = eigensolve::p_eigenpair(d, p, &metric::distance_to_boundary(d), &opts)?;
        put(lambda_out, rep.lambda, "lambda_out")?;
        if !u_out.is_null() {
            put_handle(u_out, LinftyField(rep.u))?;
        }
        Ok(())
    })
}

/// Infinity-harmonic extension of `values` prescribed at `nodes`.
///
/// # Safety
/// `nodes` and `values` must hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn linfty_infinity_harmonic(
    domain: *const LinftyDomain,
    nodes: *const usize,
    values: *const f64,
    n: usize,
    tol: f64,
    out: *mut *mut LinftyField,
) -> LinftyStatus {
    guard(|| {
        let d = &get(domain, "domain")?.0;
        let opts = HarmonicOptions { tol, ..HarmonicOptions::default() };
        let (u, _) = eigensolve::infinity_harmonic(d, slice(nodes, n, "nodes")?, slice(values, n, "values")?, &opts)?;
        put_handle(out, LinftyField(u))
    })
}

/// Sign-changing Lipschitz minimizer built from the high ridge with
/// tolerance `ridge_tol`; fails with `StadiumDomain` on stadium-like shapes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_sign_changing(
    domain: *const LinftyDomain,
    ridge_tol: f64,
    out: *mut *mut LinftyField,
) -> LinftyStatus {
    guard(|| {
        let d = &get(domain, "domain")?.0;
        let dist = metric::distance_to_boundary(d);
        let ridge = metric::high_ridge(&dist, ridge_tol);
        let u = eigensolve::construct_sign_changing(d, &ridge, metric::inradius(&dist))?;
        put_handle(out, LinftyField(u))
    })
}

// --------------------------------------------------------------- measure

/// Measure from `len` nodal weights.
///
/// # Safety
/// `weights` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn linfty_measure_new(
    domain: *const LinftyDomain,
    weights: *const f64,
    len: usize,
    out: *mut *mut LinftyMeasure,
) -> LinftyStatus {
    guard(|| {
        let d = get(domain, "domain")?.0.clone();
        let mu = DiscreteMeasure::new(d, slice(weights, len, "weights")?.to_vec())?;
        put_handle(out, LinftyMeasure(mu))
    })
}

/// # Safety
/// `measure` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn linfty_measure_free(measure: *mut LinftyMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// `J*(μ) = Σ μ(x) d(x)` for a nonnegative measure.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_j_star(measure: *const LinftyMeasure, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, transport::j_star_closed(&get(measure, "measure")?.0)?, "out"))
}

/// Dual functional computed by min-cost flow to a free boundary; accepts
/// signed measures.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_j_star_flow(measure: *const LinftyMeasure, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, transport::j_star_flow(&get(measure, "measure")?.0)?.0, "out"))
}

/// Wasserstein-1 distance between two probability measures on one domain.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_w1(mu: *const LinftyMeasure, rho: *const LinftyMeasure, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, transport::w1(&get(mu, "mu")?.0, &get(rho, "rho")?.0)?, "out"))
}

/// Kantorovich–Rubinstein norm; `partial != 0` selects the variant with a
/// free boundary.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_kr_norm(measure: *const LinftyMeasure, partial: i32, out: *mut f64) -> LinftyStatus {
    guard(|| {
        let mu = &get(measure, "measure")?.0;
        let v = if partial != 0 { transport::kr_partial_norm(mu)? } else { transport::kr_norm(mu)? };
        put(out, v, "out")
    })
}

/// Dual Rayleigh quotient `‖μ‖_TV / J*(μ)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn linfty_dual_rayleigh(measure: *const LinftyMeasure, out: *mut f64) -> LinftyStatus {
    guard(|| put(out, transport::dual_rayleigh(&get(measure, "measure")?.0)?, "out"))
}
