//! C interface to `confsets`.
//!
//! Objects are opaque handles created by `cs_*_new` and released by the
//! matching `cs_*_free`. Every fallible call returns a `CsStatus`; on
//! failure `cs_last_error` describes the problem for the calling thread.
//! Matrices are passed row-major. Strings returned by the library must be
//! released with `cs_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use confsets::calibrate::calibrate_ellipse;
use confsets::coverage::{min_coverage, McConfig};
use confsets::lasso::solve_lasso_penalties;
use confsets::shapes::ConfidenceShape;
use confsets::{Error, GramData, LinearModel, TuningVector};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NonConvergence = 3,
    Dimension = 4,
    Singular = 5,
    Parse = 6,
    Panic = 99,
}

/// Symmetric positive definite matrix `C` with its inverse and roots.
pub struct CsGram {
    inner: GramData,
}

/// Design, response and noise level.
pub struct CsModel {
    inner: LinearModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::NonConvergence { .. } => CsStatus::NonConvergence,
        Error::Dimension(_) | Error::TooManyCoordinates(_) => CsStatus::Dimension,
        Error::Singular { .. } | Error::NotSymmetric { .. } => CsStatus::Singular,
        Error::Parse { .. } | Error::Json(_) => CsStatus::Parse,
        _ => CsStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (CsStatus, String)>) -> CsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CsStatus::Panic
        }
    }
}

fn lib<T>(r: confsets::Result<T>) -> Result<T, (CsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CsStatus, String) {
    (CsStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `data` must be null or point to `len` readable doubles.
unsafe fn doubles<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], (CsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

fn tuning_for(lambda: &[f64], n: usize) -> confsets::Result<TuningVector> {
    if n == 0 {
        TuningVector::conservative(lambda.to_vec())
    } else {
        TuningVector::finite_sample(lambda.to_vec(), n)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a Gram handle from a `p x p` row-major matrix.
///
/// # Safety
/// `c` must point to `p * p` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_gram_new(c: *const f64, p: usize, out: *mut *mut CsGram) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = doubles(c, p * p, "c")?;
        let gram = lib(GramData::from_matrix(DMatrix::from_row_slice(p, p, data)))?;
        *out = Box::into_raw(Box::new(CsGram { inner: gram }));
        Ok(())
    })
}

/// # Safety
/// `gram` must be null or a handle from `cs_gram_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_gram_free(gram: *mut CsGram) {
    if !gram.is_null() {
        drop(Box::from_raw(gram));
    }
}

/// Dimension of a Gram handle, 0 for null.
///
/// # Safety
/// `gram` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_gram_dim(gram: *const CsGram) -> usize {
    gram.as_ref().map_or(0, |g| g.inner.dim())
}

/// Builds a model from an `n x p` row-major design and a response.
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n` doubles, `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cs_model_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    sigma: f64,
    out: *mut *mut CsModel,
) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let xd = doubles(x, n * p, "x")?;
        let yd = doubles(y, n, "y")?;
        let model = lib(LinearModel::new(
            DMatrix::from_row_slice(n, p, xd),
            DVector::from_column_slice(yd),
            sigma,
        ))?;
        *out = Box::into_raw(Box::new(CsModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `cs_model_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_model_free(model: *mut CsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Lasso fit with penalties `lambda[0..p]`; writes `p` coefficients.
///
/// # Safety
/// `model` must be live, `lambda` and `beta_out` must hold `p` doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_solve_lasso(
    model: *const CsModel,
    lambda: *const f64,
    p: usize,
    beta_out: *mut f64,
) -> CsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if beta_out.is_null() {
            return Err(null("beta_out"));
        }
        let lambda = doubles(lambda, p, "lambda")?;
        let sol = lib(solve_lasso_penalties(&m.inner, lambda))?;
        if sol.beta_hat.len() != p {
            return Err((CsStatus::Dimension, format!("model has {} coefficients", sol.beta_hat.len())));
        }
        slice::from_raw_parts_mut(beta_out, p).copy_from_slice(sol.beta_hat.as_slice());
        Ok(())
    })
}

/// Size `k` of the centered ellipse `{z : z'Cz <= k}` with minimal
/// coverage `1 - alpha`. `n = 0` selects the conservative limit.
///
/// # Safety
/// `gram` must be live, `lambda` must hold `p` doubles, `k_out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_calibrate_ellipse(
    gram: *const CsGram,
    lambda: *const f64,
    p: usize,
    n: usize,
    sigma: f64,
    alpha: f64,
    k_out: *mut f64,
) -> CsStatus {
    guard(|| {
        let g = gram.as_ref().ok_or_else(|| null("gram"))?;
        if k_out.is_null() {
            return Err(null("k_out"));
        }
        let tuning = lib(tuning_for(doubles(lambda, p, "lambda")?, n))?;
        let r = lib(calibrate_ellipse(&g.inner, &tuning, sigma, alpha))?;
        *k_out = r.k_star;
        Ok(())
    })
}

#[derive(Deserialize)]
struct CoverageRequest {
    lambda: Vec<f64>,
    #[serde(default)]
    n: usize,
    #[serde(default = "one")]
    sigma: f64,
    shape: ConfidenceShape,
    #[serde(default = "samples")]
    n_samples: usize,
}

fn one() -> f64 {
    1.0
}

fn samples() -> usize {
    McConfig::DEFAULT_SAMPLES
}

/// Minimal coverage report as JSON. `request` holds `lambda`, `n` (0 for
/// the conservative limit), `sigma`, `shape` and `n_samples`.
///
/// # Safety
/// `gram` must be live, `request` a NUL-terminated UTF-8 string and
/// `json_out` writable. The result must be released with `cs_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cs_min_coverage_json(
    gram: *const CsGram,
    request: *const c_char,
    seed: u64,
    json_out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let g = gram.as_ref().ok_or_else(|| null("gram"))?;
        if request.is_null() {
            return Err(null("request"));
        }
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        let text = CStr::from_ptr(request)
            .to_str()
            .map_err(|e| (CsStatus::Parse, format!("request is not UTF-8: {e}")))?;
        let req: CoverageRequest = serde_json::from_str(text).map_err(|e| (CsStatus::Parse, e.to_string()))?;
        let tuning = lib(tuning_for(&req.lambda, req.n))?;
        let report = lib(min_coverage(
            &req.shape,
            &g.inner,
            &tuning,
            req.sigma,
            &McConfig::new(req.n_samples, seed),
        ))?;
        let json = serde_json::to_string(&report).map_err(|e| (CsStatus::Parse, e.to_string()))?;
        *json_out = CString::new(json).map_err(|e| (CsStatus::Parse, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
