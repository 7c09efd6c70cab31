//! C ABI over `pmdisc`.
//!
//! Matrices cross the boundary as row-major `re`/`im` buffers of length
//! side² together with the four party dimensions in the order A_I, A_O,
//! B_I, B_O. Process matrices live behind an opaque handle that the caller
//! releases with [`pm_process_matrix_free`]. Every fallible call returns a
//! [`PmStatus`]; on failure [`pm_last_error`] describes the cause until the
//! next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pmdisc::discrimination::{base_norm, classify, distance_to_class, p_adapt, p_succ};
use pmdisc::error::Error;
use pmdisc::process::{make_cns_example, validate_def1, PartyDims, ProcessClassTag, ProcessMatrix};
use pmdisc::sdp::SolveOptions;
use pmdisc::tensor::{CMatrix, HermitianOperator, C64};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    /// a required pointer argument was null
    NullPointer = 1,
    /// buffer length or party dimensions inconsistent
    Dimension = 2,
    /// the matrix is not a valid process matrix (or not Hermitian)
    Invalid = 3,
    /// unreadable or malformed input file
    Input = 4,
    /// solver or eigensolver failure
    Numerical = 5,
    /// an operation precondition failed, e.g. operands are not combs
    Precondition = 6,
    /// internal panic caught at the boundary
    Panic = 7,
}

/// Process-matrix classes for [`pm_distance`] and [`pm_classify`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmClass {
    Free = 0,
    CombAB = 1,
    CombBA = 2,
    Separable = 3,
    Unclassified = 4,
}

impl From<PmClass> for ProcessClassTag {
    fn from(c: PmClass) -> Self {
        match c {
            PmClass::Free => Self::Free,
            PmClass::CombAB => Self::CombAB,
            PmClass::CombBA => Self::CombBA,
            PmClass::Separable => Self::Separable,
            PmClass::Unclassified => Self::Unclassified,
        }
    }
}

impl From<ProcessClassTag> for PmClass {
    fn from(c: ProcessClassTag) -> Self {
        match c {
            ProcessClassTag::Free => Self::Free,
            ProcessClassTag::CombAB => Self::CombAB,
            ProcessClassTag::CombBA => Self::CombBA,
            ProcessClassTag::Separable => Self::Separable,
            ProcessClassTag::Unclassified => Self::Unclassified,
        }
    }
}

/// Opaque process matrix.
pub struct PmProcessMatrix {
    inner: ProcessMatrix,
}

/// Residuals of the validity conditions.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PmValidation {
    /// 1 if valid, 0 otherwise
    pub valid: i32,
    pub min_eigenvalue: f64,
    pub lv_residual: f64,
    pub trace_residual: f64,
}

/// Summary of a solved program.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PmSolveInfo {
    pub value: f64,
    pub gap: f64,
    pub residual: f64,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PmStatus {
    match e {
        Error::DimensionMismatch(_) | Error::UnknownLabel(_) | Error::DuplicateLabel(_) => {
            PmStatus::Dimension
        }
        Error::NotHermitian(_)
        | Error::InvalidProcessMatrix(_)
        | Error::NotState(_)
        | Error::NegativeEigenvalue(_)
        | Error::NotPermutation(_) => PmStatus::Invalid,
        Error::Parse(_) | Error::Io(_) => PmStatus::Input,
        Error::Solver { .. } | Error::Convergence => PmStatus::Numerical,
        Error::Precondition(_) => PmStatus::Precondition,
    }
}

/// Runs `f`, recording the error message and mapping errors and panics to
/// status codes.
fn guard(f: impl FnOnce() -> Result<(), PmStatusError>) -> PmStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PmStatus::Ok,
        Ok(Err(PmStatusError(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PmStatus::Panic
        }
    }
}

struct PmStatusError(PmStatus, String);

impl From<Error> for PmStatusError {
    fn from(e: Error) -> Self {
        Self(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> PmStatusError {
    PmStatusError(PmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_dims(dims: *const usize) -> Result<PartyDims, PmStatusError> {
    if dims.is_null() {
        return Err(null("dims"));
    }
    let d = std::slice::from_raw_parts(dims, 4);
    if d.contains(&0) {
        return Err(PmStatusError(
            PmStatus::Dimension,
            "zero party dimension".into(),
        ));
    }
    Ok(PartyDims::new(d[0], d[1], d[2], d[3]))
}

unsafe fn read_operator(
    dims: *const usize,
    re: *const f64,
    im: *const f64,
    len: usize,
) -> Result<HermitianOperator, PmStatusError> {
    let dims = read_dims(dims)?;
    if re.is_null() {
        return Err(null("re"));
    }
    let side = dims.total();
    if len != side * side {
        return Err(PmStatusError(
            PmStatus::Dimension,
            format!("buffer length {len} but side {side}"),
        ));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(im, len))
    };
    let m = CMatrix::from_fn(side, side, |r, c| {
        let k = r * side + c;
        C64::new(re[k], im.map_or(0.0, |i| i[k]))
    });
    let op = pmdisc::tensor::LabelledOperator::new(dims.labels(), m)?;
    let dev = op.hermitian_deviation();
    if !dev.is_finite() || dev > pmdisc::tensor::HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev).into());
    }
    Ok(HermitianOperator::symmetrized(op))
}

unsafe fn handle<'a>(
    p: *const PmProcessMatrix,
    what: &str,
) -> Result<&'a ProcessMatrix, PmStatusError> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn emit(out: *mut *mut PmProcessMatrix, w: ProcessMatrix) {
    *out = Box::into_raw(Box::new(PmProcessMatrix { inner: w }));
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn pm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a process matrix from row-major buffers, checking validity with
/// tolerance `tol`. `im` may be null for real matrices.
///
/// # Safety
/// `dims` must point to 4 values; `re` (and `im` if non-null) to `len`
/// values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_new(
    dims: *const usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    tol: f64,
    out: *mut *mut PmProcessMatrix,
) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let op = read_operator(dims, re, im, len)?;
        let w = ProcessMatrix::new(op, tol)?;
        emit(out, w);
        Ok(())
    })
}

/// Loads a process matrix from a MatrixFile JSON document.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_load(
    path: *const c_char,
    tol: f64,
    out: *mut *mut PmProcessMatrix,
) -> PmStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| PmStatusError(PmStatus::Input, "path is not UTF-8".into()))?;
        let op = pmdisc::io::load_hermitian(Path::new(p))?;
        emit(out, ProcessMatrix::new(op, tol)?);
        Ok(())
    })
}

/// The causally non-separable qubit example.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_cns(out: *mut *mut PmProcessMatrix) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, make_cns_example());
        Ok(())
    })
}

/// 1/(d_AI d_BI) · 1 for the given dimensions.
///
/// # Safety
/// `dims` must point to 4 values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_maximally_mixed(
    dims: *const usize,
    out: *mut *mut PmProcessMatrix,
) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = read_dims(dims)?;
        emit(out, ProcessMatrix::maximally_mixed(d)?);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `w` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_free(w: *mut PmProcessMatrix) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Side length of the matrix, 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_side(w: *const PmProcessMatrix) -> usize {
    w.as_ref().map_or(0, |h| h.inner.dims().total())
}

/// Writes the party dimensions (A_I, A_O, B_I, B_O) to `dims`.
///
/// # Safety
/// `w` must be a live handle; `dims` must have room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_dims(
    w: *const PmProcessMatrix,
    dims: *mut usize,
) -> PmStatus {
    guard(|| {
        let w = handle(w, "w")?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        let d = w.dims();
        std::slice::from_raw_parts_mut(dims, 4).copy_from_slice(&[d.ai, d.ao, d.bi, d.bo]);
        Ok(())
    })
}

/// Copies the matrix into row-major buffers of length side².
///
/// # Safety
/// `w` must be a live handle; `re` and `im` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pm_process_matrix_copy(
    w: *const PmProcessMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> PmStatus {
    guard(|| {
        let w = handle(w, "w")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let side = w.dims().total();
        if len != side * side {
            return Err(PmStatusError(
                PmStatus::Dimension,
                format!("buffer length {len} but side {side}"),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        let m = w.data();
        for r in 0..side {
            for c in 0..side {
                re[r * side + c] = m[(r, c)].re;
                im[r * side + c] = m[(r, c)].im;
            }
        }
        Ok(())
    })
}

/// Checks the validity conditions without constructing a handle. An
/// invalid matrix is not an error: the status is `Ok` and `valid` is 0.
///
/// # Safety
/// As for [`pm_process_matrix_new`]; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_validate(
    dims: *const usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    tol: f64,
    report: *mut PmValidation,
) -> PmStatus {
    guard(|| {
        if report.is_null() {
            return Err(null("report"));
        }
        let op = read_operator(dims, re, im, len)?;
        let r = validate_def1(&op, tol)?;
        *report = PmValidation {
            valid: r.valid as i32,
            min_eigenvalue: r.min_eigenvalue,
            lv_residual: r.lv_residual,
            trace_residual: r.trace_residual,
        };
        Ok(())
    })
}

fn info(value: f64, s: pmdisc::discrimination::SolveStats) -> PmSolveInfo {
    PmSolveInfo {
        value,
        gap: s.gap,
        residual: s.residual(),
        iterations: s.iterations,
    }
}

/// Optimal success probability for discriminating `w0` from `w1` with
/// equal priors.
///
/// # Safety
/// `w0`, `w1` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_p_succ(
    w0: *const PmProcessMatrix,
    w1: *const PmProcessMatrix,
    out: *mut PmSolveInfo,
) -> PmStatus {
    guard(|| {
        let (a, b) = (handle(w0, "w0")?, handle(w1, "w1")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let r = p_succ(a, b)?;
        *out = info(r.p_succ, r.stats);
        Ok(())
    })
}

/// Optimal success probability over adaptive strategies; both operands must
/// be A-before-B combs.
///
/// # Safety
/// As for [`pm_p_succ`].
#[no_mangle]
pub unsafe extern "C" fn pm_p_adapt(
    w0: *const PmProcessMatrix,
    w1: *const PmProcessMatrix,
    out: *mut PmSolveInfo,
) -> PmStatus {
    guard(|| {
        let (a, b) = (handle(w0, "w0")?, handle(w1, "w1")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let r = p_adapt(a, b)?;
        *out = info(r.p_adapt, r.stats);
        Ok(())
    })
}

/// Distance from `w` to a class. If `closest` is non-null it receives a new
/// handle to the closest member.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable; `closest` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pm_distance(
    w: *const PmProcessMatrix,
    class: PmClass,
    out: *mut PmSolveInfo,
    closest: *mut *mut PmProcessMatrix,
) -> PmStatus {
    guard(|| {
        let w = handle(w, "w")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if class == PmClass::Unclassified {
            return Err(PmStatusError(
                PmStatus::Precondition,
                "no distance to the unclassified set".into(),
            ));
        }
        let r = distance_to_class(w, class.into())?;
        *out = info(r.distance, r.stats);
        if !closest.is_null() {
            emit(closest, r.closest);
        }
        Ok(())
    })
}

/// Base norm of a Hermitian operator on the four party systems.
///
/// # Safety
/// As for [`pm_process_matrix_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_base_norm(
    dims: *const usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut f64,
) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = read_operator(dims, re, im, len)?;
        *out = base_norm(&x)?;
        Ok(())
    })
}

/// Classifies `w`, writing the class to `out`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_classify(
    w: *const PmProcessMatrix,
    tol: f64,
    out: *mut PmClass,
) -> PmStatus {
    guard(|| {
        let w = handle(w, "w")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = classify(w, tol, &SolveOptions::default())?.tag.into();
        Ok(())
    })
}
