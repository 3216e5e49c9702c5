//! C interface to `dhif`.
//!
//! Objects are opaque handles created by `*_new`/`dhif_factorize` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`DhifStatus`]; the message of the last failure on the calling thread is
//! available from [`dhif_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dhif::geometry::{assemble_stencil, CoefficientField, FieldKind, GridSpec, SparseSymMatrix};
use dhif::hif::{factorize, HifError, HifFactorization};
use dhif::krylov::{gmres, solve_error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DhifStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    Factorization = 4,
    Solve = 5,
    Panic = 6,
}

/// Coefficient field of the operator.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DhifField {
    Constant = 0,
    RandomHighContrast = 1,
    Checkerboard = 2,
}

/// Assembled periodic operator on an `n³` grid.
pub struct DhifOperator {
    spec: GridSpec,
    a: SparseSymMatrix,
}

/// Factorization of a [`DhifOperator`].
pub struct DhifFactorization {
    f: HifFactorization,
}

/// Outcome of a preconditioned GMRES solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DhifSolveInfo {
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DhifStatus, msg: impl Into<String>) -> DhifStatus {
    set_error(msg.into());
    status
}

fn hif_status(e: HifError) -> DhifStatus {
    let status = match e {
        HifError::LengthMismatch { .. } => DhifStatus::LengthMismatch,
        HifError::Precondition(_) | HifError::Geometry(_) => DhifStatus::InvalidArgument,
        _ => DhifStatus::Factorization,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> DhifStatus) -> DhifStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == DhifStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DhifStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

/// # Safety
/// `p` must be null or valid for `len` writes.
unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> Option<&'a mut [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(p, len))
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dhif_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Assembles the operator on an `n³` periodic grid.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn dhif_operator_new(
    n: usize,
    field: DhifField,
    seed: u64,
    out: *mut *mut DhifOperator,
) -> DhifStatus {
    guard(|| {
        if out.is_null() {
            return fail(DhifStatus::NullPointer, "out is null");
        }
        let spec = match GridSpec::new(n) {
            Ok(s) => s,
            Err(e) => return fail(DhifStatus::InvalidArgument, e.to_string()),
        };
        let kind = match field {
            DhifField::Constant => FieldKind::Constant,
            DhifField::RandomHighContrast => FieldKind::RandomHighContrast,
            DhifField::Checkerboard => FieldKind::Checkerboard,
        };
        let a = match assemble_stencil(&spec, &CoefficientField::new(&spec, kind, seed)) {
            Ok(a) => a,
            Err(e) => return fail(DhifStatus::InvalidArgument, e.to_string()),
        };
        *out = Box::into_raw(Box::new(DhifOperator { spec, a }));
        DhifStatus::Ok
    })
}

/// # Safety
/// `op` must be null or a handle from [`dhif_operator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dhif_operator_free(op: *mut DhifOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of unknowns, `n³`; zero for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dhif_operator_dim(op: *const DhifOperator) -> usize {
    op.as_ref().map_or(0, |o| o.a.dim())
}

/// `y = A x`.
///
/// # Safety
/// `x` and `y` must be valid for `len` elements and must not overlap.
#[no_mangle]
pub unsafe extern "C" fn dhif_operator_apply(
    op: *const DhifOperator,
    x: *const f64,
    y: *mut f64,
    len: usize,
) -> DhifStatus {
    guard(|| {
        let (Some(o), Some(x), Some(y)) = (op.as_ref(), slice(x, len), slice_mut(y, len)) else {
            return fail(DhifStatus::NullPointer, "null argument");
        };
        if len != o.a.dim() {
            return fail(DhifStatus::LengthMismatch, format!("length {len}, operator has {}", o.a.dim()));
        }
        y.copy_from_slice(&o.a.matvec(x));
        DhifStatus::Ok
    })
}

/// Factors `op` with ID precision `eps` (`0` for an exact factorization).
///
/// # Safety
/// `op` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn dhif_factorize(
    op: *const DhifOperator,
    eps: f64,
    out: *mut *mut DhifFactorization,
) -> DhifStatus {
    guard(|| {
        let Some(o) = op.as_ref() else { return fail(DhifStatus::NullPointer, "op is null") };
        if out.is_null() {
            return fail(DhifStatus::NullPointer, "out is null");
        }
        if !(0.0..1.0).contains(&eps) {
            return fail(DhifStatus::InvalidArgument, format!("eps = {eps} outside [0, 1)"));
        }
        match factorize(&o.a, &o.spec, eps) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(DhifFactorization { f }));
                DhifStatus::Ok
            }
            Err(e) => hif_status(e),
        }
    })
}

/// # Safety
/// `f` must be null or a handle from [`dhif_factorize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dhif_factorization_free(f: *mut DhifFactorization) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of points left at the top level; zero for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dhif_factorization_root_size(f: *const DhifFactorization) -> usize {
    f.as_ref().map_or(0, |f| f.f.root_size())
}

/// Bytes of stored factor entries; zero for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dhif_factorization_bytes(f: *const DhifFactorization) -> usize {
    f.as_ref().map_or(0, |f| f.f.stored_bytes())
}

/// `y = F⁻¹ x`.
///
/// # Safety
/// `x` and `y` must be valid for `len` elements and must not overlap.
#[no_mangle]
pub unsafe extern "C" fn dhif_apply_inverse(
    f: *const DhifFactorization,
    x: *const f64,
    y: *mut f64,
    len: usize,
) -> DhifStatus {
    guard(|| {
        let (Some(f), Some(x), Some(y)) = (f.as_ref(), slice(x, len), slice_mut(y, len)) else {
            return fail(DhifStatus::NullPointer, "null argument");
        };
        match f.f.apply_inverse(x) {
            Ok(v) => {
                y.copy_from_slice(&v);
                DhifStatus::Ok
            }
            Err(e) => hif_status(e),
        }
    })
}

/// `‖(I − F⁻¹A)x‖/‖x‖` for a Gaussian `x` drawn from `seed`.
///
/// # Safety
/// Handles must be live and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dhif_solve_error(
    op: *const DhifOperator,
    f: *const DhifFactorization,
    seed: u64,
    out: *mut f64,
) -> DhifStatus {
    guard(|| {
        let (Some(o), Some(f)) = (op.as_ref(), f.as_ref()) else {
            return fail(DhifStatus::NullPointer, "null handle");
        };
        if out.is_null() {
            return fail(DhifStatus::NullPointer, "out is null");
        }
        if f.f.num_dofs() != o.a.dim() {
            return fail(DhifStatus::LengthMismatch, "factorization does not match operator");
        }
        match solve_error(|v| Ok::<_, HifError>(o.a.matvec(v)), |v| f.f.apply_inverse(v), o.a.dim(), seed) {
            Ok(e) => {
                *out = e;
                DhifStatus::Ok
            }
            Err(e) => hif_status(e),
        }
    })
}

/// Solves `A u = b` by GMRES preconditioned with `F⁻¹`. `u` receives the
/// final iterate even when the solve does not converge; `info` may be null.
///
/// # Safety
/// `b` and `u` must be valid for `len` elements; `info` null or valid.
#[no_mangle]
pub unsafe extern "C" fn dhif_gmres(
    op: *const DhifOperator,
    f: *const DhifFactorization,
    b: *const f64,
    u: *mut f64,
    len: usize,
    tol: f64,
    max_iter: usize,
    info: *mut DhifSolveInfo,
) -> DhifStatus {
    guard(|| {
        let (Some(o), Some(f), Some(b), Some(u)) = (op.as_ref(), f.as_ref(), slice(b, len), slice_mut(u, len))
        else {
            return fail(DhifStatus::NullPointer, "null argument");
        };
        if len != o.a.dim() || f.f.num_dofs() != len {
            return fail(DhifStatus::LengthMismatch, format!("length {len}, operator has {}", o.a.dim()));
        }
        match gmres(|v| Ok::<_, HifError>(o.a.matvec(v)), |v| f.f.apply_inverse(v), b, tol, max_iter) {
            Ok((x, rep)) => {
                u.copy_from_slice(&x);
                if let Some(info) = info.as_mut() {
                    *info = DhifSolveInfo {
                        iterations: rep.iterations,
                        converged: rep.converged,
                        relative_residual: rep.relative_residual,
                    };
                }
                DhifStatus::Ok
            }
            Err(e) => fail(DhifStatus::Solve, e.to_string()),
        }
    })
}
