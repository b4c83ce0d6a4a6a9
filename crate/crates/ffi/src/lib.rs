//! C ABI over `qvlab`.
//!
//! Objects are opaque heap handles created by `qv_*_new*` style functions and
//! released with the matching `qv_*_free`. Every fallible call returns a
//! [`QvStatus`]; on failure `qv_last_error_message` holds a description for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qvlab::capacity::{capacity_ladder, classify_criticality, global_capacity, Criticality, SupersolutionDatum};
use qvlab::geometry::ModelManifold;
use qvlab::green::GreenKernel;
use qvlab::hardy::chi_general;
use qvlab::mesh::{PotentialProfile, RadialMesh};
use qvlab::solver::{monotone_iteration, Coefficients, MonotoneOptions, Nonlinearity, Window};
use qvlab::spectral::fundamental_tone;
use qvlab::Error;

/// Result codes. `QV_OK` is zero; every library error has its own code.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvStatus {
    QvOk = 0,
    QvNullPointer = 1,
    QvBufferTooSmall = 2,
    QvPanic = 3,
    QvInvalidInput = 10,
    QvInvalidStep = 11,
    QvOutOfDomain = 12,
    QvNonPositiveWarping = 13,
    QvNotSubcritical = 14,
    QvInconclusive = 15,
    QvUnsupportedAlpha = 16,
    QvNonPositiveQuotient = 17,
    QvMassExceeded = 18,
    QvUnsupportedExponent = 19,
    QvSingularPotential = 20,
    QvNonPositiveG = 21,
    QvUnboundedRatio = 22,
    QvNoInteriorDof = 23,
    QvNotCoercive = 24,
    QvNonConvergence = 25,
    QvBadNonlinearity = 26,
    QvDeltaViolated = 27,
    QvLadderStall = 28,
    QvDimensionTooLow = 29,
    QvMonotonicityViolated = 30,
    QvConfig = 31,
    QvIo = 32,
}

impl From<&Error> for QvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) => QvStatus::QvInvalidInput,
            Error::InvalidStep(_) => QvStatus::QvInvalidStep,
            Error::OutOfDomain { .. } => QvStatus::QvOutOfDomain,
            Error::NonPositiveWarping(_) => QvStatus::QvNonPositiveWarping,
            Error::NotSubcritical(_) => QvStatus::QvNotSubcritical,
            Error::Inconclusive(_) => QvStatus::QvInconclusive,
            Error::UnsupportedAlpha(_) => QvStatus::QvUnsupportedAlpha,
            Error::NonPositiveQuotient(_) => QvStatus::QvNonPositiveQuotient,
            Error::MassExceeded(_) => QvStatus::QvMassExceeded,
            Error::UnsupportedExponent(_) => QvStatus::QvUnsupportedExponent,
            Error::SingularPotential(_) => QvStatus::QvSingularPotential,
            Error::NonPositiveG { .. } => QvStatus::QvNonPositiveG,
            Error::UnboundedRatio(_) => QvStatus::QvUnboundedRatio,
            Error::NoInteriorDof => QvStatus::QvNoInteriorDof,
            Error::NotCoercive(_) => QvStatus::QvNotCoercive,
            Error::NonConvergence { .. } => QvStatus::QvNonConvergence,
            Error::BadNonlinearity(_) => QvStatus::QvBadNonlinearity,
            Error::DeltaViolated { .. } => QvStatus::QvDeltaViolated,
            Error::LadderStall(_) => QvStatus::QvLadderStall,
            Error::DimensionTooLow(_) => QvStatus::QvDimensionTooLow,
            Error::MonotonicityViolated(_) => QvStatus::QvMonotonicityViolated,
            Error::Config(_) => QvStatus::QvConfig,
            Error::Io(_) => QvStatus::QvIo,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvCriticality {
    QvSubcritical = 0,
    QvCritical = 1,
    QvInconclusiveClass = 2,
}

/// Radial model manifold.
pub struct QvModel(ModelManifold);

/// P1 finite element mesh on a ball or annulus.
pub struct QvMesh(RadialMesh);

/// Radial coefficient profile.
pub struct QvPotential(PotentialProfile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(QvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(QvStatus::from(&e), format!("{}: {e}", e.name()))
    }
}

fn null() -> Fail {
    Fail(QvStatus::QvNullPointer, "null pointer argument".into())
}

/// Runs `f`, records any failure for `qv_last_error_message` and converts
/// panics into `QV_PANIC`.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> QvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QvStatus::QvOk,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QvStatus::QvPanic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

unsafe fn write_handle<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    write_out(out, Box::into_raw(Box::new(v)))
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies `src` into `buf`; always stores the required length in `written`.
unsafe fn write_slice(src: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), Fail> {
    write_out(written, src.len())?;
    if len < src.len() {
        return Err(Fail(QvStatus::QvBufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    if buf.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn qv_status_name(status: QvStatus) -> *const c_char {
    let s: &'static CStr = match status {
        QvStatus::QvOk => c"Ok",
        QvStatus::QvNullPointer => c"NullPointer",
        QvStatus::QvBufferTooSmall => c"BufferTooSmall",
        QvStatus::QvPanic => c"Panic",
        QvStatus::QvInvalidInput => c"InvalidInput",
        QvStatus::QvInvalidStep => c"InvalidStep",
        QvStatus::QvOutOfDomain => c"OutOfDomain",
        QvStatus::QvNonPositiveWarping => c"NonPositiveWarping",
        QvStatus::QvNotSubcritical => c"NotSubcritical",
        QvStatus::QvInconclusive => c"Inconclusive",
        QvStatus::QvUnsupportedAlpha => c"UnsupportedAlpha",
        QvStatus::QvNonPositiveQuotient => c"NonPositiveQuotient",
        QvStatus::QvMassExceeded => c"MassExceeded",
        QvStatus::QvUnsupportedExponent => c"UnsupportedExponent",
        QvStatus::QvSingularPotential => c"SingularPotential",
        QvStatus::QvNonPositiveG => c"NonPositiveG",
        QvStatus::QvUnboundedRatio => c"UnboundedRatio",
        QvStatus::QvNoInteriorDof => c"NoInteriorDof",
        QvStatus::QvNotCoercive => c"NotCoercive",
        QvStatus::QvNonConvergence => c"NonConvergence",
        QvStatus::QvBadNonlinearity => c"BadNonlinearity",
        QvStatus::QvDeltaViolated => c"DeltaViolated",
        QvStatus::QvLadderStall => c"LadderStall",
        QvStatus::QvDimensionTooLow => c"DimensionTooLow",
        QvStatus::QvMonotonicityViolated => c"MonotonicityViolated",
        QvStatus::QvConfig => c"Config",
        QvStatus::QvIo => c"Io",
    };
    s.as_ptr()
}

// ---- models ----

/// Euclidean space `R^m` with exponent `p`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn qv_model_flat(m: usize, p: f64, out: *mut *mut QvModel) -> QvStatus {
    guard(|| write_handle(out, QvModel(ModelManifold::flat(m, p)?)))
}

/// Hyperbolic space of curvature `-kappa^2`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn qv_model_hyperbolic(m: usize, p: f64, kappa: f64, out: *mut *mut QvModel) -> QvStatus {
    guard(|| write_handle(out, QvModel(ModelManifold::hyperbolic(m, p, kappa)?)))
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qv_model_free(model: *mut QvModel) {
    free_handle(model)
}

/// Hardy weight `chi(r)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_hardy_weight(model: *const QvModel, r: f64, out: *mut f64) -> QvStatus {
    guard(|| write_out(out, chi_general(&deref(model)?.0, r)?))
}

/// Green kernel `G(r)`; fails with `QV_NOT_SUBCRITICAL` on parabolic models.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_green_value(model: *const QvModel, r: f64, out: *mut f64) -> QvStatus {
    guard(|| write_out(out, GreenKernel::new(&deref(model)?.0)?.value(r)?))
}

// ---- potentials ----

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_constant(c: f64, out: *mut *mut QvPotential) -> QvStatus {
    guard(|| write_handle(out, QvPotential(PotentialProfile::Constant(c))))
}

/// `scale * chi` for the model's Hardy weight.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_hardy(model: *const QvModel, scale: f64, out: *mut *mut QvPotential) -> QvStatus {
    guard(|| write_handle(out, QvPotential(PotentialProfile::hardy(&deref(model)?.0, scale))))
}

/// Smooth bump of the given height supported in `|r - center| < width`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_bump(
    center: f64,
    width: f64,
    height: f64,
    out: *mut *mut QvPotential,
) -> QvStatus {
    guard(|| {
        if width.is_nan() || width <= 0.0 {
            return Err(Fail(QvStatus::QvInvalidInput, format!("bump width must be positive, got {width}")));
        }
        write_handle(out, QvPotential(PotentialProfile::Bump { center, width, height }))
    })
}

/// `a + b`; the inputs stay owned by the caller.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_sum(
    a: *const QvPotential,
    b: *const QvPotential,
    out: *mut *mut QvPotential,
) -> QvStatus {
    guard(|| {
        let s = deref(a)?.0.clone().plus(deref(b)?.0.clone());
        write_handle(out, QvPotential(s))
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_eval(v: *const QvPotential, r: f64, out: *mut f64) -> QvStatus {
    guard(|| write_out(out, deref(v)?.0.eval(r)?))
}

/// # Safety
/// `v` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qv_potential_free(v: *mut QvPotential) {
    free_handle(v)
}

// ---- meshes ----

/// Ball `B_radius` with `n` uniform elements.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_mesh_ball(model: *const QvModel, radius: f64, n: usize, out: *mut *mut QvMesh) -> QvStatus {
    guard(|| write_handle(out, QvMesh(RadialMesh::ball(&deref(model)?.0, radius, n)?)))
}

/// Annulus `inner < r < outer` with `n` uniform elements.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_mesh_annulus(
    model: *const QvModel,
    inner: f64,
    outer: f64,
    n: usize,
    out: *mut *mut QvMesh,
) -> QvStatus {
    guard(|| write_handle(out, QvMesh(RadialMesh::annulus(&deref(model)?.0, inner, outer, n)?)))
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn qv_mesh_node_count(mesh: *const QvMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.n_nodes())
}

/// Copies the node radii into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_mesh_nodes(
    mesh: *const QvMesh,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> QvStatus {
    guard(|| write_slice(deref(mesh)?.0.nodes(), buf, len, written))
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qv_mesh_free(mesh: *mut QvMesh) {
    free_handle(mesh)
}

// ---- computations ----

/// First eigenvalue of `-Delta_p - V` with Dirichlet conditions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_fundamental_tone(mesh: *const QvMesh, v: *const QvPotential, lambda: *mut f64) -> QvStatus {
    guard(|| write_out(lambda, fundamental_tone(&deref(mesh)?.0, &deref(v)?.0)?.lambda))
}

/// Capacity of `B_inner` with `g` constant along the ladder
/// `B_{inner factor^j}`, `j = 1..=rungs`; stores the last rung's value.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_capacity(
    model: *const QvModel,
    v: *const QvPotential,
    g: f64,
    inner: f64,
    factor: f64,
    rungs: usize,
    elements_per_factor: usize,
    out: *mut f64,
) -> QvStatus {
    guard(|| {
        let ladder = capacity_ladder(&deref(model)?.0, inner, factor, rungs, elements_per_factor)?;
        let gc = global_capacity(&ladder, &deref(v)?.0, &SupersolutionDatum::constant(g))?;
        write_out(out, gc.estimate)
    })
}

/// Classifies `Q_V` from the same capacity ladder as [`qv_capacity`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_classify(
    model: *const QvModel,
    v: *const QvPotential,
    inner: f64,
    factor: f64,
    rungs: usize,
    elements_per_factor: usize,
    out: *mut QvCriticality,
) -> QvStatus {
    guard(|| {
        let ladder = capacity_ladder(&deref(model)?.0, inner, factor, rungs, elements_per_factor)?;
        let rep = classify_criticality(&ladder, &deref(v)?.0, &SupersolutionDatum::constant(1.0))?;
        write_out(
            out,
            match rep.class {
                Criticality::Subcritical => QvCriticality::QvSubcritical,
                Criticality::Critical => QvCriticality::QvCritical,
                Criticality::Inconclusive => QvCriticality::QvInconclusiveClass,
            },
        )
    })
}

/// Monotone iteration for `Delta_p u + a u^{p-1} - b u^sigma = 0`, `u = eps`
/// on the outer boundary, window `[lo, hi]`. Writes nodal values of `u`.
///
/// # Safety
/// Pointers must be valid; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qv_solve_power(
    mesh: *const QvMesh,
    a: *const QvPotential,
    b: *const QvPotential,
    sigma: f64,
    eps: f64,
    lo: f64,
    hi: f64,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> QvStatus {
    guard(|| {
        let mesh = &deref(mesh)?.0;
        let coeffs = Coefficients::new(deref(a)?.0.clone(), deref(b)?.0.clone());
        let rep = monotone_iteration(
            mesh,
            &coeffs,
            &Nonlinearity::power(sigma),
            eps,
            &Window::new(lo, hi)?,
            &MonotoneOptions::default(),
        )?;
        write_slice(rep.solution.values(), buf, len, written)
    })
}
