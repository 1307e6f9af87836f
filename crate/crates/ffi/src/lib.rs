//! C ABI over `remote_tomo`.
//!
//! Objects are opaque handles returned through out-pointers and released
//! with the matching `rt_*_free`. Every fallible call returns an
//! [`RtStatus`]; on failure `rt_last_error_message` describes the cause for
//! the calling thread. Array getters copy into caller-owned buffers in
//! row-major order.
//!
//! # Safety
//!
//! Every handle argument must be null or a live pointer obtained from this
//! library and not yet freed. Output pointers must be null or writable.
//! Buffers must hold at least `len` elements. Handles may be shared across
//! threads for reading; freeing one while another call uses it is undefined.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use remote_tomo::interaction::{expect_y_theta, ApparatusPreparation};
use remote_tomo::io::load_wavefunction_file;
use remote_tomo::states::{displaced_vacuum, oscillator_eigenstate, SystemState, WignerGrid};
use remote_tomo::tomography::{
    build_sinogram, inverse_radon_wigner, reconstruct_density_matrix, Apodization, DensityMatrixGrid, RadonFilterConfig, Sinogram,
    SinogramMode,
};
use remote_tomo::transit::{transit_sinogram, TransitParams};
use remote_tomo::{Grid1D, QuadratureAngle, TomoError};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameter, configuration or input file.
    InvalidArgument = 2,
    /// A quadrature or evaluation budget was exhausted.
    Numerical = 3,
    /// Invalid, too narrow or mismatched grid.
    Grid = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Sinogram source.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtMode {
    Exact = 0,
    Simulated = 1,
}

/// Ramp-filter taper.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtApodization {
    None = 0,
    Cosine = 1,
}

/// A sampled system wavefunction.
pub struct RtState(SystemState);

/// Quadrature densities indexed `[angle, u]`.
pub struct RtSinogram(Sinogram);

/// A Wigner function on a `q x p` grid.
pub struct RtWigner(WignerGrid);

/// A position-space density matrix on a `q x q'` grid.
pub struct RtDensityMatrix(DensityMatrixGrid);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &TomoError) -> RtStatus {
    match e.exit_code() {
        2 => RtStatus::InvalidArgument,
        3 => RtStatus::Numerical,
        4 => RtStatus::Grid,
        _ => RtStatus::Io,
    }
}

/// Runs `f`, recording the error message and containing panics.
fn guard(f: impl FnOnce() -> Result<(), (RtStatus, String)>) -> RtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RtStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RtStatus::Panic
        }
    }
}

fn lift<T>(r: remote_tomo::Result<T>) -> Result<T, (RtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RtStatus, String) {
    (RtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RtStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (RtStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: impl ExactSizeIterator<Item = f64>, buf: *mut f64, len: usize) -> Result<(), (RtStatus, String)> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err((RtStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", values.len())));
    }
    for (i, v) in values.enumerate() {
        *buf.add(i) = v;
    }
    Ok(())
}

fn grid(min: f64, max: f64, count: usize) -> Result<Grid1D, (RtStatus, String)> {
    lift(Grid1D::new(min, max, count))
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf` and returns its length without the terminator. Pass a null `buf` to
/// query the length.
#[no_mangle]
pub unsafe extern "C" fn rt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = message.len().min(len - 1);
            ptr::copy_nonoverlapping(message.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        message.len()
    })
}

/// Oscillator eigenstate `n` on `[min, max]` with `count` samples.
#[no_mangle]
pub unsafe extern "C" fn rt_state_fock(n: usize, min: f64, max: f64, count: usize, out: *mut *mut RtState) -> RtStatus {
    guard(|| {
        let s = lift(oscillator_eigenstate(n, grid(min, max, count)?))?;
        emit(out, RtState(s))
    })
}

/// Coherent state centred at `(q0, p0)`.
#[no_mangle]
pub unsafe extern "C" fn rt_state_displaced_vacuum(q0: f64, p0: f64, min: f64, max: f64, count: usize, out: *mut *mut RtState) -> RtStatus {
    guard(|| {
        let s = lift(displaced_vacuum(q0, p0, grid(min, max, count)?))?;
        emit(out, RtState(s))
    })
}

/// Loads a `q,re,im` CSV wavefunction file.
#[no_mangle]
pub unsafe extern "C" fn rt_state_load(path: *const c_char, out: *mut *mut RtState) -> RtStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| (RtStatus::InvalidArgument, e.to_string()))?;
        let s = lift(load_wavefunction_file(Path::new(path)))?;
        emit(out, RtState(s))
    })
}

/// Sets `*norm` to the discrete norm of the state.
#[no_mangle]
pub unsafe extern "C" fn rt_state_norm(state: *const RtState, norm: *mut f64) -> RtStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if norm.is_null() {
            return Err(null("norm"));
        }
        *norm = s.0.norm();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_state_free(state: *mut RtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Expectation of the rotated tracking observable at `(theta, u)` for a
/// symmetric preparation of width `b1`.
#[no_mangle]
pub unsafe extern "C" fn rt_expect_y_theta(state: *const RtState, b1: f64, theta: f64, u: f64, value: *mut f64) -> RtStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let prep = lift(ApparatusPreparation::symmetric(b1))?;
        *value = lift(expect_y_theta(&s.0, &prep, QuadratureAngle::new(theta), u))?;
        Ok(())
    })
}

/// Sinogram over `angle_count` equally spaced angles in `[0, pi)`.
///
/// `b1` is ignored in exact mode; `omega_tau` applies transit correction in
/// simulated mode.
#[no_mangle]
pub unsafe extern "C" fn rt_sinogram_build(
    state: *const RtState,
    mode: RtMode,
    b1: f64,
    omega_tau: f64,
    angle_count: usize,
    u_min: f64,
    u_max: f64,
    u_count: usize,
    out: *mut *mut RtSinogram,
) -> RtStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let ug = grid(u_min, u_max, u_count)?;
        let angles = QuadratureAngle::half_turn(angle_count);
        let sino = match mode {
            RtMode::Exact => lift(build_sinogram(&s.0, SinogramMode::Exact, &angles, &ug))?,
            RtMode::Simulated => {
                let prep = lift(ApparatusPreparation::symmetric(b1))?;
                if omega_tau == 0.0 {
                    lift(build_sinogram(&s.0, SinogramMode::Simulated(prep), &angles, &ug))?
                } else {
                    let transit = lift(TransitParams::from_phase(omega_tau))?;
                    lift(transit_sinogram(&s.0, &prep, &angles, &ug, transit))?
                }
            }
        };
        emit(out, RtSinogram(sino))
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_sinogram_dims(sino: *const RtSinogram, angles: *mut usize, samples: *mut usize) -> RtStatus {
    guard(|| {
        let s = deref(sino, "sinogram")?;
        if angles.is_null() || samples.is_null() {
            return Err(null("dimension output"));
        }
        *angles = s.0.angles().len();
        *samples = s.0.ugrid().count();
        Ok(())
    })
}

/// Copies the `angles x samples` values.
#[no_mangle]
pub unsafe extern "C" fn rt_sinogram_values(sino: *const RtSinogram, buf: *mut f64, len: usize) -> RtStatus {
    guard(|| {
        let s = deref(sino, "sinogram")?;
        copy_out(s.0.values().iter().copied(), buf, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_sinogram_free(sino: *mut RtSinogram) {
    if !sino.is_null() {
        drop(Box::from_raw(sino));
    }
}

/// Filtered backprojection onto the square grid `[min, max]^2`.
/// A nonpositive `eta_max` selects the Nyquist limit.
#[no_mangle]
pub unsafe extern "C" fn rt_reconstruct_wigner(
    sino: *const RtSinogram,
    min: f64,
    max: f64,
    count: usize,
    eta_max: f64,
    apodization: RtApodization,
    out: *mut *mut RtWigner,
) -> RtStatus {
    guard(|| {
        let s = deref(sino, "sinogram")?;
        let g = grid(min, max, count)?;
        let mut filter = RadonFilterConfig::for_grid(s.0.ugrid());
        if eta_max > 0.0 {
            filter.eta_max = eta_max;
        }
        filter.apodization = match apodization {
            RtApodization::None => Apodization::None,
            RtApodization::Cosine => Apodization::Cosine,
        };
        filter.angle_count = s.0.angles().len();
        let w = lift(inverse_radon_wigner(&s.0, &g, &g, &filter))?;
        emit(out, RtWigner(w))
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_wigner_dims(w: *const RtWigner, q_count: *mut usize, p_count: *mut usize) -> RtStatus {
    guard(|| {
        let w = deref(w, "wigner")?;
        if q_count.is_null() || p_count.is_null() {
            return Err(null("dimension output"));
        }
        *q_count = w.0.qgrid.count();
        *p_count = w.0.pgrid.count();
        Ok(())
    })
}

/// Copies the `q_count x p_count` values.
#[no_mangle]
pub unsafe extern "C" fn rt_wigner_values(w: *const RtWigner, buf: *mut f64, len: usize) -> RtStatus {
    guard(|| {
        let w = deref(w, "wigner")?;
        copy_out(w.0.values.iter().copied(), buf, len)
    })
}

/// Bilinear value at `(q, p)`, zero outside the grid.
#[no_mangle]
pub unsafe extern "C" fn rt_wigner_value_at(w: *const RtWigner, q: f64, p: f64, value: *mut f64) -> RtStatus {
    guard(|| {
        let w = deref(w, "wigner")?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = w.0.value_at(q, p);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_wigner_free(w: *mut RtWigner) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Density matrix on `[min, max]^2`. The sinogram must contain `theta = 0`.
#[no_mangle]
pub unsafe extern "C" fn rt_reconstruct_density_matrix(
    sino: *const RtSinogram,
    min: f64,
    max: f64,
    count: usize,
    out: *mut *mut RtDensityMatrix,
) -> RtStatus {
    guard(|| {
        let s = deref(sino, "sinogram")?;
        let rho = lift(reconstruct_density_matrix(&s.0, &grid(min, max, count)?))?;
        emit(out, RtDensityMatrix(rho))
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_density_matrix_dim(rho: *const RtDensityMatrix, count: *mut usize) -> RtStatus {
    guard(|| {
        let rho = deref(rho, "density matrix")?;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = rho.0.qgrid.count();
        Ok(())
    })
}

/// Copies real and imaginary parts into two `count x count` buffers.
#[no_mangle]
pub unsafe extern "C" fn rt_density_matrix_values(rho: *const RtDensityMatrix, re: *mut f64, im: *mut f64, len: usize) -> RtStatus {
    guard(|| {
        let rho = deref(rho, "density matrix")?;
        copy_out(rho.0.values.iter().map(|z| z.re), re, len)?;
        copy_out(rho.0.values.iter().map(|z| z.im), im, len)
    })
}

/// `<phi|rho|phi>` against a reference state.
#[no_mangle]
pub unsafe extern "C" fn rt_density_matrix_fidelity(rho: *const RtDensityMatrix, state: *const RtState, value: *mut f64) -> RtStatus {
    guard(|| {
        let rho = deref(rho, "density matrix")?;
        let s = deref(state, "state")?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = rho.0.fidelity(&s.0);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rt_density_matrix_free(rho: *mut RtDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}
