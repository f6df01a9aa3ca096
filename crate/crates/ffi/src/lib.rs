//! C interface to `sphcoh`.
//!
//! Every fallible function returns an [`SphcohStatus`]; on failure the message is kept per
//! thread and can be read with [`sphcoh_last_error_message`]. Objects cross the boundary as
//! opaque handles created by `*_new` functions and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{CStr, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use sphcoh::Error;
use sphcoh::bargmann::{StateSource, husimi_mass, round_trip_error};
use sphcoh::coherent::{CoherentState, position_wavefunction};
use sphcoh::kernels::{nu, rho};
use sphcoh::model::{ComplexSpherePoint, ModelParams, PhasePoint, complexify};
use sphcoh::quadrature::{FiberWeight, QuadratureSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphcohStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    UnsupportedDimension = 3,
    DimensionMismatch = 4,
    ConstraintViolation = 5,
    NonConvergence = 6,
    CutoffInsufficient = 7,
    Overflow = 8,
    Quadrature = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SphcohComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for SphcohComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<SphcohComplex> for Complex64 {
    fn from(z: SphcohComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Physical parameters `(d, r, m, ω, ħ)`.
pub struct SphcohParams(ModelParams);

/// A coherent state with its label on the unit complex sphere.
pub struct SphcohCoherent {
    state: CoherentState,
    radius: f64,
}

/// Phase-space quadrature grid.
pub struct SphcohQuadrature(QuadratureSpec);

/// A position-space state: basis combination, zonal harmonic or point mass.
pub struct SphcohState(StateSource);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SphcohStatus {
    match e {
        Error::InvalidParameter(_) => SphcohStatus::InvalidParameter,
        Error::ConstraintViolation { .. } => SphcohStatus::ConstraintViolation,
        Error::UnsupportedDimension(_) => SphcohStatus::UnsupportedDimension,
        Error::DimensionMismatch { .. } => SphcohStatus::DimensionMismatch,
        Error::NonConvergence { .. } => SphcohStatus::NonConvergence,
        Error::CutoffInsufficient(_) => SphcohStatus::CutoffInsufficient,
        Error::Overflow(_) => SphcohStatus::Overflow,
        Error::Quadrature(_) => SphcohStatus::Quadrature,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Buffer { need: usize, got: usize },
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SphcohStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SphcohStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SphcohStatus::NullPointer
        }
        Ok(Err(Fail::Buffer { need, got })) => {
            set_error(format!("buffer holds {got} elements, {need} needed"));
            SphcohStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("panic inside sphcoh".into());
            SphcohStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: the caller passes a pointer from the matching constructor or null.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and writable per the caller's contract.
    unsafe { p.write(v) };
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    unsafe { write(out, Box::into_raw(Box::new(v)), "out") }
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` came from `Box::into_raw` in a constructor and is freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sphcoh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated
/// to `len − 1` bytes) and returns the full message length in bytes. Pass a null `buf` to
/// query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` has room for `len ≥ n + 1` bytes.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// `ρ_τ(θ)` on `S^dim` at a complex angle.
///
/// # Safety
/// `out` must point to a writable `SphcohComplex`.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_rho(dim: usize, tau: f64, theta: SphcohComplex, out: *mut SphcohComplex) -> SphcohStatus {
    guard(|| unsafe { write(out, rho(dim, tau, theta.into())?.into(), "out") })
}

/// `ν(s, R)` on `H^dim`.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_nu(dim: usize, s: f64, radius: f64, out: *mut f64) -> SphcohStatus {
    guard(|| unsafe { write(out, nu(dim, s, radius)?, "out") })
}

/// # Safety
/// `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_params_new(
    dim: usize,
    radius: f64,
    mass: f64,
    omega: f64,
    hbar: f64,
    out: *mut *mut SphcohParams,
) -> SphcohStatus {
    guard(|| unsafe { boxed(out, SphcohParams(ModelParams::new(dim, radius, mass, omega, hbar)?)) })
}

/// Parameters with `r = m = ω = 1` and `ħ = τ`.
///
/// # Safety
/// `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_params_dimensionless(dim: usize, tau: f64, out: *mut *mut SphcohParams) -> SphcohStatus {
    guard(|| unsafe { boxed(out, SphcohParams(ModelParams::dimensionless(dim, tau)?)) })
}

/// `τ = ħ/(mωr²)`, or NaN for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_params_tau(params: *const SphcohParams) -> f64 {
    unsafe { params.as_ref() }.map_or(f64::NAN, |p| p.0.tau())
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_params_free(params: *mut SphcohParams) {
    unsafe { free(params) }
}

/// Complexifies the phase point `(x, p)` (each of length `dim + 1`) and builds its
/// coherent state.
///
/// # Safety
/// `x` and `p` must hold `len` doubles; `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_coherent_new(
    params: *const SphcohParams,
    x: *const f64,
    p: *const f64,
    len: usize,
    out: *mut *mut SphcohCoherent,
) -> SphcohStatus {
    guard(|| unsafe {
        let params = &as_ref(params, "params")?.0;
        let pt = PhasePoint::new(params, as_slice(x, len, "x")?.to_vec(), as_slice(p, len, "p")?.to_vec())?;
        let label = complexify(params, &pt);
        let state = CoherentState::new(ComplexSpherePoint::new(1.0, label.unit_coords())?, params.tau())?;
        boxed(out, SphcohCoherent { state, radius: params.r })
    })
}

/// Writes the label `a ∈ S^d_C` (physical units) into `out[0..len]`.
///
/// # Safety
/// `out` must hold `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_coherent_label(state: *const SphcohCoherent, out: *mut SphcohComplex, len: usize) -> SphcohStatus {
    guard(|| unsafe {
        let s = as_ref(state, "state")?;
        let coords = s.state.label().coords();
        if len < coords.len() {
            return Err(Fail::Buffer { need: coords.len(), got: len });
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        for (k, z) in coords.iter().enumerate() {
            out.add(k).write((z * s.radius).into());
        }
        Ok(())
    })
}

/// `ψ_a(x)` at a point `x` on the sphere of radius `r`.
///
/// # Safety
/// `x` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_coherent_wavefunction(
    state: *const SphcohCoherent,
    x: *const f64,
    len: usize,
    out: *mut SphcohComplex,
) -> SphcohStatus {
    guard(|| unsafe {
        let s = as_ref(state, "state")?;
        let unit: Vec<f64> = as_slice(x, len, "x")?.iter().map(|v| v / s.radius).collect();
        let off = (unit.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs();
        if off > 1e-12 {
            return Err(Error::ConstraintViolation { what: "|x| = r", residual: off, tolerance: 1e-12 }.into());
        }
        let v = position_wavefunction(&s.state, &ComplexSpherePoint::from_real(1.0, &unit)?)?;
        write(out, v.into(), "out")
    })
}

/// `‖ψ_a‖²`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_coherent_norm_squared(state: *const SphcohCoherent, out: *mut f64) -> SphcohStatus {
    guard(|| unsafe { write(out, as_ref(state, "state")?.state.norm_squared()?, "out") })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_coherent_free(state: *mut SphcohCoherent) {
    unsafe { free(state) }
}

/// Phase-space grid on `S^dim` at time `tau`, exact for states of degree `≤ max_degree`.
///
/// # Safety
/// `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_quadrature_new(
    dim: usize,
    tau: f64,
    max_degree: usize,
    out: *mut *mut SphcohQuadrature,
) -> SphcohStatus {
    guard(|| unsafe { boxed(out, SphcohQuadrature(QuadratureSpec::for_degree(dim, tau, max_degree)?)) })
}

/// Number of phase-space nodes, or 0 for a null handle.
///
/// # Safety
/// `quad` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_quadrature_node_count(quad: *const SphcohQuadrature) -> usize {
    unsafe { quad.as_ref() }.map_or(0, |q| q.0.node_count())
}

/// # Safety
/// `quad` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_quadrature_free(quad: *mut SphcohQuadrature) {
    unsafe { free(quad) }
}

/// Parses a state from its JSON serialization.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_state_from_json(json: *const c_char, out: *mut *mut SphcohState) -> SphcohStatus {
    guard(|| unsafe {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Error::InvalidParameter(format!("state JSON is not UTF-8: {e}")))?;
        let src: StateSource =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("state JSON: {e}")))?;
        boxed(out, SphcohState(src))
    })
}

/// Unit-norm random state of degree `≤ max_degree`, reproducible from `seed`.
///
/// # Safety
/// `out` must point to a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_state_random(dim: usize, max_degree: usize, seed: u64, out: *mut *mut SphcohState) -> SphcohStatus {
    guard(|| unsafe { boxed(out, SphcohState(StateSource::random(dim, max_degree, seed)?)) })
}

/// `f(x)` at a unit vector `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_state_eval(state: *const SphcohState, x: *const f64, len: usize, out: *mut SphcohComplex) -> SphcohStatus {
    guard(|| unsafe {
        let s = as_ref(state, "state")?;
        write(out, s.0.eval(as_slice(x, len, "x")?)?.into(), "out")
    })
}

/// Segal–Bargmann transform `(C f)(a)` at `a` on the unit complex sphere.
///
/// # Safety
/// `a` must hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_state_transform(
    state: *const SphcohState,
    tau: f64,
    a: *const SphcohComplex,
    len: usize,
    out: *mut SphcohComplex,
) -> SphcohStatus {
    guard(|| unsafe {
        let s = as_ref(state, "state")?;
        let a: Vec<Complex64> = as_slice(a, len, "a")?.iter().map(|z| (*z).into()).collect();
        write(out, s.0.transform_at(tau, &a)?.into(), "out")
    })
}

/// Relative L² error of inverse(transform(f)) against `f`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_round_trip_error(state: *const SphcohState, quad: *const SphcohQuadrature, out: *mut f64) -> SphcohStatus {
    guard(|| unsafe {
        let (s, q) = (as_ref(state, "state")?, as_ref(quad, "quad")?);
        write(out, round_trip_error(&s.0, &q.0, FiberWeight::Inversion)?, "out")
    })
}

/// Total Husimi mass of `f` over the grid (1 for a unit state).
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_husimi_mass(state: *const SphcohState, quad: *const SphcohQuadrature, out: *mut f64) -> SphcohStatus {
    guard(|| unsafe {
        let (s, q) = (as_ref(state, "state")?, as_ref(quad, "quad")?);
        write(out, husimi_mass(&s.0, &q.0)?, "out")
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sphcoh_state_free(state: *mut SphcohState) {
    unsafe { free(state) }
}
