//! C ABI for pcion-core.
//!
//! Every function returns a `PcionStatus`; results go through out-pointers.
//! On failure the message is available from `pcion_last_error` on the same
//! thread until the next call. Handles are created by `*_new`/`pcion_index_*`
//! constructors and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pcion_core::bloch::{solve_bands, KPoint, Polarization, Stack1D};
use pcion_core::ionization::{ionization_shift, OrbitalState};
use pcion_core::materials::{bundled_metamaterial, IndexModel, IndexTable, MetamaterialSpec};
use pcion_core::qed_mass::{compute_ab, estimate_mass_correction, CutoffConfig, MassCoefficients};
use pcion_core::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcionStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    NotConverged = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcionPolarization {
    Te = 0,
    Tm = 1,
}

/// Refractive-index model of the high-index layer.
pub struct PcionIndexModel(IndexModel);

/// Two-layer stack: high-index layer against air.
pub struct PcionStack(Stack1D);

/// A and B in eV with the main convergence diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PcionMassCoefficients {
    pub a_ev: f64,
    pub b_ev: f64,
    pub tail_ev: f64,
    pub lambda_ev: f64,
    pub refinement_delta: f64,
    /// 1 when the refinement delta is within the convergence limit.
    pub converged: u8,
}

impl From<&MassCoefficients> for PcionMassCoefficients {
    fn from(m: &MassCoefficients) -> Self {
        PcionMassCoefficients {
            a_ev: m.a_ev,
            b_ev: m.b_ev,
            tail_ev: m.tail_ev,
            lambda_ev: m.lambda_ev,
            refinement_delta: m.diagnostics.refinement_delta,
            converged: m.diagnostics.converged as u8,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> PcionStatus {
    match err {
        Error::InvalidInput(_) | Error::Config(_) | Error::EmptyTable | Error::Parse { .. } => PcionStatus::InvalidInput,
        Error::NotConverged { .. } => PcionStatus::NotConverged,
        Error::Io { .. } => PcionStatus::Io,
        _ => PcionStatus::Numerical,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> PcionStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcionStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            PcionStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            PcionStatus::Panic
        }
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn new_model(out: *mut *mut PcionIndexModel, build: impl FnOnce() -> pcion_core::Result<IndexModel>) -> PcionStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let m = build()?;
        out.write(Box::into_raw(Box::new(PcionIndexModel(m))));
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn pcion_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn pcion_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frequency-independent index `n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_constant(n: f64, out: *mut *mut PcionIndexModel) -> PcionStatus {
    new_model(out, || IndexModel::constant(n))
}

/// `1 + c1/ω² + c2/ω⁴`, ω in eV.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_sellmeier(c1: f64, c2: f64, out: *mut *mut PcionIndexModel) -> PcionStatus {
    new_model(out, || IndexModel::sellmeier(c1, c2))
}

/// Bundled nanoparticle metamaterial with period `a_nm` and gap `g_nm`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_metamaterial(a_nm: f64, g_nm: f64, out: *mut *mut PcionIndexModel) -> PcionStatus {
    new_model(out, || bundled_metamaterial(&MetamaterialSpec::new(a_nm, g_nm)?))
}

/// Two-column `omega_ev,n` CSV table with a power-law rolloff above `rolloff_ev`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_table_csv(
    path: *const c_char,
    rolloff_ev: f64,
    exponent: f64,
    out: *mut *mut PcionIndexModel,
) -> PcionStatus {
    if path.is_null() {
        set_error("null pointer: path");
        return PcionStatus::NullPointer;
    }
    let path = CStr::from_ptr(path).to_string_lossy().into_owned();
    new_model(out, || {
        IndexModel::tabulated(IndexTable::read_csv(Path::new(&path))?, rolloff_ev, exponent)
    })
}

/// Same model with n → 1 + s·(n − 1); the input handle is untouched.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_scaled(
    model: *const PcionIndexModel,
    s: f64,
    out: *mut *mut PcionIndexModel,
) -> PcionStatus {
    let Some(m) = model.as_ref() else {
        set_error("null pointer: model");
        return PcionStatus::NullPointer;
    };
    new_model(out, || m.0.scaled(s))
}

/// n(ω).
///
/// # Safety
/// `model` must be a live handle; `n` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_eval(model: *const PcionIndexModel, omega_ev: f64, n: *mut f64) -> PcionStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write_out(n, m.0.eval(omega_ev)?, "n")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcion_index_free(model: *mut PcionIndexModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Stack with layer thicknesses in nm; the model is copied.
///
/// # Safety
/// `high` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_stack_new(
    d_h_nm: f64,
    d_l_nm: f64,
    high: *const PcionIndexModel,
    out: *mut *mut PcionStack,
) -> PcionStatus {
    guard(|| {
        let m = deref(high, "high")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let s = Stack1D::new(d_h_nm, d_l_nm, m.0.clone())?;
        out.write(Box::into_raw(Box::new(PcionStack(s))));
        Ok(())
    })
}

/// # Safety
/// `stack` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcion_stack_free(stack: *mut PcionStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

/// Band energies (eV) below `omega_max_ev` at one k-point, ascending.
/// Writes at most `capacity` values and stores the total count in `count`.
///
/// # Safety
/// `stack` must be live; `omegas` must hold `capacity` doubles (may be null
/// when `capacity` is 0); `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_solve_bands(
    stack: *const PcionStack,
    k_rho: f64,
    k_z: f64,
    pol: PcionPolarization,
    omega_max_ev: f64,
    omegas: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> PcionStatus {
    guard(|| {
        let s = deref(stack, "stack")?;
        if count.is_null() {
            return Err(Failure::Null("count"));
        }
        if omegas.is_null() && capacity > 0 {
            return Err(Failure::Null("omegas"));
        }
        let pol = match pol {
            PcionPolarization::Te => Polarization::Te,
            PcionPolarization::Tm => Polarization::Tm,
        };
        let w = solve_bands(KPoint::new(k_rho, k_z, pol), &s.0, omega_max_ev)?;
        for (i, v) in w.iter().take(capacity).enumerate() {
            omegas.add(i).write(*v);
        }
        count.write(w.len());
        Ok(())
    })
}

/// A and B below the cutoff `lambda_ev` with Gauss orders `n_rho`, `n_z` (0 selects the default).
/// Returns `NotConverged` with `out` filled when the refinement check fails.
///
/// # Safety
/// `stack` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_compute_ab(
    stack: *const PcionStack,
    lambda_ev: f64,
    n_rho: usize,
    n_z: usize,
    out: *mut PcionMassCoefficients,
) -> PcionStatus {
    guard(|| {
        let s = deref(stack, "stack")?;
        let mut cfg = CutoffConfig::new(lambda_ev);
        if n_rho > 0 {
            cfg.n_rho = n_rho;
        }
        if n_z > 0 {
            cfg.n_z = n_z;
        }
        let m = compute_ab(&s.0, &cfg)?;
        write_out(out, PcionMassCoefficients::from(&m), "out")?;
        m.check_converged()?;
        Ok(())
    })
}

/// δE_ion of the state (l, m_l) for coefficients A, B (eV).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_ionization_shift(a_ev: f64, b_ev: f64, l: u32, m_l: i32, out: *mut f64) -> PcionStatus {
    guard(|| {
        let state = OrbitalState::new(l, m_l)?;
        write_out(out, ionization_shift(&MassCoefficients::from_ab(a_ev, b_ev), state), "out")
    })
}

/// (α/π)·Λ·⟨n⟩², eV.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcion_estimate_mass_correction(mean_index: f64, lambda_ev: f64, out: *mut f64) -> PcionStatus {
    guard(|| write_out(out, estimate_mass_correction(mean_index, lambda_ev)?, "out"))
}
