//! C ABI over `reservoir_dfs`.
//!
//! Every function returns an [`RdStatus`]. On failure a message is kept per
//! thread and can be copied out with [`rd_last_error_message`]. Parameters live
//! behind an opaque [`RdParams`] handle created by [`rd_params_new_default`]
//! and released by [`rd_params_free`].
//!
//! Complex arrays are interleaved `re, im` doubles. Two-ion amplitudes are in
//! the order `ee, eg, ge, gg`; density matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64 as C64;
use reservoir_dfs::dfs::{coefficients_at, invert_parameters, DfsCoordinates, InversionBranch};
use reservoir_dfs::hilbert::{CMatrix, DensityOperator, HilbertSpace, StateVector};
use reservoir_dfs::lindblad::IntegrateOptions;
use reservoir_dfs::model::{Ion, SystemParams};
use reservoir_dfs::observables::{
    concurrence, fidelity_curve, global_geometric_phase, subsystem_geometric_phase, PhaseMethod,
};
use reservoir_dfs::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownKey = 3,
    NumericFailure = 4,
    NoSolution = 5,
    NotCyclic = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdIon {
    A = 0,
    B = 1,
}

/// Inversion output. `branch`: 0 Bell table, 1 superposition closed form, 2 numeric.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RdInversion {
    pub phi_a1: f64,
    pub phi_b1: f64,
    pub varphi_a: f64,
    pub varphi_b: f64,
    pub r: f64,
    pub mu: f64,
    pub residual: f64,
    pub branch: c_int,
}

/// Opaque parameter set.
pub struct RdParams(SystemParams);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> RdStatus {
    match err {
        Error::IntegrationFailure { .. } | Error::EigenConvergence => RdStatus::NumericFailure,
        Error::NoSolution(_) => RdStatus::NoSolution,
        Error::NotCyclic(_) => RdStatus::NotCyclic,
        _ => RdStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RdStatus, String)>) -> RdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RdStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (RdStatus, String) {
    (RdStatus::NullPointer, format!("{name} is null"))
}

unsafe fn params_ref<'a>(p: *const RdParams) -> Result<&'a SystemParams, (RdStatus, String)> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("params"))
}

fn coords(r: f64, mu: f64) -> Result<DfsCoordinates, (RdStatus, String)> {
    DfsCoordinates::new(r, mu).map_err(lib_err)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// New handle with the default parameters (`Ω1 = 10Ω2 = 100g`, `κ = 3g`,
/// `γ = g/500`). Never null.
#[no_mangle]
pub extern "C" fn rd_params_new_default() -> *mut RdParams {
    Box::into_raw(Box::new(RdParams(SystemParams::default())))
}

/// # Safety
/// `params` must be null or a handle from [`rd_params_new_default`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_params_free(params: *mut RdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

fn field<'a>(p: &'a mut SystemParams, key: &str) -> Option<&'a mut f64> {
    Some(match key {
        "g" => &mut p.g,
        "kappa" => &mut p.kappa,
        "gamma_a" => &mut p.gamma_a,
        "gamma_b" => &mut p.gamma_b,
        "omega1" => &mut p.omega1,
        "omega2" => &mut p.omega2,
        "phi_a1" => &mut p.phi_a1,
        "phi_b1" => &mut p.phi_b1,
        "varphi_a" => &mut p.varphi_a,
        "varphi_b" => &mut p.varphi_b,
        _ => return None,
    })
}

unsafe fn key_str<'a>(key: *const c_char) -> Result<&'a str, (RdStatus, String)> {
    if key.is_null() {
        return Err(null("key"));
    }
    CStr::from_ptr(key)
        .to_str()
        .map_err(|_| (RdStatus::InvalidArgument, "key is not UTF-8".into()))
}

/// Sets one parameter by name (`g`, `kappa`, `gamma_a`, `gamma_b`, `omega1`,
/// `omega2`, `phi_a1`, `phi_b1`, `varphi_a`, `varphi_b`, `n_max`). The handle
/// is left unchanged if the result fails validation.
///
/// # Safety
/// `params` must be a live handle; `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rd_params_set(params: *mut RdParams, key: *const c_char, value: f64) -> RdStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let key = key_str(key)?;
        let mut next = p.0.clone();
        if key == "n_max" {
            if !(value >= 1.0 && value.fract() == 0.0 && value <= 64.0) {
                return Err((RdStatus::InvalidArgument, format!("n_max = {value}")));
            }
            next.n_max = value as usize;
        } else {
            *field(&mut next, key).ok_or_else(|| (RdStatus::UnknownKey, format!("unknown key `{key}`")))? = value;
        }
        next.validate().map_err(lib_err)?;
        p.0 = next;
        Ok(())
    })
}

/// Reads one parameter by name into `out`.
///
/// # Safety
/// `params` must be a live handle; `key` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_params_get(params: *const RdParams, key: *const c_char, out: *mut f64) -> RdStatus {
    guard(|| {
        let mut p = params_ref(params)?.clone();
        let key = key_str(key)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = if key == "n_max" {
            p.n_max as f64
        } else {
            *field(&mut p, key).ok_or_else(|| (RdStatus::UnknownKey, format!("unknown key `{key}`")))?
        };
        Ok(())
    })
}

/// Amplitudes of `R(t)|Ψ_r⟩` into `out` (8 doubles).
///
/// # Safety
/// `params` must be a live handle; `out` valid for 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn rd_coefficients_at(
    params: *const RdParams,
    r: f64,
    mu: f64,
    t: f64,
    out: *mut f64,
) -> RdStatus {
    guard(|| {
        let p = params_ref(params)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = coefficients_at(&coords(r, mu)?, p, t);
        let out = std::slice::from_raw_parts_mut(out, 8);
        for (k, z) in c.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Concurrence of a two-qubit density matrix (32 doubles, row-major).
///
/// # Safety
/// `rho` valid for 32 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_concurrence(rho: *const f64, out: *mut f64) -> RdStatus {
    guard(|| {
        if rho.is_null() {
            return Err(null("rho"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let v = std::slice::from_raw_parts(rho, 32);
        let m = CMatrix::from_fn(4, 4, |i, j| C64::new(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]));
        let d = DensityOperator::new(HilbertSpace::two_ions(), m).map_err(lib_err)?;
        *out = concurrence(&d).map_err(lib_err)?;
        Ok(())
    })
}

/// Drive phases and `(r, μ)` reproducing a normalized two-ion state (8 doubles).
///
/// # Safety
/// `amplitudes` valid for 8 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_invert(amplitudes: *const f64, out: *mut RdInversion) -> RdStatus {
    guard(|| {
        if amplitudes.is_null() {
            return Err(null("amplitudes"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let v = std::slice::from_raw_parts(amplitudes, 8);
        let c: Vec<C64> = (0..4).map(|k| C64::new(v[2 * k], v[2 * k + 1])).collect();
        let psi = StateVector::from_slice(HilbertSpace::two_ions(), &c).map_err(lib_err)?;
        let inv = invert_parameters(&psi).map_err(lib_err)?;
        *out = RdInversion {
            phi_a1: inv.params.phi_a1,
            phi_b1: inv.params.phi_b1,
            varphi_a: inv.params.varphi_a,
            varphi_b: inv.params.varphi_b,
            r: inv.coords.r,
            mu: inv.coords.mu,
            residual: inv.residual,
            branch: match inv.branch {
                InversionBranch::BellTable => 0,
                InversionBranch::SuperpositionClosedForm => 1,
                InversionBranch::Numeric => 2,
            },
        };
        Ok(())
    })
}

/// Global geometric phase over one period: the raw quadrature value and the
/// value folded into `(−π, π]`.
///
/// # Safety
/// `params` must be a live handle; `raw` and `wrapped` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_global_phase(
    params: *const RdParams,
    r: f64,
    mu: f64,
    panels: usize,
    raw: *mut f64,
    wrapped: *mut f64,
) -> RdStatus {
    guard(|| {
        let p = params_ref(params)?;
        let raw = raw.as_mut().ok_or_else(|| null("raw"))?;
        let wrapped = wrapped.as_mut().ok_or_else(|| null("wrapped"))?;
        let res = global_geometric_phase(&coords(r, mu)?, p, panels).map_err(lib_err)?;
        *raw = res.raw;
        *wrapped = res.value;
        Ok(())
    })
}

/// Subsystem geometric phase of one ion; `closed_form != 0` selects the
/// closed form, otherwise quadrature with `panels` panels.
///
/// # Safety
/// `params` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rd_subsystem_phase(
    params: *const RdParams,
    r: f64,
    mu: f64,
    ion: RdIon,
    closed_form: c_int,
    panels: usize,
    out: *mut f64,
) -> RdStatus {
    guard(|| {
        let p = params_ref(params)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let which = match ion {
            RdIon::A => Ion::A,
            RdIon::B => Ion::B,
        };
        let method = if closed_form != 0 { PhaseMethod::ClosedForm } else { PhaseMethod::Quadrature };
        *out = subsystem_geometric_phase(&coords(r, mu)?, p, which, method, panels)
            .map_err(lib_err)?
            .value;
        Ok(())
    })
}

/// Fidelity curve from `|Ψ_E⟩` under ionic decay over `periods` periods,
/// sampled at `len` equally spaced points (`len ≥ 2`, including `t = 0`).
///
/// # Safety
/// `params` must be a live handle; both outputs valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rd_fidelity_curve(
    params: *const RdParams,
    periods: f64,
    safety: f64,
    len: usize,
    t_over_period: *mut f64,
    fidelity: *mut f64,
) -> RdStatus {
    guard(|| {
        let p = params_ref(params)?;
        if t_over_period.is_null() || fidelity.is_null() {
            return Err(null("output buffer"));
        }
        if len < 2 || !(safety > 0.0) {
            return Err((RdStatus::InvalidArgument, format!("len = {len}, safety = {safety}")));
        }
        let opts = IntegrateOptions {
            safety,
            samples: len - 1,
            check_positivity: true,
        };
        let curve = fidelity_curve(p, &reservoir_dfs::dfs::psi_e_initial(), periods, &opts).map_err(lib_err)?;
        let ts = std::slice::from_raw_parts_mut(t_over_period, len);
        let fs = std::slice::from_raw_parts_mut(fidelity, len);
        ts.copy_from_slice(&curve.t_over_period);
        fs.copy_from_slice(&curve.fidelity);
        Ok(())
    })
}
