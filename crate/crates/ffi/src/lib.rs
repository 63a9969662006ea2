//! C ABI for embedding the solver: an opaque simulator handle built from
//! the same TOML configuration the CLI accepts, plus status codes and a
//! per-thread error message. The matching header `include/fracchs.h` is
//! generated at build time.
//!
//! Ownership rules: `fracchs_sim_new` transfers ownership of the handle to
//! the caller, who must release it with `fracchs_sim_free`. Strings
//! returned by `fracchs_last_error` stay owned by the library and are only
//! valid on the calling thread until its next `fracchs_*` call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fracchs::config::{self, RunConfig};
use fracchs::diagnostics::{self, EnergyReport};
use fracchs::integrator::{self, StepperConfig};
use fracchs::model::{ModelParams, State};
use fracchs::{verify, Error};

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracchsStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer, length, or numeric argument was unusable.
    InvalidArgument = 1,
    /// The configuration failed validation; see `fracchs_last_error`.
    ConfigError = 2,
    /// The simulation or an internal operation failed at runtime.
    RuntimeError = 3,
}

/// One row of the energy/diagnostics trajectory, mirroring the CSV schema.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FracchsReport {
    pub t: f64,
    pub energy: f64,
    pub diss_flux: f64,
    pub diss_nutrient: f64,
    pub diss_artificial: f64,
    pub coupling: f64,
    pub mass_phi: f64,
    pub mass_c: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub c_min: f64,
    pub hs_norm_phi: f64,
    pub mu_w14_norm: f64,
    pub phase_violation: f64,
}

impl From<EnergyReport> for FracchsReport {
    fn from(r: EnergyReport) -> Self {
        FracchsReport {
            t: r.t,
            energy: r.energy,
            diss_flux: r.diss_flux,
            diss_nutrient: r.diss_nutrient,
            diss_artificial: r.diss_artificial,
            coupling: r.coupling,
            mass_phi: r.mass_phi,
            mass_c: r.mass_c,
            phi_min: r.phi_min,
            phi_max: r.phi_max,
            c_min: r.c_min,
            hs_norm_phi: r.hs_norm_phi,
            mu_w14_norm: r.mu_w14_norm,
            phase_violation: r.phase_violation,
        }
    }
}

/// Opaque simulator handle.
pub struct FracchsSim {
    params: ModelParams,
    stepper: StepperConfig,
    eta: f64,
    /// `None` after a failed step: the handle is poisoned and every
    /// state-dependent call reports a runtime error.
    state: Option<State>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let text = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: FracchsStatus, msg: impl Into<Vec<u8>>) -> FracchsStatus {
    set_last_error(msg);
    status
}

fn fail_with(e: &Error) -> FracchsStatus {
    let status = match e {
        Error::InvalidParameter { .. }
        | Error::Config(_)
        | Error::Domain(_)
        | Error::GridMismatch(_) => FracchsStatus::ConfigError,
        _ => FracchsStatus::RuntimeError,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting a panic into a runtime error instead of
/// unwinding across the ABI boundary.
fn guarded(f: impl FnOnce() -> FracchsStatus) -> FracchsStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(FracchsStatus::RuntimeError, "internal panic"))
}

/// Message describing this thread's most recent failure. Never null;
/// empty before the first failure. Owned by the library.
#[no_mangle]
pub extern "C" fn fracchs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a simulator from TOML configuration text (same schema as the
/// CLI). On success writes the new handle to `out`.
///
/// # Safety
/// `config_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_new(
    config_text: *const c_char,
    out: *mut *mut FracchsSim,
) -> FracchsStatus {
    guarded(|| {
        if config_text.is_null() || out.is_null() {
            return fail(FracchsStatus::InvalidArgument, "null pointer argument");
        }
        let text = match unsafe { CStr::from_ptr(config_text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                return fail(
                    FracchsStatus::InvalidArgument,
                    "configuration text is not valid UTF-8",
                )
            }
        };
        let built = (|| -> fracchs::Result<FracchsSim> {
            let cfg: RunConfig = config::parse_config(text)?;
            Ok(FracchsSim {
                params: cfg.model_params()?,
                stepper: cfg.stepper_config(),
                eta: cfg.eta,
                state: Some(config::make_initial_state(&cfg)?),
            })
        })();
        match built {
            Ok(sim) => {
                unsafe { *out = Box::into_raw(Box::new(sim)) };
                FracchsStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Releases a handle obtained from `fracchs_sim_new`. Null is a no-op.
///
/// # Safety
/// `sim` must be null or a pointer returned by `fracchs_sim_new` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_free(sim: *mut FracchsSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Current simulation time, or NaN on a null or poisoned handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_time(sim: *const FracchsSim) -> f64 {
    match unsafe { sim.as_ref() }.and_then(|s| s.state.as_ref()) {
        Some(st) => st.t,
        None => f64::NAN,
    }
}

/// Number of grid axes (1 or 2), or 0 on a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_dims(sim: *const FracchsSim) -> usize {
    unsafe { sim.as_ref() }.map_or(0, |s| s.params.grid.dims())
}

/// Grid points along `axis`, or 0 when the handle or axis is invalid.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_n(sim: *const FracchsSim, axis: usize) -> usize {
    match unsafe { sim.as_ref() } {
        Some(s) if axis < s.params.grid.dims() => s.params.grid.n(axis),
        _ => 0,
    }
}

/// Total sample count of each field (the length `fracchs_sim_copy_phi`
/// and `fracchs_sim_copy_c` expect), or 0 on a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_field_len(sim: *const FracchsSim) -> usize {
    unsafe { sim.as_ref() }.map_or(0, |s| s.params.grid.len())
}

/// Advances the simulation to `t_target` with the configured adaptive
/// stepper. Targets at or before the current time return immediately.
/// After a failure the handle is poisoned and must be freed.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_advance(
    sim: *mut FracchsSim,
    t_target: f64,
) -> FracchsStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            return fail(FracchsStatus::InvalidArgument, "null simulator handle");
        };
        if !t_target.is_finite() {
            return fail(FracchsStatus::InvalidArgument, "t_target must be finite");
        }
        let Some(state) = sim.state.take() else {
            return fail(
                FracchsStatus::RuntimeError,
                "simulator is poisoned by an earlier failure",
            );
        };
        match integrator::advance(state, &sim.params, &sim.stepper, t_target, sim.eta) {
            Ok(result) => {
                sim.state = Some(result.state);
                FracchsStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

fn copy_field(
    sim: *const FracchsSim,
    out: *mut f64,
    len: usize,
    pick: impl Fn(&State) -> &[f64],
) -> FracchsStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return fail(FracchsStatus::InvalidArgument, "null simulator handle");
        };
        if out.is_null() {
            return fail(FracchsStatus::InvalidArgument, "null output buffer");
        }
        let Some(state) = sim.state.as_ref() else {
            return fail(
                FracchsStatus::RuntimeError,
                "simulator is poisoned by an earlier failure",
            );
        };
        let values = pick(state);
        if len != values.len() {
            return fail(
                FracchsStatus::InvalidArgument,
                format!("buffer holds {len} samples, field needs {}", values.len()),
            );
        }
        unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), out, len) };
        FracchsStatus::Ok
    })
}

/// Copies the phase field (row-major) into `out`, which must hold exactly
/// `fracchs_sim_field_len` samples.
///
/// # Safety
/// `sim` must be null or a live handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_copy_phi(
    sim: *const FracchsSim,
    out: *mut f64,
    len: usize,
) -> FracchsStatus {
    copy_field(sim, out, len, |st| st.phi.values())
}

/// Copies the nutrient field (row-major) into `out`, which must hold
/// exactly `fracchs_sim_field_len` samples.
///
/// # Safety
/// `sim` must be null or a live handle; `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_copy_c(
    sim: *const FracchsSim,
    out: *mut f64,
    len: usize,
) -> FracchsStatus {
    copy_field(sim, out, len, |st| st.c.values())
}

/// Evaluates the energy/diagnostics report at the current state.
///
/// # Safety
/// `sim` must be null or a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fracchs_sim_report(
    sim: *const FracchsSim,
    out: *mut FracchsReport,
) -> FracchsStatus {
    guarded(|| {
        let Some(sim) = (unsafe { sim.as_ref() }) else {
            return fail(FracchsStatus::InvalidArgument, "null simulator handle");
        };
        if out.is_null() {
            return fail(FracchsStatus::InvalidArgument, "null output pointer");
        }
        let Some(state) = sim.state.as_ref() else {
            return fail(
                FracchsStatus::RuntimeError,
                "simulator is poisoned by an earlier failure",
            );
        };
        match diagnostics::report(state, &sim.params, sim.eta) {
            Ok(r) => {
                unsafe { *out = r.into() };
                FracchsStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Runs the built-in property checks with the given seed and returns the
/// number of failed checks (0 means everything passed). The failing check
/// names are recorded via `fracchs_last_error`.
#[no_mangle]
pub extern "C" fn fracchs_verify(seed: u64) -> i32 {
    let outcomes = match catch_unwind(|| verify::run_all(seed)) {
        Ok(o) => o,
        Err(_) => {
            set_last_error("internal panic");
            return -1;
        }
    };
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    if !failed.is_empty() {
        set_last_error(format!("failed checks: {}", failed.join(", ")));
    }
    failed.len() as i32
}
