//! C interface to the decoherence engine.
//!
//! Every entry point returns a [`DdStatus`] and writes results through out
//! pointers. Handles are opaque and owned by the caller, who releases them
//! with the matching `*_free` function. On failure the message for the
//! calling thread is available from [`dd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use darkdeco::decoherence::{decoherence_rate, TargetModel};
use darkdeco::flux::{FluxMode, FluxModel};
use darkdeco::model::{DmScenario, Experiment, Shielding, Site};
use darkdeco::sensitivity::{critical_coupling, SweepOptions};
use darkdeco::statistics::{detection_threshold, RunPlan};
use darkdeco::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
    Internal = 5,
}

/// Velocity distribution of the incident flux.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DdFluxMode {
    Anisotropic = 0,
    Isotropized = 1,
    Thermalized = 2,
}

/// Overburden between the halo and the experiment.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DdShielding {
    Space = 0,
    AbsorbingEarth = 1,
    ReflectingEarth = 2,
}

/// Dark-sector parameters (opaque).
pub struct DdScenario(DmScenario);

/// Interferometer parameters (opaque).
pub struct DdExperiment(Experiment);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> DdStatus {
    match e.exit_code() {
        2 => DdStatus::InvalidArgument,
        3 => DdStatus::Numerical,
        _ => DdStatus::Internal,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DdStatusError>) -> DdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdStatus::Ok,
        Ok(Err(DdStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DdStatus::Panic
        }
    }
}

struct DdStatusError(DdStatus, String);

impl From<Error> for DdStatusError {
    fn from(e: Error) -> Self {
        DdStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> DdStatusError {
    DdStatusError(DdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, DdStatusError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, DdStatusError> {
    p.as_mut().ok_or_else(|| null(what))
}

fn flux_mode(mode: DdFluxMode, temperature_k: f64) -> Result<FluxMode, DdStatusError> {
    Ok(match mode {
        DdFluxMode::Anisotropic => FluxMode::Anisotropic,
        DdFluxMode::Isotropized => FluxMode::Isotropized,
        DdFluxMode::Thermalized => FluxMode::parse("thermalized", temperature_k)?,
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the calling thread's last error message, excluding
/// the terminating nul; 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn dd_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copy the last error message into `buf` with a terminating nul.
///
/// Returns the number of bytes written excluding the nul, or -1 when `buf`
/// is null or `len` is too small.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dd_last_error_message(buf: *mut c_char, len: usize) -> isize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if buf.is_null() || len < bytes.len() + 1 {
            return -1;
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        *buf.add(bytes.len()) = 0;
        bytes.len() as isize
    })
}

/// New scenario with the common halo defaults and α_M = 1.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dd_scenario_new(
    mass_ev: f64,
    mediator_mass_ev: f64,
    out: *mut *mut DdScenario,
) -> DdStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let s = DmScenario::new(mass_ev, mediator_mass_ev)?;
        *out = Box::into_raw(Box::new(DdScenario(s)));
        Ok(())
    })
}

/// Set the matter coupling α_M.
///
/// # Safety
/// `scenario` must be a live handle from [`dd_scenario_new`].
#[no_mangle]
pub unsafe extern "C" fn dd_scenario_set_alpha_m(
    scenario: *mut DdScenario,
    alpha_m: f64,
) -> DdStatus {
    guard(|| {
        let s = deref_mut(scenario, "scenario")?;
        s.0 = s.0.with_alpha_m(alpha_m)?;
        Ok(())
    })
}

/// Release a scenario; null is ignored.
///
/// # Safety
/// `scenario` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dd_scenario_free(scenario: *mut DdScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Look up a registry experiment by name, ignoring case and punctuation.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_experiment_lookup(
    name: *const c_char,
    out: *mut *mut DdExperiment,
) -> DdStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| DdStatusError(DdStatus::InvalidArgument, "name is not UTF-8".into()))?;
        *out = Box::into_raw(Box::new(DdExperiment(Experiment::lookup(name)?)));
        Ok(())
    })
}

/// Change the superposition separation (nm).
///
/// # Safety
/// `experiment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_experiment_set_separation_nm(
    experiment: *mut DdExperiment,
    separation_nm: f64,
) -> DdStatus {
    guard(|| {
        let e = deref_mut(experiment, "experiment")?;
        let mut next = e.0.clone();
        next.separation_nm = separation_nm;
        next.validate()?;
        e.0 = next;
        Ok(())
    })
}

/// Release an experiment; null is ignored.
///
/// # Safety
/// `experiment` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dd_experiment_free(experiment: *mut DdExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Complex decoherence rate (Hz) in free space with the wind at
/// `wind_angle_rad` from the separation. `temperature_k` is read only for
/// the thermalized mode.
///
/// # Safety
/// Handles must be live; `re_hz` and `im_hz` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dd_decoherence_rate(
    scenario: *const DdScenario,
    experiment: *const DdExperiment,
    mode: DdFluxMode,
    temperature_k: f64,
    wind_angle_rad: f64,
    re_hz: *mut f64,
    im_hz: *mut f64,
) -> DdStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?.0;
        let e = &deref(experiment, "experiment")?.0;
        let re = deref_mut(re_hz, "re_hz")?;
        let im = deref_mut(im_hz, "im_hz")?;
        let target = TargetModel::new(e.clone())?;
        let flux = FluxModel::space(s, flux_mode(mode, temperature_k)?)?;
        let r = decoherence_rate(&s, &target, &flux, wind_angle_rad)?;
        *re = r.rate.re;
        *im = r.rate.im;
        Ok(())
    })
}

/// Detection threshold on the daily decoherence signal for a one-month run.
///
/// # Safety
/// `experiment` must be a live handle and `threshold` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_detection_threshold(
    experiment: *const DdExperiment,
    threshold: *mut f64,
) -> DdStatus {
    guard(|| {
        let e = &deref(experiment, "experiment")?.0;
        let out = deref_mut(threshold, "threshold")?;
        *out = detection_threshold(&RunPlan::new(e.clone())?)?.threshold;
        Ok(())
    })
}

/// Smallest detectable α_M for a one-month run at the default site.
///
/// # Safety
/// Handles must be live and `alpha_hat` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_critical_coupling(
    scenario: *const DdScenario,
    experiment: *const DdExperiment,
    shielding: DdShielding,
    alpha_hat: *mut f64,
) -> DdStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?.0;
        let e = &deref(experiment, "experiment")?.0;
        let out = deref_mut(alpha_hat, "alpha_hat")?;
        let mut opts = SweepOptions::for_experiment(e);
        opts.site = Site {
            shielding: match shielding {
                DdShielding::Space => Shielding::Space,
                DdShielding::AbsorbingEarth => Shielding::AbsorbingEarth,
                DdShielding::ReflectingEarth => Shielding::ReflectingEarth,
            },
            ..Site::default()
        };
        *out = critical_coupling(&s, e, &RunPlan::new(e.clone())?, &opts)?.alpha_hat;
        Ok(())
    })
}
