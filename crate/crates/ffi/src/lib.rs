//! C interface to the magflow library.
//!
//! Every function returns a [`MagflowStatus`]; on failure the message is available
//! from [`magflow_last_error`] on the same thread. Results are written through out
//! pointers, which are left untouched on failure. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use magflow::config::{Config, ConfigError, Model};
use magflow::crit::{estimate_critical_value, s_c_value};
use magflow::field::{helicity_formula, helicity_integral, metric_area, s_h_value, total_flux};
use magflow::flow::{detect_period, integrate_with, PhaseState};
use magflow::hyp::{hyp_distance, HalfPlanePoint};
use magflow::radon::{q_kernel_imag, q_kernel_real};
use magflow::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    CheckFailed = 4,
    NumericalError = 5,
    Undefined = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A surface with its conformal metric, magnetic field and run parameters.
pub struct MagflowModel {
    config: Config,
    model: Model,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MagflowState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MagflowHelicity {
    pub area: f64,
    pub flux: f64,
    pub formula: f64,
    pub integral: f64,
    /// Infinite when the total flux vanishes.
    pub s_h: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MagflowCriticalEstimate {
    /// Bounds on the critical value `c`.
    pub lower: f64,
    pub upper: f64,
    /// Bounds on `s_c = 1/√(2c)`; infinite when the matching end of `c` is zero.
    pub s_c_lower: f64,
    pub s_c_upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: MagflowStatus,
    message: String,
}

impl Failure {
    fn new(status: MagflowStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(MagflowStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_)
            | Error::DegenerateIsometry { .. }
            | Error::SupportTooLarge { .. }
            | Error::CenterOutsideDomain(_)
            | Error::StateOutOfRange(_)
            | Error::DegenerateCurve { .. } => MagflowStatus::InvalidArgument,
            Error::CheckFailed { .. } | Error::BoundInversion { .. } | Error::NonZeroMean { .. } => {
                MagflowStatus::CheckFailed
            }
            _ => MagflowStatus::NumericalError,
        };
        Self::new(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::new(MagflowStatus::ConfigError, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

/// Runs `f`, turning errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MagflowStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MagflowStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            MagflowStatus::Panic
        }
    }
}

fn model_ref<'a>(model: *const MagflowModel) -> Result<&'a MagflowModel, Failure> {
    // SAFETY: callers pass either null or a pointer from `magflow_model_*`.
    unsafe { model.as_ref() }.ok_or_else(|| Failure::null("model"))
}

fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    // SAFETY: non-null and, by contract, valid for a write of `T`.
    unsafe { out.write(value) };
    Ok(())
}

fn build(config: Config) -> Result<*mut MagflowModel, Failure> {
    let model = config.model()?;
    Ok(Box::into_raw(Box::new(MagflowModel { config, model })))
}

/// Message of the last failed call on this thread, or an empty string. The pointer
/// stays valid until the next magflow call on the same thread.
#[no_mangle]
pub extern "C" fn magflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn magflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Curvature −1 metric with the uniform field `a` and default run parameters.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn magflow_model_new(a: f64, out: *mut *mut MagflowModel) -> MagflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        if !a.is_finite() {
            return Err(Failure::new(MagflowStatus::InvalidArgument, format!("a must be finite, got {a}")));
        }
        let mut config = Config::default();
        config.magnetic.a = a;
        write(out, build(config)?, "out")
    })
}

/// Model from a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn magflow_model_from_json(json: *const c_char, out: *mut *mut MagflowModel) -> MagflowStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::null("json"));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::new(MagflowStatus::ConfigError, format!("config is not UTF-8: {e}")))?;
        let config = Config::from_json(text)?;
        write(out, build(config)?, "out")
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or come from `magflow_model_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn magflow_model_free(model: *mut MagflowModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Helicity by closed form and by phase-space integral.
///
/// # Safety
/// `model` must be a live model and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_helicity(model: *const MagflowModel, out: *mut MagflowHelicity) -> MagflowStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        let (g, sigma) = (&m.metric, &m.field);
        let value = MagflowHelicity {
            area: metric_area(g),
            flux: total_flux(sigma),
            formula: helicity_formula(g, sigma),
            integral: helicity_integral(g, sigma)?,
            s_h: s_h_value(g, sigma).unwrap_or(f64::INFINITY),
        };
        write(out, value, "out")
    })
}

/// `s_h`; fails with `Undefined` when the total flux vanishes.
///
/// # Safety
/// `model` must be a live model and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_s_h(model: *const MagflowModel, out: *mut f64) -> MagflowStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        let s_h = s_h_value(&m.metric, &m.field)
            .ok_or_else(|| Failure::new(MagflowStatus::Undefined, "s_h is undefined for zero total flux"))?;
        write(out, s_h, "out")
    })
}

/// Two-sided estimate of the critical value with the model's budget.
///
/// # Safety
/// `model` must be a live model and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_critical_estimate(
    model: *const MagflowModel,
    out: *mut MagflowCriticalEstimate,
) -> MagflowStatus {
    guard(|| {
        let handle = model_ref(model)?;
        let m = &handle.model;
        let est = estimate_critical_value(&m.metric, &m.field, &handle.config.critical_budget())?;
        let s_c = s_c_value(&est);
        let value = MagflowCriticalEstimate {
            lower: est.lower,
            upper: est.upper,
            s_c_lower: s_c.lower.unwrap_or(f64::INFINITY),
            s_c_upper: s_c.upper.unwrap_or(f64::INFINITY),
        };
        write(out, value, "out")
    })
}

/// `q_r(s)` for real `s`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_q_kernel_real(r: f64, s: f64, out: *mut f64) -> MagflowStatus {
    guard(|| write(out, q_kernel_real(r, s)?, "out"))
}

/// `q_r(iα)` for `α ∈ [0, ½]`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_q_kernel_imag(r: f64, alpha: f64, out: *mut f64) -> MagflowStatus {
    guard(|| write(out, q_kernel_imag(r, alpha)?, "out"))
}

/// Hyperbolic distance between two upper half-plane points.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_hyp_distance(x1: f64, y1: f64, x2: f64, y2: f64, out: *mut f64) -> MagflowStatus {
    guard(|| {
        let p = HalfPlanePoint::new(x1, y1)?;
        let q = HalfPlanePoint::new(x2, y2)?;
        write(out, hyp_distance(p, q), "out")
    })
}

/// Integrates the flow at intensity `s` from `start` for `duration` with step about
/// `dt`, using the model's integrator tolerance.
///
/// The states at the uniform step times, starting with `start`, go to `states`. When
/// `capacity` is too small nothing is written there, `*written` receives the count
/// needed and the status is `BufferTooSmall`. `period` may be null; otherwise it
/// receives the detected return time, or NaN when none is found.
///
/// # Safety
/// `states` must be valid for `capacity` elements (or null with capacity 0),
/// `written` valid for writing, and `period` null or valid for writing.
#[no_mangle]
pub unsafe extern "C" fn magflow_trajectory(
    model: *const MagflowModel,
    s: f64,
    start: MagflowState,
    duration: f64,
    dt: f64,
    states: *mut MagflowState,
    capacity: usize,
    written: *mut usize,
    period: *mut f64,
) -> MagflowStatus {
    guard(|| {
        let handle = model_ref(model)?;
        if written.is_null() {
            return Err(Failure::null("written"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Failure::new(MagflowStatus::InvalidArgument, format!("s must be positive, got {s}")));
        }
        let m = &handle.model;
        let start = PhaseState::new(start.x, start.y, start.theta)?;
        let options = handle.config.integrator_options();
        let traj = integrate_with(&m.metric, &m.field, s, start, duration, dt, options)?;
        written.write(traj.len());
        if traj.len() > capacity {
            return Err(Failure::new(
                MagflowStatus::BufferTooSmall,
                format!("trajectory has {} states, buffer holds {capacity}", traj.len()),
            ));
        }
        if states.is_null() {
            return Err(Failure::null("states"));
        }
        for (i, p) in traj.states.iter().enumerate() {
            states.add(i).write(MagflowState {
                x: p.x,
                y: p.y,
                theta: p.theta,
            });
        }
        if !period.is_null() {
            period.write(detect_period(&traj, handle.config.tolerances.period).unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// Serialized configuration of a model as JSON, allocated by the library.
/// Release it with [`magflow_string_free`].
///
/// # Safety
/// `model` must be a live model and `out` valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn magflow_model_config_json(model: *const MagflowModel, out: *mut *mut c_char) -> MagflowStatus {
    guard(|| {
        let handle = model_ref(model)?;
        let text = serde_json::to_string(&handle.config)
            .map_err(|e| Failure::new(MagflowStatus::NumericalError, e.to_string()))?;
        let c = CString::new(text).map_err(|e| Failure::new(MagflowStatus::NumericalError, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// Frees a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or come from a magflow function documented to allocate it.
#[no_mangle]
pub unsafe extern "C" fn magflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
