use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use magflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(magflow_last_error()) }.to_string_lossy().into_owned()
}

struct Handle(*mut MagflowModel);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { magflow_model_free(self.0) };
    }
}

fn uniform(a: f64) -> Handle {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { magflow_model_new(a, &mut model) }, MagflowStatus::Ok);
    assert!(!model.is_null());
    Handle(model)
}

fn from_json(text: &str) -> Result<Handle, (MagflowStatus, String)> {
    let c = CString::new(text).unwrap();
    let mut model = ptr::null_mut();
    match unsafe { magflow_model_from_json(c.as_ptr(), &mut model) } {
        MagflowStatus::Ok => Ok(Handle(model)),
        status => {
            assert!(model.is_null());
            Err((status, last_error()))
        }
    }
}

#[test]
fn helicity_and_s_h() {
    let model = uniform(0.5);
    let mut h = MagflowHelicity::default();
    assert_eq!(unsafe { magflow_helicity(model.0, &mut h) }, MagflowStatus::Ok);
    assert!((h.formula - 6.0 * PI * PI).abs() < 1e-9);
    assert!((h.integral - h.formula).abs() < 1e-5 * h.formula);
    assert!((h.area - 4.0 * PI).abs() < 1e-12);
    assert!((h.s_h - 2.0).abs() < 1e-12);
    let mut s_h = 0.0;
    assert_eq!(unsafe { magflow_s_h(model.0, &mut s_h) }, MagflowStatus::Ok);
    assert_eq!(s_h, h.s_h);

    let zero = uniform(0.0);
    assert_eq!(unsafe { magflow_s_h(zero.0, &mut s_h) }, MagflowStatus::Undefined);
    assert!(last_error().contains("undefined"));
    assert_eq!(s_h, h.s_h, "out pointer untouched on failure");
    assert_eq!(unsafe { magflow_helicity(zero.0, &mut h) }, MagflowStatus::Ok);
    assert!((h.formula - 8.0 * PI * PI).abs() < 1e-9);
    assert!(h.s_h.is_infinite());
}

#[test]
fn critical_estimate_from_json_budget() {
    let model = from_json(r#"{"magnetic": {"a": 1}, "crit": {"samples": 100}}"#).unwrap();
    let mut est = MagflowCriticalEstimate::default();
    assert_eq!(unsafe { magflow_critical_estimate(model.0, &mut est) }, MagflowStatus::Ok);
    assert!(est.lower >= 0.495 && (est.upper - 0.5).abs() < 1e-10);
    assert!(est.s_c_lower <= 1.0 + 1e-12 && est.s_c_upper <= 1.006);

    let zero = from_json(r#"{"magnetic": {"a": 0}, "crit": {"samples": 50}}"#).unwrap();
    assert_eq!(unsafe { magflow_critical_estimate(zero.0, &mut est) }, MagflowStatus::Ok);
    assert_eq!((est.lower, est.upper), (0.0, 0.0));
    assert!(est.s_c_lower.is_infinite() && est.s_c_upper.is_infinite());
}

#[test]
fn kernels_and_distance() {
    let mut v = 0.0;
    for r in [0.5f64, 2.0] {
        assert_eq!(unsafe { magflow_q_kernel_imag(r, 0.5, &mut v) }, MagflowStatus::Ok);
        assert!((v - 2.0 * PI * (r.cosh() - 1.0)).abs() < 1e-9 * v);
    }
    assert_eq!(unsafe { magflow_q_kernel_real(0.0, 3.0, &mut v) }, MagflowStatus::Ok);
    assert_eq!(v, 0.0);
    assert_eq!(unsafe { magflow_q_kernel_imag(1.0, 0.7, &mut v) }, MagflowStatus::InvalidArgument);
    assert!(last_error().contains("[0, 1/2]"), "{}", last_error());
    assert_eq!(unsafe { magflow_q_kernel_real(1.0, 1.0, ptr::null_mut()) }, MagflowStatus::NullPointer);

    assert_eq!(unsafe { magflow_hyp_distance(0.0, 1.0, 0.0, 2f64.exp(), &mut v) }, MagflowStatus::Ok);
    assert!((v - 2.0).abs() < 1e-14);
    assert_eq!(unsafe { magflow_hyp_distance(0.0, -1.0, 0.0, 1.0, &mut v) }, MagflowStatus::InvalidArgument);
}

#[test]
fn trajectory_buffer_protocol() {
    let model = uniform(2.0);
    let start = MagflowState { x: 0.2, y: 1.3, theta: 0.7 };
    let mut written = 0usize;
    let mut period = 0.0;
    let status = unsafe {
        magflow_trajectory(model.0, 1.0, start, 5.5, 0.01, ptr::null_mut(), 0, &mut written, &mut period)
    };
    assert_eq!(status, MagflowStatus::BufferTooSmall);
    assert_eq!(written, 551);
    let mut states = vec![MagflowState::default(); written];
    let status = unsafe {
        magflow_trajectory(model.0, 1.0, start, 5.5, 0.01, states.as_mut_ptr(), states.len(), &mut written, &mut period)
    };
    assert_eq!(status, MagflowStatus::Ok);
    assert_eq!(states[0], start);
    assert!((period - 2.0 * PI / 3f64.sqrt()).abs() < 1e-5);

    let geodesic = uniform(0.0);
    let status = unsafe {
        magflow_trajectory(geodesic.0, 1.0, start, 5.5, 0.01, states.as_mut_ptr(), states.len(), &mut written, &mut period)
    };
    assert_eq!(status, MagflowStatus::Ok);
    assert!(period.is_nan());

    let blow_up = uniform(50.0);
    let status = unsafe {
        magflow_trajectory(blow_up.0, 1.0, start, 5.0, 0.5, states.as_mut_ptr(), states.len(), &mut written, ptr::null_mut())
    };
    assert_eq!(status, MagflowStatus::NumericalError);
    assert!(last_error().contains("integrator"));
}

#[test]
fn config_errors() {
    let (status, message) = from_json(r#"{"tolerances": {"geometry": -1}}"#).err().unwrap();
    assert_eq!(status, MagflowStatus::ConfigError);
    assert!(message.contains("tolerances.geometry"));
    let big = r#"{"metric": {"bumps": [{"center": {"x": 0, "y": 1}, "amplitude": 0.1, "support_radius": 4}]}}"#;
    let (status, message) = from_json(big).err().unwrap();
    assert_eq!(status, MagflowStatus::ConfigError);
    assert!(message.contains("metric.bumps[0]"));
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { magflow_model_from_json(ptr::null(), &mut model) }, MagflowStatus::NullPointer);
    assert_eq!(unsafe { magflow_model_new(f64::NAN, &mut model) }, MagflowStatus::InvalidArgument);
    let mut v = 0.0;
    assert_eq!(unsafe { magflow_s_h(ptr::null(), &mut v) }, MagflowStatus::NullPointer);
    unsafe { magflow_model_free(ptr::null_mut()) };
}

#[test]
fn config_round_trip() {
    let model = from_json(r#"{"magnetic": {"a": 0.25}}"#).unwrap();
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { magflow_model_config_json(model.0, &mut text) }, MagflowStatus::Ok);
    let json = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    unsafe { magflow_string_free(text) };
    let again = from_json(&json).unwrap();
    let (mut a, mut b) = (MagflowHelicity::default(), MagflowHelicity::default());
    unsafe {
        magflow_helicity(model.0, &mut a);
        magflow_helicity(again.0, &mut b);
    }
    assert_eq!(a, b);
}

#[test]
fn errors_are_per_thread() {
    let mut v = 0.0;
    assert_eq!(unsafe { magflow_q_kernel_imag(1.0, 2.0, &mut v) }, MagflowStatus::InvalidArgument);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("magflow.h").exists());
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libmagflow_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("run the C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("s_h 2.000000"), "{stdout}");
}
