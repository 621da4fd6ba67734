use std::ffi::{c_char, CStr};
use std::ptr;

use darkdeco::decoherence::{decoherence_rate, TargetModel};
use darkdeco::flux::{FluxMode, FluxModel};
use darkdeco::model::{DmScenario, Experiment};
use darkdeco_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; dd_last_error_length() + 1];
    let n = unsafe { dd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n >= 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn scenario(mass: f64, m: f64) -> *mut DdScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dd_scenario_new(mass, m, &mut s) }, DdStatus::Ok);
    s
}

fn experiment(name: &CStr) -> *mut DdExperiment {
    let mut e = ptr::null_mut();
    assert_eq!(
        unsafe { dd_experiment_lookup(name.as_ptr(), &mut e) },
        DdStatus::Ok
    );
    e
}

#[test]
fn rate_matches_the_library() {
    let s = scenario(1e6, 20.0);
    let e = experiment(c"otima");
    let (mut re, mut im) = (0.0, 0.0);
    let status =
        unsafe { dd_decoherence_rate(s, e, DdFluxMode::Anisotropic, 0.0, 0.4, &mut re, &mut im) };
    assert_eq!(status, DdStatus::Ok);
    assert_eq!(dd_last_error_length(), 0);

    let ds = DmScenario::new(1e6, 20.0).unwrap();
    let target = TargetModel::new(Experiment::lookup("OTIMA").unwrap()).unwrap();
    let flux = FluxModel::space(ds, FluxMode::Anisotropic).unwrap();
    let direct = decoherence_rate(&ds, &target, &flux, 0.4).unwrap().rate;
    assert_eq!((re, im), (direct.re, direct.im));

    assert_eq!(unsafe { dd_scenario_set_alpha_m(s, 0.5) }, DdStatus::Ok);
    let mut half = 0.0;
    unsafe { dd_decoherence_rate(s, e, DdFluxMode::Anisotropic, 0.0, 0.4, &mut half, &mut im) };
    assert!((half / re - 0.5).abs() < 1e-12);
    unsafe {
        dd_scenario_free(s);
        dd_experiment_free(e);
    }
}

#[test]
fn coupling_and_threshold() {
    let s = scenario(1e6, 20.0);
    let e = experiment(c"OTIMA");
    let mut t = 0.0;
    assert_eq!(unsafe { dd_detection_threshold(e, &mut t) }, DdStatus::Ok);
    assert!(t > 0.0 && t < 1.0);
    let mut a = 0.0;
    assert_eq!(
        unsafe { dd_critical_coupling(s, e, DdShielding::Space, &mut a) },
        DdStatus::Ok
    );
    assert!(a > 0.0 && a < 1.0, "{a}");
    unsafe {
        dd_scenario_free(s);
        dd_experiment_free(e);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { dd_scenario_new(-1.0, 1.0, &mut s) },
        DdStatus::InvalidArgument
    );
    assert!(s.is_null());
    assert!(last_error().contains("mass"), "{}", last_error());

    assert_eq!(
        unsafe { dd_scenario_new(1.0, 1.0, ptr::null_mut()) },
        DdStatus::NullPointer
    );
    assert!(last_error().contains("out"));

    let mut e = ptr::null_mut();
    assert_eq!(
        unsafe { dd_experiment_lookup(c"nowhere".as_ptr(), &mut e) },
        DdStatus::InvalidArgument
    );
    assert!(last_error().contains("nowhere"));
    assert_eq!(
        unsafe { dd_experiment_lookup(ptr::null(), &mut e) },
        DdStatus::NullPointer
    );

    let e = experiment(c"KDTL");
    assert_eq!(
        unsafe { dd_experiment_set_separation_nm(e, -3.0) },
        DdStatus::InvalidArgument
    );
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe {
        dd_decoherence_rate(
            ptr::null(),
            e,
            DdFluxMode::Thermalized,
            300.0,
            0.0,
            &mut re,
            &mut im,
        )
    };
    assert_eq!(status, DdStatus::NullPointer);
    let s = scenario(1e6, 20.0);
    let status =
        unsafe { dd_decoherence_rate(s, e, DdFluxMode::Thermalized, -5.0, 0.0, &mut re, &mut im) };
    assert_eq!(status, DdStatus::InvalidArgument);
    assert!(last_error().contains("temperature"));

    // A too-small buffer is refused rather than truncated.
    let mut tiny = [0 as c_char; 2];
    assert_eq!(
        unsafe { dd_last_error_message(tiny.as_mut_ptr(), tiny.len()) },
        -1
    );
    unsafe {
        dd_scenario_free(s);
        dd_experiment_free(e);
        dd_scenario_free(ptr::null_mut());
        dd_experiment_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(dd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
