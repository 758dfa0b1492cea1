use std::ffi::{CStr, CString};
use std::ptr;

use frictionwork_ffi::*;

fn last_error() -> String {
    let p = fw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_point() -> FwPoint {
    FwPoint {
        n_sites: 4,
        ..fw_point_default()
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut out = FwReport::default();
    let p = small_point();
    let s = unsafe { fw_evaluate(ptr::null(), &p, FwSolver::Exact, &mut out) };
    assert_eq!(s, FwStatus::NullPointer);
    assert!(last_error().contains("engine"));
    assert_eq!(unsafe { fw_sweep_len(ptr::null()) }, 0);
    unsafe {
        fw_engine_free(ptr::null_mut());
        fw_config_free(ptr::null_mut());
        fw_sweep_free(ptr::null_mut());
    }
}

#[test]
fn evaluate_small_chain() {
    let engine = fw_engine_new(1);
    assert!(!engine.is_null());
    let p = small_point();
    let mut out = FwReport::default();
    let s = unsafe { fw_evaluate(engine, &p, FwSolver::Exact, &mut out) };
    assert_eq!(s, FwStatus::Ok, "{}", last_error());
    assert!(out.w_fric > 0.0);
    assert!((out.w_fric - (out.w_tau - out.w_a)).abs() < 1e-12);
    assert_eq!(out.flagged, 0);
    unsafe { fw_engine_free(engine) };
}

#[test]
fn invalid_point_is_config_error() {
    let engine = fw_engine_new(1);
    let p = FwPoint {
        t_initial: -1.0,
        ..small_point()
    };
    let mut out = FwReport::default();
    let s = unsafe { fw_evaluate(engine, &p, FwSolver::Exact, &mut out) };
    assert_eq!(s, FwStatus::Config);
    let p = FwPoint {
        longitudinal: 1.0,
        ..small_point()
    };
    let s = unsafe { fw_evaluate(engine, &p, FwSolver::FreeFermion, &mut out) };
    assert_eq!(s, FwStatus::Config, "{}", last_error());
    unsafe { fw_engine_free(engine) };
}

#[test]
fn config_sweep_round_trip() {
    let text = CString::new("n = 4\nL = 0\naxis = tau\ngrid = 0.5, 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { fw_config_parse(text.as_ptr(), &mut cfg) }, FwStatus::Ok);
    let engine = fw_engine_new(1);
    let mut sweep = ptr::null_mut();
    assert_eq!(unsafe { fw_sweep_run(engine, cfg, &mut sweep) }, FwStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { fw_sweep_len(sweep) }, 2);

    let (mut x, mut r) = (0.0, FwReport::default());
    assert_eq!(unsafe { fw_sweep_row(sweep, 1, &mut x, &mut r) }, FwStatus::Ok);
    assert_eq!(x, 1.0);
    assert_eq!(unsafe { fw_sweep_row(sweep, 2, &mut x, &mut r) }, FwStatus::OutOfRange);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fw_sweep_write_csv(sweep, path.as_ptr()) }, FwStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    unsafe {
        fw_sweep_free(sweep);
        fw_config_free(cfg);
        fw_engine_free(engine);
    }
}

#[test]
fn bad_config_text() {
    let text = CString::new("frobnicate = 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { fw_config_parse(text.as_ptr(), &mut cfg) }, FwStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("frobnicate"));
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/frictionwork.h")).unwrap();
    for name in ["fw_evaluate", "fw_sweep_run", "fw_last_error", "FW_STATUS_NUMERICAL", "typedef struct FwEngine FwEngine"] {
        assert!(header.contains(name), "{name}");
    }
    let v = unsafe { CStr::from_ptr(fw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
