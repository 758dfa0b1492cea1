//! C ABI over `frictionwork`.
//!
//! Every function returns an [`FwStatus`] (or a null handle) and never
//! unwinds across the boundary. After a failure, [`fw_last_error`] returns
//! the message for the calling thread. Handles are opaque and must be freed
//! with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use frictionwork::chain::ChainParams;
use frictionwork::config::RunConfig;
use frictionwork::dynamics::{EvolutionConfig, RampProtocol};
use frictionwork::observables::FrictionReport;
use frictionwork::report::{sweep_csv, write_atomic};
use frictionwork::sweep::{Engine, PointSpec, Solver, SweepResult};
use frictionwork::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
    OutOfRange = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwSolver {
    Exact = 0,
    FreeFermion = 1,
}

/// One parameter point. Energies in units of g, times in 1/g.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FwPoint {
    pub n_sites: u32,
    pub coupling: f64,
    pub longitudinal: f64,
    pub h_initial: f64,
    pub delta_h: f64,
    pub duration: f64,
    pub t_initial: f64,
    /// Integrator step; 0 selects the default.
    pub step_dt: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FwReport {
    pub w_tau: f64,
    pub w_a: f64,
    pub w_fric: f64,
    pub t_a: f64,
    pub delta_s_d: f64,
    pub t_a_delta_s_d: f64,
    pub d_tau_a: f64,
    pub d_diag_a: f64,
    pub delta: f64,
    pub t_a_d_tau_a: f64,
    pub f_diag_ta: f64,
    pub f_a_ta: f64,
    pub w_opt: f64,
    pub t_mean_energy: f64,
    /// Nonzero when a relative entropy hit the infinity sentinel.
    pub flagged: i32,
}

impl From<FrictionReport> for FwReport {
    fn from(r: FrictionReport) -> Self {
        FwReport {
            w_tau: r.w_tau,
            w_a: r.w_a,
            w_fric: r.w_fric,
            t_a: r.t_a,
            delta_s_d: r.delta_s_d,
            t_a_delta_s_d: r.t_a_delta_s_d,
            d_tau_a: r.d_tau_a,
            d_diag_a: r.d_diag_a,
            delta: r.delta,
            t_a_d_tau_a: r.t_a_d_tau_a,
            f_diag_ta: r.f_diag_ta,
            f_a_ta: r.f_a_ta,
            w_opt: r.w_opt,
            t_mean_energy: r.t_mean_energy,
            flagged: r.flagged as i32,
        }
    }
}

/// Sweep runner with its decomposition caches.
pub struct FwEngine(Engine);

/// Parsed run configuration.
pub struct FwConfig(RunConfig);

/// Completed sweep.
pub struct FwSweep(SweepResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FwStatus {
    match e {
        Error::Io { .. } => FwStatus::Io,
        e if e.is_config() => FwStatus::Config,
        _ => FwStatus::Numerical,
    }
}

fn fail(status: FwStatus, msg: impl Into<String>) -> FwStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FwStatus, String)>) -> FwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FwStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FwStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lib<T>(r: frictionwork::Result<T>) -> Result<T, (FwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FwStatus, String) {
    (FwStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a readable value of type `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (FwStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FwStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FwStatus::Config, format!("{what} is not valid UTF-8")))
}

fn point_spec(p: &FwPoint) -> frictionwork::Result<PointSpec> {
    let params = ChainParams::new(p.n_sites as usize, p.coupling, p.longitudinal)?;
    let protocol = RampProtocol::linear(p.h_initial, p.delta_h, p.duration)?;
    let evolution = EvolutionConfig {
        step_dt: (p.step_dt != 0.0).then_some(p.step_dt),
        ..EvolutionConfig::default()
    };
    let spec = PointSpec {
        params,
        protocol,
        t_i: p.t_initial,
        evolution,
    };
    spec.validate()?;
    Ok(spec)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The reference point: N=8, g=1, L=1, h_i=1.5, dh=2, tau=1, T_i=3.
#[no_mangle]
pub extern "C" fn fw_point_default() -> FwPoint {
    let p = RunConfig::default().point;
    FwPoint {
        n_sites: p.params.n_sites as u32,
        coupling: p.params.coupling,
        longitudinal: p.params.longitudinal,
        h_initial: p.protocol.h_initial,
        delta_h: p.protocol.delta_h,
        duration: p.protocol.duration,
        t_initial: p.t_i,
        step_dt: 0.0,
    }
}

/// New engine; `workers = 0` uses one thread per core. Returns null on
/// failure.
#[no_mangle]
pub extern "C" fn fw_engine_new(workers: u32) -> *mut FwEngine {
    catch_unwind(|| Box::into_raw(Box::new(FwEngine(Engine::new(workers as usize))))).unwrap_or_else(|_| {
        set_error("internal panic in fw_engine_new".into());
        ptr::null_mut()
    })
}

/// # Safety
/// `engine` must be null or a handle from [`fw_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_engine_free(engine: *mut FwEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Evaluates one point.
///
/// # Safety
/// `engine`, `point` and `out` must be valid pointers; `out` is written only
/// on success.
#[no_mangle]
pub unsafe extern "C" fn fw_evaluate(
    engine: *const FwEngine,
    point: *const FwPoint,
    solver: FwSolver,
    out: *mut FwReport,
) -> FwStatus {
    guard(|| {
        let engine = deref(engine, "engine")?;
        let point = deref(point, "point")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = lib(point_spec(point))?;
        let solver = match solver {
            FwSolver::Exact => Solver::Exact,
            FwSolver::FreeFermion => Solver::FreeFermion,
        };
        let r = lib(engine.0.evaluate(&spec, solver))?;
        *out = r.report.into();
        Ok(())
    })
}

/// Parses configuration text (the same format the CLI reads).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fw_config_parse(text: *const c_char, out: *mut *mut FwConfig) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = string(text, "text")?;
        let cfg = lib(RunConfig::parse(text))?;
        *out = Box::into_raw(Box::new(FwConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from [`fw_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_config_free(config: *mut FwConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the sweep a config describes.
///
/// # Safety
/// `engine`, `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fw_sweep_run(engine: *const FwEngine, config: *const FwConfig, out: *mut *mut FwSweep) -> FwStatus {
    guard(|| {
        let engine = deref(engine, "engine")?;
        let config = deref(config, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = lib(engine.0.run(&config.0.sweep_spec()))?;
        *out = Box::into_raw(Box::new(FwSweep(result)));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be null or a handle from [`fw_sweep_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_sweep_free(sweep: *mut FwSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_sweep_len(sweep: *const FwSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.rows.len())
}

/// Axis value and report of row `index`. A row whose point failed returns
/// [`FwStatus::Numerical`] (or `Config`) with the row's message; the axis
/// value is still written.
///
/// # Safety
/// `sweep` must be a live handle; `axis_value` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fw_sweep_row(sweep: *const FwSweep, index: usize, axis_value: *mut f64, out: *mut FwReport) -> FwStatus {
    guard(|| {
        let sweep = deref(sweep, "sweep")?;
        if axis_value.is_null() || out.is_null() {
            return Err(null("output pointer"));
        }
        let row = sweep
            .0
            .rows
            .get(index)
            .ok_or_else(|| (FwStatus::OutOfRange, format!("row {index} of {}", sweep.0.rows.len())))?;
        *axis_value = row.axis_value;
        match &row.outcome {
            Ok(p) => {
                *out = p.report.into();
                Ok(())
            }
            Err(msg) => Err((FwStatus::Numerical, msg.clone())),
        }
    })
}

/// Writes the sweep table as CSV, atomically.
///
/// # Safety
/// `sweep` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fw_sweep_write_csv(sweep: *const FwSweep, path: *const c_char) -> FwStatus {
    guard(|| {
        let sweep = deref(sweep, "sweep")?;
        let path = string(path, "path")?;
        let bytes = lib(sweep_csv(&sweep.0))?;
        lib(write_atomic(Path::new(path), &bytes))
    })
}
