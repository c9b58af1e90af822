//! C ABI over `softsafe`.
//!
//! Every fallible function returns an [`SsStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`ss_last_error`]. Handles are opaque; free them with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use softsafe::actuator_model::ActuatorParams;
use softsafe::config::RunConfig;
use softsafe::harness::verify_one;
use softsafe::limb_sim::{run_closed_loop, SimConfig, TelemetryRecord};
use softsafe::supervisor::{compose, Supervisor, SupervisorConfig};
use softsafe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    /// A parameter failed validation.
    Domain = 2,
    Config = 3,
    Io = 4,
    /// Rank deficiency, empty set, unbounded program and similar.
    Numeric = 5,
    NoConvergence = 6,
    OutOfRange = 7,
    Panic = 8,
}

impl From<&Error> for SsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => SsStatus::Domain,
            Error::Config(_) => SsStatus::Config,
            Error::Io { .. } => SsStatus::Io,
            Error::NoConvergence { .. } => SsStatus::NoConvergence,
            Error::RankDeficient { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptySet
            | Error::Unreachable { .. }
            | Error::Unbounded => SsStatus::Numeric,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SsStatus, msg: impl Into<String>) -> SsStatus {
    set_error(msg.into());
    status
}

/// Clears the last error, runs `f`, and turns errors and panics into codes.
fn guard(f: impl FnOnce() -> Result<(), SsStatus>) -> SsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SsStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> SsStatus {
    fail(SsStatus::from(&e), e.to_string())
}

fn check_ptr<T>(p: *const T, name: &str) -> Result<(), SsStatus> {
    if p.is_null() {
        Err(fail(SsStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsActuator {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub dt: f64,
}

impl From<SsActuator> for ActuatorParams {
    fn from(a: SsActuator) -> Self {
        ActuatorParams {
            a1: a.a1,
            a2: a.a2,
            a3: a.a3,
            dt: a.dt,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsSupervisorConfig {
    pub gamma: f64,
    pub w_max: f64,
    pub w_lb: f64,
}

impl From<SsSupervisorConfig> for SupervisorConfig {
    fn from(c: SsSupervisorConfig) -> Self {
        SupervisorConfig {
            gamma: c.gamma,
            w_max: c.w_max,
            w_lb: c.w_lb,
        }
    }
}

/// Defaults for both parameter records. Either pointer may be null.
///
/// # Safety
/// Non-null pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_defaults(actuator: *mut SsActuator, supervisor: *mut SsSupervisorConfig) {
    let a = ActuatorParams::default();
    let s = SupervisorConfig::default();
    if !actuator.is_null() {
        *actuator = SsActuator {
            a1: a.a1,
            a2: a.a2,
            a3: a.a3,
            dt: a.dt,
        };
    }
    if !supervisor.is_null() {
        *supervisor = SsSupervisorConfig {
            gamma: s.gamma,
            w_max: s.w_max,
            w_lb: s.w_lb,
        };
    }
}

/// One actuator step `a1 w + a2 u + a3`; `u` must lie in [0, 1].
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn ss_actuator_step(params: SsActuator, w: f64, u: f64, out: *mut f64) -> SsStatus {
    guard(|| {
        check_ptr(out, "out")?;
        let p = ActuatorParams::from(params).validate().map_err(lib_err)?;
        *out = p.step(w, u).map_err(lib_err)?;
        Ok(())
    })
}

/// Opaque supervisor for a pair of identical wires.
pub struct SsSupervisor(Supervisor);

/// # Safety
/// `out` must be a valid pointer. On success `*out` owns a handle.
#[no_mangle]
pub unsafe extern "C" fn ss_supervisor_new(
    params: SsActuator,
    config: SsSupervisorConfig,
    out: *mut *mut SsSupervisor,
) -> SsStatus {
    guard(|| {
        check_ptr(out, "out")?;
        let s = Supervisor::new(params.into(), config.into()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SsSupervisor(s)));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`ss_supervisor_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_supervisor_free(handle: *mut SsSupervisor) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Uncapped input limit at temperature `w`.
///
/// # Safety
/// `handle` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_supervisor_cap(handle: *const SsSupervisor, w: f64, out: *mut f64) -> SsStatus {
    guard(|| {
        check_ptr(handle, "handle")?;
        check_ptr(out, "out")?;
        *out = (*handle).0.cap(w);
        Ok(())
    })
}

/// Clips two attempted inputs given the two wire temperatures.
///
/// # Safety
/// `temps`, `attempted` and `applied` must point to two doubles, `active` to
/// two ints. `active` may be null.
#[no_mangle]
pub unsafe extern "C" fn ss_supervisor_apply(
    handle: *const SsSupervisor,
    temps: *const f64,
    attempted: *const f64,
    applied: *mut f64,
    active: *mut c_int,
) -> SsStatus {
    guard(|| {
        check_ptr(handle, "handle")?;
        check_ptr(temps, "temps")?;
        check_ptr(attempted, "attempted")?;
        check_ptr(applied, "applied")?;
        let sup = &(*handle).0;
        let t = [*temps, *temps.add(1)];
        let req = [*attempted, *attempted.add(1)];
        if req.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(fail(SsStatus::Domain, "attempted inputs must lie in [0, 1]"));
        }
        let s = compose(req, [sup.cap(t[0]), sup.cap(t[1])]);
        for i in 0..2 {
            *applied.add(i) = s.applied[i];
            if !active.is_null() {
                *active.add(i) = c_int::from(s.active[i]);
            }
        }
        Ok(())
    })
}

/// Maximal invariant set check for one wire model.
///
/// # Safety
/// `safe` and `iterations` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_verify(
    params: SsActuator,
    config: SsSupervisorConfig,
    max_iters: usize,
    safe: *mut c_int,
    iterations: *mut usize,
) -> SsStatus {
    guard(|| {
        check_ptr(safe, "safe")?;
        check_ptr(iterations, "iterations")?;
        let v = verify_one(&params.into(), &config.into(), max_iters, softsafe::polytope::DEFAULT_TOL)
            .map_err(lib_err)?;
        *safe = c_int::from(v.safe);
        *iterations = v.iterations;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsRecord {
    pub k: usize,
    pub t: f64,
    pub theta: f64,
    pub theta_ref: f64,
    pub temps: [f64; 2],
    pub attempted: [f64; 2],
    /// `INFINITY` when the supervisor is disabled.
    pub caps: [f64; 2],
    pub applied: [f64; 2],
    pub active: [c_int; 2],
}

impl From<&TelemetryRecord> for SsRecord {
    fn from(r: &TelemetryRecord) -> Self {
        SsRecord {
            k: r.k,
            t: r.t,
            theta: r.theta,
            theta_ref: r.theta_ref,
            temps: r.temps,
            attempted: r.attempted,
            caps: r.caps,
            applied: r.applied,
            active: r.active.map(c_int::from),
        }
    }
}

/// Opaque simulation: a validated config plus the records of its last run.
pub struct SsSim {
    config: SimConfig,
    records: Vec<TelemetryRecord>,
}

/// Builds a simulation from config text. Relative trajectory paths resolve
/// against the working directory.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_sim_new(toml: *const c_char, out: *mut *mut SsSim) -> SsStatus {
    guard(|| {
        check_ptr(toml, "toml")?;
        check_ptr(out, "out")?;
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|_| fail(SsStatus::Config, "config is not valid UTF-8"))?;
        let config = RunConfig::parse(text).and_then(|c| c.to_sim()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SsSim {
            config,
            records: Vec::new(),
        }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`ss_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_sim_free(handle: *mut SsSim) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs the scenario, replacing any earlier records.
///
/// # Safety
/// `handle` must be valid. `len` may be null.
#[no_mangle]
pub unsafe extern "C" fn ss_sim_run(handle: *mut SsSim, len: *mut usize) -> SsStatus {
    guard(|| {
        check_ptr(handle, "handle")?;
        let sim = &mut *handle;
        sim.records = run_closed_loop(&sim.config).map_err(lib_err)?;
        if !len.is_null() {
            *len = sim.records.len();
        }
        Ok(())
    })
}

/// Number of records from the last run (zero before the first).
///
/// # Safety
/// `handle` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ss_sim_len(handle: *const SsSim) -> usize {
    handle.as_ref().map_or(0, |s| s.records.len())
}

/// # Safety
/// `handle` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_sim_record(handle: *const SsSim, index: usize, out: *mut SsRecord) -> SsStatus {
    guard(|| {
        check_ptr(handle, "handle")?;
        check_ptr(out, "out")?;
        let sim = &*handle;
        let r = sim.records.get(index).ok_or_else(|| {
            fail(
                SsStatus::OutOfRange,
                format!("record {index} out of range (len {})", sim.records.len()),
            )
        })?;
        *out = SsRecord::from(r);
        Ok(())
    })
}
