//! C interface to the vecsim simulator.
//!
//! Handles are opaque and owned by the caller; every handle returned by a
//! `*_new`/`*_default`/`*_from_toml` function must be released with the
//! matching `*_free`. Functions return a [`VecsimStatus`]; on failure the
//! message is available from [`vecsim_last_error`] on the same thread.
//!
//! Quantities that are undefined (no completed tasks yet, for example) are
//! reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vecsim::config::ScenarioConfig;
use vecsim::engine::{RunOutput, Simulation};
use vecsim::metrics::{RunMetrics, SlotRecord};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    /// The simulation already reached its horizon.
    Finished = 4,
    Panic = 5,
}

/// Scenario configuration.
pub struct VecsimConfig {
    inner: ScenarioConfig,
}

/// A simulation in progress, or its finished summary.
pub struct VecsimSim {
    state: SimState,
}

enum SimState {
    Running(Box<Simulation>),
    Done(Box<RunOutput>),
    Poisoned,
}

/// One slot's outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VecsimSlotRecord {
    pub slot: u64,
    pub generated: u64,
    pub committed: u64,
    pub failed: u64,
    pub completed: u64,
    pub social_welfare: f64,
    pub social_welfare_cumulative: f64,
    pub vehicle_utility: f64,
    pub server_utility: f64,
    pub apr: f64,
    pub acd: f64,
    pub acr: f64,
}

/// Whole-run summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VecsimMetrics {
    pub slots: u64,
    pub seed: u64,
    pub social_welfare: f64,
    pub vehicle_utility: f64,
    pub server_utility: f64,
    pub apr: f64,
    pub acd: f64,
    pub acr: f64,
    pub n_generated: u64,
    pub n_succeeded: u64,
    pub n_failed: u64,
    pub n_local: u64,
    pub n_edge: u64,
    pub n_cloud: u64,
    /// $/GHz over committed remote deals.
    pub mean_price_per_ghz: f64,
    pub runtime_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

impl From<&SlotRecord> for VecsimSlotRecord {
    fn from(r: &SlotRecord) -> Self {
        VecsimSlotRecord {
            slot: r.slot,
            generated: r.generated,
            committed: r.committed,
            failed: r.failed,
            completed: r.completed,
            social_welfare: r.sw,
            social_welfare_cumulative: r.sw_cum,
            vehicle_utility: r.veh_util,
            server_utility: r.srv_util,
            apr: nan(r.apr),
            acd: nan(r.acd),
            acr: nan(r.acr),
        }
    }
}

impl From<&RunMetrics> for VecsimMetrics {
    fn from(m: &RunMetrics) -> Self {
        VecsimMetrics {
            slots: m.slots,
            seed: m.seed,
            social_welfare: m.sw_cumulative,
            vehicle_utility: m.veh_util_total,
            server_utility: m.srv_util_total,
            apr: nan(m.apr),
            acd: nan(m.acd),
            acr: nan(m.acr),
            n_generated: m.n_gen,
            n_succeeded: m.n_succ,
            n_failed: m.n_failed,
            n_local: m.n_local,
            n_edge: m.n_edge,
            n_cloud: m.n_cloud,
            mean_price_per_ghz: nan(m.mean_price_per_ghz),
            runtime_ms: m.runtime_ms,
        }
    }
}

/// Run `f`, turning panics and errors into status codes.
fn guard(f: impl FnOnce() -> Result<(), (VecsimStatus, String)>) -> VecsimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VecsimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            VecsimStatus::Panic
        }
    }
}

fn null(what: &str) -> (VecsimStatus, String) {
    (VecsimStatus::NullPointer, format!("null {what}"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VecsimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VecsimStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn config_err(e: vecsim::Error) -> (VecsimStatus, String) {
    (VecsimStatus::InvalidConfig, e.to_string())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn vecsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vecsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
#[no_mangle]
pub extern "C" fn vecsim_config_default() -> *mut VecsimConfig {
    Box::into_raw(Box::new(VecsimConfig {
        inner: ScenarioConfig::default(),
    }))
}

/// Parse a TOML configuration. Missing keys take their defaults.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vecsim_config_from_toml(
    text: *const c_char,
    out: *mut *mut VecsimConfig,
) -> VecsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let s = str_arg(text, "config text")?;
        let inner = ScenarioConfig::from_toml_str(s).map_err(config_err)?;
        *out = Box::into_raw(Box::new(VecsimConfig { inner }));
        Ok(())
    })
}

/// Set one key, e.g. `scenario.vehicle_count` = `"50"`. The configuration
/// is left unchanged on failure.
///
/// # Safety
/// `cfg` must come from this library; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vecsim_config_set(
    cfg: *mut VecsimConfig,
    key: *const c_char,
    value: *const c_char,
) -> VecsimStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let mut next = cfg.inner.clone();
        next.set_key(key, value).map_err(config_err)?;
        next.validate().map_err(config_err)?;
        cfg.inner = next;
        Ok(())
    })
}

/// Release a configuration. NULL is ignored.
///
/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vecsim_config_free(cfg: *mut VecsimConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Build a simulation. The configuration is copied and may be freed.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vecsim_sim_new(
    cfg: *const VecsimConfig,
    out: *mut *mut VecsimSim,
) -> VecsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = ptr::null_mut();
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        let sim = Simulation::new(&cfg.inner).map_err(config_err)?;
        *out = Box::into_raw(Box::new(VecsimSim {
            state: SimState::Running(Box::new(sim)),
        }));
        Ok(())
    })
}

fn finished() -> (VecsimStatus, String) {
    (VecsimStatus::Finished, "simulation already finished".into())
}

impl VecsimSim {
    fn running(&mut self) -> Result<&mut Simulation, (VecsimStatus, String)> {
        match &mut self.state {
            SimState::Running(s) => Ok(s),
            SimState::Done(_) => Err(finished()),
            SimState::Poisoned => Err((VecsimStatus::Panic, "simulation is poisoned".into())),
        }
    }

    fn close(&mut self) {
        if matches!(self.state, SimState::Running(_)) {
            if let SimState::Running(s) = std::mem::replace(&mut self.state, SimState::Poisoned) {
                self.state = SimState::Done(Box::new(s.run()));
            }
        }
    }
}

/// Advance one slot. Returns `Finished` once the horizon is reached;
/// `record` may be NULL.
///
/// # Safety
/// `sim` must come from this library; `record` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn vecsim_sim_step(
    sim: *mut VecsimSim,
    record: *mut VecsimSlotRecord,
) -> VecsimStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        let s = sim.running()?;
        if s.world().slot >= s.world().config.scenario.horizon {
            sim.close();
            return Err(finished());
        }
        // a panic mid-slot leaves the handle poisoned
        let SimState::Running(mut s) = std::mem::replace(&mut sim.state, SimState::Poisoned) else {
            unreachable!("checked above");
        };
        let r = VecsimSlotRecord::from(s.step());
        sim.state = SimState::Running(s);
        if let Some(out) = record.as_mut() {
            *out = r;
        }
        Ok(())
    })
}

/// Number of slots simulated so far.
///
/// # Safety
/// `sim` must come from this library or be NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn vecsim_sim_slot(sim: *const VecsimSim) -> u64 {
    match sim.as_ref().map(|s| &s.state) {
        Some(SimState::Running(s)) => s.world().slot,
        Some(SimState::Done(o)) => o.metrics.slots,
        _ => 0,
    }
}

/// Run the remaining slots, drain in-flight work and write the summary.
/// Calling it again returns the same summary.
///
/// # Safety
/// `sim` must come from this library; `metrics` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn vecsim_sim_run(
    sim: *mut VecsimSim,
    metrics: *mut VecsimMetrics,
) -> VecsimStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        sim.close();
        match &sim.state {
            SimState::Done(o) => {
                if let Some(out) = metrics.as_mut() {
                    *out = VecsimMetrics::from(&o.metrics);
                }
                Ok(())
            }
            _ => Err((VecsimStatus::Panic, "simulation is poisoned".into())),
        }
    })
}

/// Release a simulation. NULL is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vecsim_sim_free(sim: *mut VecsimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
