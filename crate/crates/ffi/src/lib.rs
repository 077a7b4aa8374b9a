//! C ABI for `hybridgrid`.
//!
//! Scenarios and runs are opaque handles created and released by this library.
//! Every fallible call returns an [`HgStatus`]; on failure the message is
//! available from [`hg_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hybridgrid::scenario::export::write_trajectory_csv;
use hybridgrid::scenario::runner::RunOutcome;
use hybridgrid::scenario::{parse_scenario, parse_scenario_str, preset_case_study, run_scenario, RunOptions, Scenario};
use hybridgrid::steady_state::optimal_dispatch;
use hybridgrid::{ControlMode, ModelError, ScenarioError, SolveError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Schema = 6,
    Validation = 7,
    Model = 8,
    Numerical = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Controller family.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HgMode {
    Primary = 0,
    DualDroop = 1,
    Secondary = 2,
}

impl From<HgMode> for ControlMode {
    fn from(m: HgMode) -> Self {
        match m {
            HgMode::Primary => ControlMode::Primary,
            HgMode::DualDroop => ControlMode::DualDroop,
            HgMode::Secondary => ControlMode::Secondary,
        }
    }
}

/// A parsed and range-checked scenario.
pub struct HgScenario {
    inner: Scenario,
}

/// A completed and certified simulation run.
pub struct HgRun {
    inner: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).unwrap()));
}

struct Failure(HgStatus, String);

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match &e {
            ScenarioError::Parse { .. } => HgStatus::Parse,
            ScenarioError::Schema { .. } | ScenarioError::UnknownParameter(_) => HgStatus::Schema,
            ScenarioError::Validation(_) => HgStatus::Validation,
            ScenarioError::Io { .. } => HgStatus::Io,
            ScenarioError::Model(ModelError::NonFiniteState { .. }) | ScenarioError::Solve(_) => HgStatus::Numerical,
            ScenarioError::Model(_) => HgStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        Failure(HgStatus::InvalidArgument, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HgStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, records any failure and converts panics into [`HgStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(HgStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null if it succeeded.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn hg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn emit_scenario(s: Scenario, out: &mut *mut HgScenario) {
    *out = Box::into_raw(Box::new(HgScenario { inner: s }));
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_from_json(json: *const c_char, out: *mut *mut HgScenario) -> HgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = parse_scenario_str(str_arg(json, "json")?)?;
        emit_scenario(s, out);
        Ok(())
    })
}

/// Reads and parses a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_load(path: *const c_char, out: *mut *mut HgScenario) -> HgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = parse_scenario(Path::new(str_arg(path, "path")?))?;
        emit_scenario(s, out);
        Ok(())
    })
}

/// The bundled case-study scenario in primary mode.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_preset_case_study(out: *mut *mut HgScenario) -> HgStatus {
    guard(|| {
        emit_scenario(preset_case_study(), out_arg(out, "out")?);
        Ok(())
    })
}

/// Selects the controller family.
///
/// # Safety
/// `scenario` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_set_mode(scenario: *mut HgScenario, mode: HgMode) -> HgStatus {
    guard(|| {
        out_arg(scenario, "scenario")?.inner.controllers.mode = mode.into();
        Ok(())
    })
}

/// Sets the simulation end time in seconds.
///
/// # Safety
/// `scenario` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_set_t_end(scenario: *mut HgScenario, t_end_s: f64) -> HgStatus {
    guard(|| {
        if !(t_end_s.is_finite() && t_end_s > 0.0) {
            return Err(Failure(HgStatus::InvalidArgument, format!("t_end must be > 0, got {t_end_s}")));
        }
        out_arg(scenario, "scenario")?.inner.sim.t_end_s = t_end_s;
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hg_scenario_free(scenario: *mut HgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Integrates and certifies a scenario. A run whose certificate fails is
/// still returned with [`HgStatus::Ok`]; see [`hg_run_certificate_passed`].
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_run(scenario: *const HgScenario, out: *mut *mut HgRun) -> HgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = ref_arg(scenario, "scenario")?;
        let outcome = run_scenario(&s.inner, &RunOptions::default())?;
        *out = Box::into_raw(Box::new(HgRun { inner: outcome }));
        Ok(())
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hg_run_free(run: *mut HgRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of stored samples, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_run_sample_count(run: *const HgRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.trajectory.samples.len())
}

/// 1 if every applicable certificate check passed, 0 if not, -1 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_run_certificate_passed(run: *const HgRun) -> c_int {
    run.as_ref().map_or(-1, |r| c_int::from(r.inner.report.passed()))
}

/// Command-line exit code of the run: 0 certified, 1 certificate violation.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hg_run_exit_code(run: *const HgRun) -> c_int {
    run.as_ref().map_or(-1, |r| r.inner.exit_code())
}

/// Steady-state figures of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HgRunMetrics {
    pub final_time: f64,
    /// Relative power-sharing error against the optimal dispatch.
    pub sharing_error: f64,
    /// Largest final AC frequency deviation in rad/s.
    pub omega_max: f64,
    /// Largest final weighted average DC voltage deviation.
    pub vbar_max: f64,
    /// Final distance to the equilibrium, infinity norm.
    pub terminal_error: f64,
    pub max_newton_iterations: usize,
}

/// Copies the steady-state figures of `run` into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hg_run_metrics(run: *const HgRun, out: *mut HgRunMetrics) -> HgStatus {
    guard(|| {
        let s = &ref_arg(run, "run")?.inner.summary;
        *out_arg(out, "out")? = HgRunMetrics {
            final_time: s.final_time,
            sharing_error: s.sharing_error,
            omega_max: s.omega_max,
            vbar_max: s.vbar_max,
            terminal_error: s.terminal_error,
            max_newton_iterations: s.max_newton_iterations,
        };
        Ok(())
    })
}

/// Copies the plain-text certificate summary into `buf` (NUL-terminated).
/// `needed` receives the required size including the terminator. With a
/// null `buf` or a short buffer, only `needed` is written and
/// [`HgStatus::BufferTooSmall`] is returned for the short buffer.
///
/// # Safety
/// `run` must be a live handle, `buf` null or writable for `len` bytes, and
/// `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn hg_run_certificate_summary(
    run: *const HgRun,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> HgStatus {
    guard(|| {
        let text = ref_arg(run, "run")?.inner.report.summary();
        let size = text.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if buf.is_null() {
            return Ok(());
        }
        if len < size {
            return Err(Failure(HgStatus::BufferTooSmall, format!("need {size} bytes, got {len}")));
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Writes the trajectory CSV to `path`, keeping every `record_every`-th sample.
///
/// # Safety
/// `run` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hg_run_write_trajectory_csv(
    run: *const HgRun,
    path: *const c_char,
    record_every: usize,
) -> HgStatus {
    guard(|| {
        let r = &ref_arg(run, "run")?.inner;
        let path = Path::new(str_arg(path, "path")?);
        if record_every == 0 {
            return Err(Failure(HgStatus::InvalidArgument, "record_every must be >= 1".into()));
        }
        let file = std::fs::File::create(path).map_err(|e| ScenarioError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_trajectory_csv(&mut w, &r.trajectory, &r.network, record_every)
            .map_err(|e| ScenarioError::io(path, e))?;
        Ok(())
    })
}

/// Writes every artifact of the run (trajectory, certificate, summary) into `dir`.
///
/// # Safety
/// `run` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hg_run_write_outputs(run: *const HgRun, dir: *const c_char) -> HgStatus {
    guard(|| {
        let r = &ref_arg(run, "run")?.inner;
        r.write_outputs(Path::new(str_arg(dir, "dir")?))?;
        Ok(())
    })
}

/// Minimum-cost dispatch `p* = q·λ` over `n` buses. Buses with `q = 0`
/// receive nothing. `cost` may be null.
///
/// # Safety
/// `p_l`, `p_u`, `q` must be readable and `p_star` writable for `n` values.
#[no_mangle]
pub unsafe extern "C" fn hg_optimal_dispatch(
    p_l: *const f64,
    p_u: *const f64,
    q: *const f64,
    n: usize,
    p_star: *mut f64,
    cost: *mut f64,
) -> HgStatus {
    guard(|| {
        if p_l.is_null() || p_u.is_null() || q.is_null() || p_star.is_null() {
            return Err(null("p_l, p_u, q or p_star"));
        }
        let slice = |p: *const f64| std::slice::from_raw_parts(p, n);
        let d = optimal_dispatch(slice(p_l), slice(p_u), slice(q))?;
        std::slice::from_raw_parts_mut(p_star, n).copy_from_slice(&d.p_g_star);
        if let Some(c) = cost.as_mut() {
            *c = d.cost;
        }
        Ok(())
    })
}
