//! C ABI for `polycbf`.
//!
//! Scenarios and simulation results are exposed as opaque handles. Every
//! fallible function returns a [`PolycbfStatus`]; on failure a description
//! is available from [`polycbf_last_error`] on the same thread. Vectors are
//! passed as `double` arrays whose length must equal the scenario dimension.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polycbf::error::Error;
use polycbf::geometry::Vec3;
use polycbf::scenarios::{self, Scenario};
use polycbf::sim::{self, SimResult, Termination};

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolycbfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    UnknownScenario = 4,
    UnsafeStart = 5,
    DegenerateGradient = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// How a simulation ended.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolycbfTermination {
    Goal = 0,
    Horizon = 1,
    Error = 2,
}

/// Opaque scenario handle.
pub struct PolycbfScenario {
    inner: Scenario,
}

/// Opaque simulation result handle.
pub struct PolycbfSimResult {
    inner: SimResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn fail(status: PolycbfStatus, message: impl Into<String>) -> PolycbfStatus {
    set_last_error(message);
    status
}

fn status_of(error: &Error) -> PolycbfStatus {
    match error {
        Error::UnknownScenario(_) => PolycbfStatus::UnknownScenario,
        Error::UnsafeStart { .. } => PolycbfStatus::UnsafeStart,
        Error::DegenerateGradient { .. } => PolycbfStatus::DegenerateGradient,
        Error::Io { .. } => PolycbfStatus::Io,
        _ => PolycbfStatus::InvalidArgument,
    }
}

fn from_error(error: Error) -> PolycbfStatus {
    fail(status_of(&error), error.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), PolycbfStatus>) -> PolycbfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PolycbfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PolycbfStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, PolycbfStatus> {
    if p.is_null() {
        return Err(fail(PolycbfStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PolycbfStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, PolycbfStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PolycbfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, PolycbfStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PolycbfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, PolycbfStatus> {
    handle_mut(p, name)
}

unsafe fn point_arg(s: &Scenario, p: *const f64, len: usize, name: &str) -> Result<Vec3, PolycbfStatus> {
    if p.is_null() {
        return Err(fail(PolycbfStatus::NullPointer, format!("{name} is null")));
    }
    let coords = std::slice::from_raw_parts(p, len);
    s.dimension().embed(coords, name).map_err(from_error)
}

unsafe fn write_vector(s_dim: usize, v: &Vec3, out: *mut f64, name: &str) -> Result<(), PolycbfStatus> {
    if out.is_null() {
        return Err(fail(PolycbfStatus::NullPointer, format!("{name} is null")));
    }
    std::slice::from_raw_parts_mut(out, s_dim).copy_from_slice(&v.as_slice()[..s_dim]);
    Ok(())
}

fn boxed_scenario(result: polycbf::Result<Scenario>, out: &mut *mut PolycbfScenario) -> Result<(), PolycbfStatus> {
    let inner = result.map_err(from_error)?;
    *out = Box::into_raw(Box::new(PolycbfScenario { inner }));
    Ok(())
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn polycbf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Number of bundled scenarios.
#[no_mangle]
pub extern "C" fn polycbf_builtin_count() -> usize {
    scenarios::BUILTIN_NAMES.len()
}

/// Name of the bundled scenario at `index`, or null when out of range. The
/// string is static.
#[no_mangle]
pub extern "C" fn polycbf_builtin_name(index: usize) -> *const c_char {
    const NAMES: &[&CStr] = &[
        c"convex-corner",
        c"concave-corner",
        c"l-shape",
        c"crossroad",
        c"ellipse",
        c"revolving-door",
        c"pyramid",
    ];
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// Creates a bundled scenario by name.
///
/// # Safety
/// `name` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_builtin(name: *const c_char, out: *mut *mut PolycbfScenario) -> PolycbfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let name = str_arg(name, "name")?;
        boxed_scenario(scenarios::builtin(name), out)
    })
}

/// Loads a scenario from a JSON file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_load(path: *const c_char, out: *mut *mut PolycbfScenario) -> PolycbfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = str_arg(path, "path")?;
        boxed_scenario(scenarios::load(path), out)
    })
}

/// Parses a scenario from a JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_from_json(json: *const c_char, out: *mut *mut PolycbfScenario) -> PolycbfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = str_arg(json, "json")?;
        boxed_scenario(Scenario::from_json(text), out)
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_free(scenario: *mut PolycbfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Writes 2 or 3 to `out`.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_dimension(scenario: *const PolycbfScenario, out: *mut usize) -> PolycbfStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        *out_ptr(out, "out")? = s.inner.dimension().len();
        Ok(())
    })
}

/// Replaces the smoothing sharpness, buffer and class-K gain.
///
/// # Safety
/// `scenario` must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_scenario_set_params(
    scenario: *mut PolycbfScenario,
    kappa: f64,
    buffer: f64,
    alpha_gain: f64,
) -> PolycbfStatus {
    guard(|| {
        let s = handle_mut(scenario, "scenario")?;
        let params = polycbf::CbfParams::new(kappa, buffer, alpha_gain).map_err(from_error)?;
        s.inner.cbf = params;
        Ok(())
    })
}

/// Evaluates `h`, its gradient and its time partial at position `p`, time
/// `t`. `gradient` receives `len` values; any output may be null.
///
/// # Safety
/// `p` must point to `len` doubles and non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn polycbf_evaluate(
    scenario: *const PolycbfScenario,
    p: *const f64,
    len: usize,
    t: f64,
    h: *mut f64,
    gradient: *mut f64,
    time_partial: *mut f64,
) -> PolycbfStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.inner;
        let p = point_arg(s, p, len, "p")?;
        let e = s.barrier().evaluate(&p, t);
        if let Some(h) = h.as_mut() {
            *h = e.value;
        }
        if !gradient.is_null() {
            write_vector(len, &e.gradient, gradient, "gradient")?;
        }
        if let Some(dt) = time_partial.as_mut() {
            *dt = e.time_partial;
        }
        Ok(())
    })
}

/// Nonsmooth barrier value of the agent at `p`, time `t`.
///
/// # Safety
/// `p` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn polycbf_psi(
    scenario: *const PolycbfScenario,
    p: *const f64,
    len: usize,
    t: f64,
    out: *mut f64,
) -> PolycbfStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.inner;
        let p = point_arg(s, p, len, "p")?;
        *out_ptr(out, "out")? = s.barrier().nonsmooth(&p, t);
        Ok(())
    })
}

/// Goal-seeking command at `p`, written to `u` (`len` values).
///
/// # Safety
/// `p` and `u` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn polycbf_desired_velocity(
    scenario: *const PolycbfScenario,
    p: *const f64,
    len: usize,
    u: *mut f64,
) -> PolycbfStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.inner;
        let p = point_arg(s, p, len, "p")?;
        write_vector(len, &s.controller.velocity(&p), u, "u")
    })
}

/// Filtered command at `p`, time `t`, written to `u`. `active` (optional)
/// receives 1 when the filter modified the desired command.
///
/// # Safety
/// `p` and `u` must point to `len` doubles; `active` may be null.
#[no_mangle]
pub unsafe extern "C" fn polycbf_safe_velocity(
    scenario: *const PolycbfScenario,
    p: *const f64,
    len: usize,
    t: f64,
    u: *mut f64,
    active: *mut c_int,
) -> PolycbfStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.inner;
        let p = point_arg(s, p, len, "p")?;
        let r = sim::closed_loop(s, &p, t).map_err(from_error)?;
        write_vector(len, &r.u_safe, u, "u")?;
        if let Some(a) = active.as_mut() {
            *a = c_int::from(r.constraint_active);
        }
        Ok(())
    })
}

/// Runs the closed-loop simulation. `x0` may be null to use the scenario's
/// start; nonpositive `dt` or `t_end` keep the scenario defaults.
///
/// # Safety
/// `x0` is null or points to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_simulate(
    scenario: *const PolycbfScenario,
    x0: *const f64,
    len: usize,
    dt: f64,
    t_end: f64,
    out: *mut *mut PolycbfSimResult,
) -> PolycbfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let s = &handle(scenario, "scenario")?.inner;
        let mut config = s.default_sim;
        if !x0.is_null() {
            config.x0 = point_arg(s, x0, len, "x0")?;
        }
        if dt > 0.0 {
            config.dt = dt;
        }
        if t_end > 0.0 {
            config.t_end = t_end;
        }
        let inner = sim::run(s, &config).map_err(from_error)?;
        *out = Box::into_raw(Box::new(PolycbfSimResult { inner }));
        Ok(())
    })
}

/// Releases a simulation result. Null is ignored.
///
/// # Safety
/// `result` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_free(result: *mut PolycbfSimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of recorded samples.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_len(result: *const PolycbfSimResult, out: *mut usize) -> PolycbfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(result, "result")?.inner.len();
        Ok(())
    })
}

/// Time, position and barrier value of sample `index`. `p` receives the
/// scenario dimension's worth of values; any output may be null.
///
/// # Safety
/// `result` must be valid; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_sample(
    result: *const PolycbfSimResult,
    index: usize,
    t: *mut f64,
    p: *mut f64,
    h: *mut f64,
) -> PolycbfStatus {
    guard(|| {
        let r = &handle(result, "result")?.inner;
        if index >= r.len() {
            return Err(fail(
                PolycbfStatus::OutOfRange,
                format!("sample {index} out of range (len {})", r.len()),
            ));
        }
        if let Some(t) = t.as_mut() {
            *t = r.times[index];
        }
        if !p.is_null() {
            write_vector(r.dimension.len(), &r.positions[index], p, "p")?;
        }
        if let Some(h) = h.as_mut() {
            *h = r.h_values[index];
        }
        Ok(())
    })
}

/// Minimum of `h` along the trajectory.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_min_h(result: *const PolycbfSimResult, out: *mut f64) -> PolycbfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(result, "result")?.inner.min_h;
        Ok(())
    })
}

/// How the run ended.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_termination(
    result: *const PolycbfSimResult,
    out: *mut PolycbfTermination,
) -> PolycbfStatus {
    guard(|| {
        *out_ptr(out, "out")? = match handle(result, "result")?.inner.termination {
            Termination::Goal => PolycbfTermination::Goal,
            Termination::Horizon => PolycbfTermination::Horizon,
            Termination::Error(_) => PolycbfTermination::Error,
        };
        Ok(())
    })
}

/// Time at which the goal was reached, or a negative value if it was not.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_goal_time(result: *const PolycbfSimResult, out: *mut f64) -> PolycbfStatus {
    guard(|| {
        *out_ptr(out, "out")? = handle(result, "result")?.inner.reached_goal_at.unwrap_or(-1.0);
        Ok(())
    })
}

/// Writes the trajectory CSV to `path`.
///
/// # Safety
/// `result` must be valid and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn polycbf_sim_result_write_csv(result: *const PolycbfSimResult, path: *const c_char) -> PolycbfStatus {
    guard(|| {
        let r = &handle(result, "result")?.inner;
        let path = str_arg(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| fail(PolycbfStatus::Io, format!("{path}: {e}")))?;
        r.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| fail(PolycbfStatus::Io, format!("{path}: {e}")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_match_core() {
        assert_eq!(polycbf_builtin_count(), scenarios::BUILTIN_NAMES.len());
        for (i, name) in scenarios::BUILTIN_NAMES.iter().enumerate() {
            let c = unsafe { CStr::from_ptr(polycbf_builtin_name(i)) };
            assert_eq!(c.to_str().unwrap(), *name);
        }
        assert!(polycbf_builtin_name(scenarios::BUILTIN_NAMES.len()).is_null());
    }
}
