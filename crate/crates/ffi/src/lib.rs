//! C interface to `sirsh`.
//!
//! Parameter sets and trajectories are opaque handles created and released
//! by this library. Every fallible call returns a [`SirshStatus`]; on failure
//! [`sirsh_last_error`] describes the problem for the calling thread.

#![allow(clippy::missing_safety_doc)]

use sirsh::analysis::{endemic_equilibrium, r0, theta_star, EeMode};
use sirsh::econ::{classify_case, CaseId};
use sirsh::sim::{simulate_outbreak, EventKind, EventSpec, IntegratorConfig, Trajectory, WAVE_END_R0_MARGIN};
use sirsh::slowfast::{entry_exit_point, exit_time};
use sirsh::{Error, ModelParams};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SirshStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The quantity is not defined for these parameters.
    NotApplicable = 3,
    NumericalFailure = 4,
    /// A requested event or index does not exist.
    NotFound = 5,
    Panic = 6,
}

/// Compartment fractions `(S, I, C, H)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SirshState {
    pub s: f64,
    pub i: f64,
    pub c: f64,
    pub h: f64,
}

pub struct SirshParams(ModelParams);

pub struct SirshTrajectory {
    traj: Trajectory,
    wave_end: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> SirshStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::UnorderedRates { .. }
        | Error::OutsideSimplex { .. }
        | Error::InvalidInitialInfected(_)
        | Error::NonPositiveSusceptible(_)
        | Error::NotInAttractingRegion { .. }
        | Error::InvalidConfig(_) => SirshStatus::InvalidArgument,
        Error::UnsupportedRegime { .. }
        | Error::NoEndemicEquilibrium { .. }
        | Error::DegenerateTheta
        | Error::NoEpidemicOrbit
        | Error::NotApplicable(_) => SirshStatus::NotApplicable,
        Error::StiffnessSuspected { .. } | Error::DomainViolation { .. } | Error::Root(_) => {
            SirshStatus::NumericalFailure
        }
        Error::AtGridPoint { source, .. } => status_of(source),
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SirshStatus, String)>) -> SirshStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SirshStatus::Ok,
        Ok(Err((st, msg))) => {
            set_error(msg);
            st
        }
        Err(_) => {
            set_error("internal panic");
            SirshStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SirshStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SirshStatus, String) {
    (SirshStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SirshStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), (SirshStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sirsh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a parameter set. Pass `allow_unordered != 0` to accept
/// `gamma_i > gamma_c`.
#[no_mangle]
pub unsafe extern "C" fn sirsh_params_new(
    beta: f64,
    theta: f64,
    gamma_i: f64,
    gamma_c: f64,
    gamma_h: f64,
    eps: f64,
    allow_unordered: i32,
    out: *mut *mut SirshParams,
) -> SirshStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = if allow_unordered != 0 {
            ModelParams::new_unordered(beta, theta, gamma_i, gamma_c, gamma_h, eps)
        } else {
            ModelParams::new(beta, theta, gamma_i, gamma_c, gamma_h, eps)
        }
        .map_err(lib)?;
        out.write(Box::into_raw(Box::new(SirshParams(p))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sirsh_params_free(p: *mut SirshParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

#[no_mangle]
pub unsafe extern "C" fn sirsh_r0(p: *const SirshParams, out: *mut f64) -> SirshStatus {
    guard(|| put(out, r0(&get(p, "params")?.0), "out"))
}

/// Endemic equilibrium; `exact == 0` selects the leading-order formula.
#[no_mangle]
pub unsafe extern "C" fn sirsh_endemic_equilibrium(
    p: *const SirshParams,
    exact: i32,
    out: *mut SirshState,
) -> SirshStatus {
    guard(|| {
        let mode = if exact != 0 { EeMode::Exact } else { EeMode::Simplified };
        let x = endemic_equilibrium(&get(p, "params")?.0, mode).map_err(lib)?;
        put(
            out,
            SirshState {
                s: x.s,
                i: x.i,
                c: x.c,
                h: x.h,
            },
            "out",
        )
    })
}

/// Severity with `R0 = 1`; `NotApplicable` when no such value lies in (0, 1).
#[no_mangle]
pub unsafe extern "C" fn sirsh_theta_star(p: *const SirshParams, out: *mut f64) -> SirshStatus {
    guard(|| {
        let v = theta_star(&get(p, "params")?.0)
            .map_err(|why| (SirshStatus::NotApplicable, format!("no threshold severity: {why:?}")))?;
        put(out, v, "out")
    })
}

/// Worst-case severity and case number (1 to 4). `theta_tilde` is NaN for
/// case 4. The severity stored in `p` is ignored.
#[no_mangle]
pub unsafe extern "C" fn sirsh_worst_theta(
    p: *const SirshParams,
    case_id: *mut i32,
    theta_tilde: *mut f64,
) -> SirshStatus {
    guard(|| {
        let (case, tt) = classify_case(&get(p, "params")?.0);
        let n = match case {
            CaseId::Case1FastEpidemic => 1,
            CaseId::Case2ModerateEpidemic => 2,
            CaseId::Case3SlowEpidemic => 3,
            CaseId::Case4NoEpidemic => 4,
        };
        put(case_id, n, "case_id")?;
        put(theta_tilde, tt.unwrap_or(f64::NAN), "theta_tilde")
    })
}

/// Predicted exit point and slow exit time for an entry at `s_entry`.
#[no_mangle]
pub unsafe extern "C" fn sirsh_entry_exit(
    p: *const SirshParams,
    s_entry: f64,
    s_exit: *mut f64,
    tau_exit: *mut f64,
) -> SirshStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        let s = entry_exit_point(p, s_entry).map_err(lib)?;
        let t = exit_time(p, s_entry).map_err(lib)?;
        put(s_exit, s, "s_exit")?;
        put(tau_exit, t, "tau_exit")
    })
}

/// Simulates an outbreak seeded with `total_infected` up to `t_max`.
/// Non-positive `rtol`/`atol` select the defaults.
#[no_mangle]
pub unsafe extern "C" fn sirsh_simulate(
    p: *const SirshParams,
    total_infected: f64,
    rtol: f64,
    atol: f64,
    t_max: f64,
    out: *mut *mut SirshTrajectory,
) -> SirshStatus {
    guard(|| {
        let p = &get(p, "params")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = IntegratorConfig::default().with_t_max(t_max);
        if rtol > 0.0 {
            cfg.rtol = rtol;
        }
        if atol > 0.0 {
            cfg.atol = atol;
        }
        let mut events = vec![EventSpec::slow_regime(p)];
        if r0(p) > 1.0 + WAVE_END_R0_MARGIN && p.theta() > 0.0 {
            events.push(EventSpec::wave_end(p, false).map_err(lib)?);
        }
        let traj = simulate_outbreak(p, total_infected, &cfg, &events).map_err(lib)?;
        let wave_end = traj.events_of(|k| *k == EventKind::WaveEnd).next().map(|e| e.t);
        out.write(Box::into_raw(Box::new(SirshTrajectory { traj, wave_end })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sirsh_trajectory_free(t: *mut SirshTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of stored points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sirsh_trajectory_len(t: *const SirshTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.traj.times().len())
}

/// Time, state and cost integral `Q = integral of H` at stored point `index`.
#[no_mangle]
pub unsafe extern "C" fn sirsh_trajectory_point(
    t: *const SirshTrajectory,
    index: usize,
    time: *mut f64,
    state: *mut SirshState,
    hosp_integral: *mut f64,
) -> SirshStatus {
    guard(|| {
        let tr = &get(t, "trajectory")?.traj;
        if index >= tr.times().len() {
            return Err((
                SirshStatus::NotFound,
                format!("index {index} out of range (len {})", tr.times().len()),
            ));
        }
        let x = tr.states()[index];
        put(time, tr.times()[index], "time")?;
        put(
            state,
            SirshState {
                s: x.s,
                i: x.i,
                c: x.c,
                h: x.h,
            },
            "state",
        )?;
        put(hosp_integral, tr.hosp_integral()[index], "hosp_integral")
    })
}

/// End time of the first wave, or `NotFound`.
#[no_mangle]
pub unsafe extern "C" fn sirsh_trajectory_wave_end(t: *const SirshTrajectory, out: *mut f64) -> SirshStatus {
    guard(|| {
        let w = get(t, "trajectory")?
            .wave_end
            .ok_or_else(|| (SirshStatus::NotFound, "first-wave end not reached".to_string()))?;
        put(out, w, "out")
    })
}

/// Interpolated state at time `at` inside the simulated horizon.
#[no_mangle]
pub unsafe extern "C" fn sirsh_trajectory_state_at(
    t: *const SirshTrajectory,
    at: f64,
    state: *mut SirshState,
) -> SirshStatus {
    guard(|| {
        let x = get(t, "trajectory")?
            .traj
            .state_at(at)
            .ok_or_else(|| (SirshStatus::NotFound, format!("t = {at} outside the horizon")))?;
        put(
            state,
            SirshState {
                s: x.s,
                i: x.i,
                c: x.c,
                h: x.h,
            },
            "state",
        )
    })
}
