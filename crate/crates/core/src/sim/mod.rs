//! Time integration of the full model with event detection and cost
//! accumulation.
//!
//! The integrated state is `(S, I, C, H, Q)` with `Q' = H`, so the running
//! hospitalization cost `K = k Q` is controlled by the same error estimate as
//! the compartments.

pub mod dopri;

use crate::analysis::{endemic_equilibrium, r0, EeMode};
use crate::error::{Error, Result};
use crate::model::{derivative, make_initial_conditions, ModelParams, State};
use crate::roots::{find_root, Tolerance};
use dopri::{DenseStep, StepControl, Stepper};

/// Time resolution of event location on dense output.
pub const EVENT_T_TOL: f64 = 1e-10;

/// Clamp band, in multiples of `atol`, below the simplex boundary.
pub const CLAMP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Horizon in fast time.
    pub t_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: 1.0,
            t_max: 3000.0,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.atol > 0.0 && self.atol <= self.rtol && self.rtol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < atol <= rtol < 1 (atol = {}, rtol = {})",
                self.atol, self.rtol
            )));
        }
        if !(self.h_init > 0.0 && self.h_max >= self.h_init) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < h_init <= h_max (h_init = {}, h_max = {})",
                self.h_init, self.h_max
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_max = {} must be positive", self.t_max)));
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            h_init: self.h_init,
            h_max: self.h_max,
            max_steps: self.max_steps,
        }
    }
}

/// Events the integrator watches for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventSpec {
    /// Records every crossing of `S = level`.
    SCrossing { level: f64 },
    /// Records entry into (`max(I, C, H)` falling below `threshold` after
    /// having been above it) and exit from (rising back above it with
    /// `S > s_critical`) the slow regime near the critical manifold.
    SlowRegime { threshold: f64, s_critical: f64 },
    /// First `S = s2` with `I <= i2` and `C <= c2`.
    WaveEnd { s2: f64, i2: f64, c2: f64, terminal: bool },
}

impl EventSpec {
    /// Slow-regime detector with threshold `10 eps^2` and the manifold's
    /// stability switch at `S = 1 / R0`.
    pub fn slow_regime(p: &ModelParams) -> Self {
        EventSpec::SlowRegime {
            threshold: 10.0 * p.eps() * p.eps(),
            s_critical: 1.0 / r0(p),
        }
    }

    /// First-wave end detector built from the exact endemic equilibrium.
    pub fn wave_end(p: &ModelParams, terminal: bool) -> Result<Self> {
        let ee = wave_end_reference(p)?;
        Ok(EventSpec::WaveEnd {
            s2: ee.s,
            i2: ee.i,
            c2: ee.c,
            terminal,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    WaveEnd,
    SCrossUp(f64),
    SCrossDown(f64),
    SlowEntry,
    SlowExit,
    ReachedHorizon,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::WaveEnd => "wave_end",
            EventKind::SCrossUp(_) => "s_cross_up",
            EventKind::SCrossDown(_) => "s_cross_down",
            EventKind::SlowEntry => "slow_entry",
            EventKind::SlowExit => "slow_exit",
            EventKind::ReachedHorizon => "horizon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub state: State,
    /// `Q = integral of H` at the event.
    pub hosp_integral: f64,
}

/// Numerical solution with its dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: ModelParams,
    times: Vec<f64>,
    states: Vec<State>,
    hosp_integral: Vec<f64>,
    steps: Vec<DenseStep<5>>,
    events: Vec<Event>,
}

impl Trajectory {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    /// Accepted step end points, starting with the initial time.
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn states(&self) -> &[State] {
        &self.states
    }
    /// Running `integral of H` at each entry of [`Trajectory::times`].
    pub fn hosp_integral(&self) -> &[f64] {
        &self.hosp_integral
    }
    pub fn steps(&self) -> &[DenseStep<5>] {
        &self.steps
    }
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn events_of(&self, pred: impl Fn(&EventKind) -> bool) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| pred(&e.kind))
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has an initial point")
    }

    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory has an initial point")
    }

    fn step_index(&self, t: f64) -> Option<usize> {
        if self.steps.is_empty() || t < self.times[0] || t > self.t_end() {
            return None;
        }
        let idx = self.times[1..].partition_point(|&tk| tk < t);
        Some(idx.min(self.steps.len() - 1))
    }

    /// Interpolated `(S, I, C, H, Q)` at time `t` inside the horizon.
    pub fn sample(&self, t: f64) -> Option<[f64; 5]> {
        if self.steps.is_empty() && t == self.times[0] {
            let x = self.states[0];
            return Some([x.s, x.i, x.c, x.h, self.hosp_integral[0]]);
        }
        self.step_index(t).map(|k| self.steps[k].eval(t))
    }

    pub fn state_at(&self, t: f64) -> Option<State> {
        self.sample(t).map(|y| State::from_array([y[0], y[1], y[2], y[3]]))
    }
}

fn split(y: &[f64; 5]) -> State {
    State::from_array([y[0], y[1], y[2], y[3]])
}

/// Locates a sign change of `g` along one dense step.
fn locate<G: Fn(&[f64; 5]) -> f64>(step: &DenseStep<5>, g: &G) -> Option<f64> {
    let tol = Tolerance {
        f_tol: 0.0,
        x_tol: EVENT_T_TOL,
        max_iter: 200,
    };
    find_root(|t| g(&step.eval(t)), step.t0, step.t1(), tol).ok()
}

fn max_sick(y: &[f64; 5]) -> f64 {
    y[1].max(y[2]).max(y[3])
}

/// Scans one step for a `WaveEnd` condition.
fn wave_end_in_step(step: &DenseStep<5>, s2: f64, i2: f64, c2: f64) -> Option<f64> {
    let g = |y: &[f64; 5]| y[0] - s2;
    let (g0, g1) = (g(&step.start()), g(&step.end()));
    if g0 == 0.0 || g0.signum() == g1.signum() {
        return None;
    }
    let t = locate(step, &g)?;
    let y = step.eval(t);
    (y[1] <= i2 && y[2] <= c2).then_some(t)
}

struct Watcher {
    spec: EventSpec,
    /// Slow regime: max(I, C, H) has been above the threshold since the
    /// last entry (or since the start).
    armed: bool,
    in_slow: bool,
    done: bool,
}

impl Watcher {
    fn new(spec: EventSpec, y0: &[f64; 5]) -> Self {
        let armed = match spec {
            EventSpec::SlowRegime { threshold, .. } => max_sick(y0) > threshold,
            _ => false,
        };
        Self {
            spec,
            armed,
            in_slow: false,
            done: false,
        }
    }

    /// Appends events found in `step`; returns the time of a terminal event.
    fn scan(&mut self, step: &DenseStep<5>, out: &mut Vec<(f64, EventKind)>) -> Option<f64> {
        if self.done {
            return None;
        }
        let (y0, y1) = (step.start(), step.end());
        match self.spec {
            EventSpec::SCrossing { level } => {
                let g = |y: &[f64; 5]| y[0] - level;
                let (g0, g1) = (g(&y0), g(&y1));
                if g0 != 0.0 && g0.signum() != g1.signum() {
                    if let Some(t) = locate(step, &g) {
                        let kind = if g1 > g0 {
                            EventKind::SCrossUp(level)
                        } else {
                            EventKind::SCrossDown(level)
                        };
                        out.push((t, kind));
                    }
                }
                None
            }
            EventSpec::SlowRegime { threshold, s_critical } => {
                let g = |y: &[f64; 5]| max_sick(y) - threshold;
                let (g0, g1) = (g(&y0), g(&y1));
                if g0 > 0.0 && g1 <= 0.0 {
                    if let Some(t) = locate(step, &g) {
                        if self.armed && !self.in_slow {
                            out.push((t, EventKind::SlowEntry));
                            self.in_slow = true;
                        }
                        self.armed = false;
                    }
                } else if g0 <= 0.0 && g1 > 0.0 {
                    if let Some(t) = locate(step, &g) {
                        if self.in_slow {
                            if step.eval(t)[0] > s_critical {
                                out.push((t, EventKind::SlowExit));
                                self.in_slow = false;
                                self.armed = true;
                            }
                        } else {
                            self.armed = true;
                        }
                    }
                }
                None
            }
            EventSpec::WaveEnd { s2, i2, c2, terminal } => {
                let t = wave_end_in_step(step, s2, i2, c2)?;
                out.push((t, EventKind::WaveEnd));
                self.done = true;
                terminal.then_some(t)
            }
        }
    }
}

/// Integrates the full model from `x0` over `[0, cfg.t_max]`.
pub fn integrate(p: &ModelParams, x0: &State, cfg: &IntegratorConfig, events: &[EventSpec]) -> Result<Trajectory> {
    cfg.validate()?;
    if !x0.in_simplex(crate::model::SIMPLEX_TOL) {
        return Err(Error::OutsideSimplex {
            s: x0.s,
            i: x0.i,
            c: x0.c,
            h: x0.h,
        });
    }
    let params = *p;
    let rhs = move |_t: f64, y: &[f64; 5]| {
        let d = derivative(&params, &split(y));
        [d.s, d.i, d.c, d.h, y[3]]
    };
    let y0 = [x0.s, x0.i, x0.c, x0.h, 0.0];
    let mut stepper = Stepper::new(rhs, 0.0, y0, cfg.step_control());
    let mut watchers: Vec<Watcher> = events.iter().map(|s| Watcher::new(*s, &y0)).collect();
    let band = CLAMP_FACTOR * cfg.atol;

    let mut traj = Trajectory {
        params: *p,
        times: vec![0.0],
        states: vec![*x0],
        hosp_integral: vec![0.0],
        steps: Vec::new(),
        events: Vec::new(),
    };
    let mut found: Vec<(f64, EventKind)> = Vec::new();
    let mut terminal_at: Option<f64> = None;

    while stepper.t() < cfg.t_max {
        let step = stepper.step(cfg.t_max)?;
        let t1 = stepper.t();
        let mut y = *stepper.y();

        let mut clamped = false;
        for v in y.iter_mut().take(4) {
            if *v < 0.0 {
                if *v < -band {
                    return Err(Error::DomainViolation { t: t1 });
                }
                *v = 0.0;
                clamped = true;
            }
        }
        if clamped {
            stepper.reset_state(y);
        }

        found.clear();
        for w in watchers.iter_mut() {
            if let Some(t) = w.scan(&step, &mut found) {
                terminal_at = Some(terminal_at.map_or(t, |old: f64| old.min(t)));
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(t, kind) in &found {
            if terminal_at.is_some_and(|tt| t > tt) {
                continue;
            }
            let ye = step.eval(t);
            traj.events.push(Event {
                t,
                kind,
                state: split(&ye),
                hosp_integral: ye[4],
            });
        }

        traj.steps.push(step);
        if let Some(t) = terminal_at {
            let ye = step.eval(t);
            traj.times.push(t);
            traj.states.push(split(&ye));
            traj.hosp_integral.push(ye[4]);
            return Ok(traj);
        }
        traj.times.push(t1);
        traj.states.push(split(&y));
        traj.hosp_integral.push(y[4]);
    }

    let last = traj.final_state();
    traj.events.push(Event {
        t: traj.t_end(),
        kind: EventKind::ReachedHorizon,
        state: last,
        hosp_integral: *traj.hosp_integral.last().unwrap(),
    });
    Ok(traj)
}

/// Simulates an outbreak seeded with `total_infected`.
pub fn simulate_outbreak(
    p: &ModelParams,
    total_infected: f64,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<Trajectory> {
    let x0 = make_initial_conditions(p, total_infected)?;
    integrate(p, &x0, cfg, events)
}

/// `R0` margin below which the first-wave end is not defined.
pub const WAVE_END_R0_MARGIN: f64 = 1e-12;

fn wave_end_reference(p: &ModelParams) -> Result<State> {
    let r = r0(p);
    if r <= 1.0 + WAVE_END_R0_MARGIN {
        return Err(Error::NotApplicable(format!("first-wave end needs R0 > 1 (R0 = {r})")));
    }
    endemic_equilibrium(p, EeMode::Exact)
}

/// End of the first wave: the first `t` with `S = S2`, `I <= I2`, `C <= C2`,
/// located on the stored dense output.
pub fn detect_wave_end(traj: &Trajectory, p: &ModelParams) -> Result<Option<f64>> {
    let ee = wave_end_reference(p)?;
    Ok(traj.steps.iter().find_map(|st| wave_end_in_step(st, ee.s, ee.i, ee.c)))
}

/// Running cost `K = k * integral of H` at every stored time.
pub fn accumulate_cost(traj: &Trajectory, k: f64) -> Vec<f64> {
    traj.hosp_integral.iter().map(|q| k * q).collect()
}

/// Cost at an arbitrary time inside the horizon.
pub fn cost_at(traj: &Trajectory, k: f64, t: f64) -> Option<f64> {
    traj.sample(t).map(|y| k * y[4])
}
