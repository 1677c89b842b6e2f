//! Slow–fast structure: stability of the critical manifold `I = C = H = 0`
//! under the fast flow, the fast subsystem's constant of motion and final
//! size, and the entry–exit map describing delayed loss of stability.
//!
//! Entry–exit results apply to `gamma_i == gamma_c` only, where the model
//! reduces to `(S, T, H)` with `T = I + C`.

use crate::analysis::r0;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::roots::{find_root, Tolerance};
use crate::sim::dopri::{StepControl, Stepper};
use crate::sim::{IntegratorConfig, EVENT_T_TOL};
use rayon::prelude::*;

/// Half-width of the band around `S = 1/R0` classified as non-hyperbolic.
pub const NON_HYPERBOLIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Attracting,
    NonHyperbolic,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldClassification {
    pub s: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub verdict: Verdict,
}

/// Eigenvalues `(lambda1, lambda2, lambda3)` of the fast flow linearised at
/// `(s, 0, 0, 0)`, with `lambda2 <= lambda3`.
pub fn fast_eigenvalues(p: &ModelParams, s: f64) -> (f64, f64, f64) {
    let bs = p.beta() * s;
    let th = p.theta();
    let a = (1.0 - th) * bs - p.gamma_i();
    let d = th * bs - p.gamma_c();
    let trace = a + d;
    let det = p.gamma_i() * p.gamma_c() * (1.0 - s * r0(p));
    // (a - d)^2 + 4 bc is the discriminant written without cancellation
    let disc = ((a - d).powi(2) + 4.0 * th * (1.0 - th) * bs * bs).sqrt();
    let big = -0.5 * (-trace - trace.signum() * disc);
    let (l2, l3) = if big == 0.0 {
        (0.0, 0.0)
    } else {
        let other = det / big;
        (big.min(other), big.max(other))
    };
    (-p.gamma_h(), l2, l3)
}

pub fn classify_manifold(p: &ModelParams, s: f64) -> ManifoldClassification {
    let (lambda1, lambda2, lambda3) = fast_eigenvalues(p, s);
    let s_crit = 1.0 / r0(p);
    let verdict = if (s - s_crit).abs() <= NON_HYPERBOLIC_TOL {
        Verdict::NonHyperbolic
    } else if s < s_crit {
        Verdict::Attracting
    } else {
        Verdict::Saddle
    };
    ManifoldClassification {
        s,
        lambda1,
        lambda2,
        lambda3,
        verdict,
    }
}

fn require_equal_gammas(p: &ModelParams) -> Result<()> {
    if p.equal_gammas() {
        Ok(())
    } else {
        Err(Error::UnsupportedRegime {
            gamma_i: p.gamma_i(),
            gamma_c: p.gamma_c(),
        })
    }
}

/// `ln S - R0 (S + I + C)`, constant along fast-subsystem orbits.
pub fn conserved_gamma(p: &ModelParams, s: f64, i: f64, c: f64) -> Result<f64> {
    require_equal_gammas(p)?;
    if !(s > 0.0) {
        return Err(Error::NonPositiveSusceptible(s));
    }
    Ok(s.ln() - r0(p) * (s + i + c))
}

/// Susceptible fraction left when the fast subsystem's epidemic burns out.
pub fn s_infinity(p: &ModelParams, s0: f64, i0: f64, c0: f64) -> Result<f64> {
    require_equal_gammas(p)?;
    if !(s0 > 0.0 && s0 <= 1.0) {
        return Err(Error::NonPositiveSusceptible(s0));
    }
    if !(i0 + c0 > 0.0) {
        return Err(Error::NoEpidemicOrbit);
    }
    let r = r0(p);
    let n0 = s0 + i0 + c0;
    let ln_s0 = s0.ln();
    // h(x) = ln(x / S0) - R0 (x - N0) in v = ln x
    let h = |v: f64| v - ln_s0 - r * (v.exp() - n0);
    let lo = ln_s0 - r * n0 - 1.0;
    let hi = (1.0 / r).min(s0).ln();
    let v = find_root(h, lo, hi, Tolerance::residual(1e-13))?;
    Ok(v.exp())
}

fn check_entry(p: &ModelParams, s_entry: f64) -> Result<f64> {
    require_equal_gammas(p)?;
    let r = r0(p);
    if !(r > 1.0) {
        return Err(Error::NoEndemicEquilibrium { r0: r });
    }
    if !(s_entry > 0.0) {
        return Err(Error::NonPositiveSusceptible(s_entry));
    }
    if s_entry >= 1.0 / r {
        return Err(Error::NotInAttractingRegion {
            s_entry,
            s_critical: 1.0 / r,
        });
    }
    Ok(r)
}

/// `(1 - exp(-x)) / x`, continuous at 0.
fn phi(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Slow time at which the accumulated fast eigenvalue returns to zero.
///
/// With `y = R0 S - 1` and `A = R0 - 1` the condition is
/// `int_{y0}^{yE} y / (A - y) dy = 0`. Writing `A - yE = (A - y0) exp(-u)` and
/// dividing out the trivial root `u = 0` leaves `phi(u) = A / (A - y0)`, and
/// along the slow flow `u` is the elapsed slow time.
fn slow_exit_tau(p: &ModelParams, s_entry: f64) -> Result<f64> {
    let r = check_entry(p, s_entry)?;
    let target = (r - 1.0) / (r * (1.0 - s_entry));
    let f = |u: f64| phi(u) - target;
    // phi(u) <= 1 / u bounds the root
    Ok(find_root(f, 0.0, 1.0 / target, Tolerance::width(0.0))?)
}

/// Predicted susceptible fraction at which an orbit entering the slow regime
/// at `s_entry < 1/R0` leaves it again.
pub fn entry_exit_point(p: &ModelParams, s_entry: f64) -> Result<f64> {
    let tau = slow_exit_tau(p, s_entry)?;
    Ok(slow_flow_s(s_entry, tau))
}

/// Predicted slow time `tau_E` spent in the slow regime.
pub fn exit_time(p: &ModelParams, s_entry: f64) -> Result<f64> {
    slow_exit_tau(p, s_entry)
}

/// Slow-flow susceptible fraction `1 - (1 - S0) exp(-tau)`.
pub fn slow_flow_s(s0: f64, tau: f64) -> f64 {
    1.0 - (1.0 - s0) * (-tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryExitResult {
    pub s_entry: f64,
    pub s_exit_predicted: f64,
    /// Slow time `tau = eps t`.
    pub tau_exit_predicted: f64,
    pub s_exit_simulated: Option<f64>,
    pub tau_exit_simulated: Option<f64>,
    pub abs_err_point: Option<f64>,
    pub abs_err_time: Option<f64>,
}

impl EntryExitResult {
    pub fn t_exit_predicted(&self, eps: f64) -> f64 {
        self.tau_exit_predicted / eps
    }
}

/// Integrator settings for [`simulate_entry_exit`].
pub fn entry_exit_config() -> IntegratorConfig {
    IntegratorConfig {
        rtol: 1e-11,
        atol: 1e-12,
        h_init: 1e-3,
        h_max: 1.0,
        t_max: 1e5,
        max_steps: 5_000_000,
    }
}

/// Direct integration from `(s_entry, t0_fast, h0)` until `T` first returns
/// to `t0_fast` from below with `S > 1/R0`.
pub fn simulate_entry_exit(p: &ModelParams, s_entry: f64, t0_fast: f64, h0: f64) -> Result<EntryExitResult> {
    simulate_entry_exit_with(p, s_entry, t0_fast, h0, &entry_exit_config())
}

/// [`simulate_entry_exit`] with explicit integrator settings.
///
/// The reduced system is integrated in `(S, ln T, ln H)`, which keeps full
/// relative accuracy while `T` and `H` sit many orders of magnitude below
/// their seeds.
pub fn simulate_entry_exit_with(
    p: &ModelParams,
    s_entry: f64,
    t0_fast: f64,
    h0: f64,
    cfg: &IntegratorConfig,
) -> Result<EntryExitResult> {
    let r = check_entry(p, s_entry)?;
    cfg.validate()?;
    if !(t0_fast > 0.0 && h0 > 0.0 && s_entry + t0_fast + h0 <= 1.0) {
        return Err(Error::OutsideSimplex {
            s: s_entry,
            i: t0_fast,
            c: 0.0,
            h: h0,
        });
    }
    let s_exit_predicted = entry_exit_point(p, s_entry)?;
    let tau_exit_predicted = exit_time(p, s_entry)?;

    let (b, g, th, gh, eps) = (p.beta(), p.gamma_i(), p.theta(), p.gamma_h(), p.eps());
    let rhs = move |_t: f64, y: &[f64; 3]| {
        let (s, t_inf, h) = (y[0], y[1].exp(), y[2].exp());
        [
            -b * s * t_inf + eps * (1.0 - s - t_inf - h),
            b * s - g,
            g * th * (y[1] - y[2]).exp() - gh,
        ]
    };
    let ctl = StepControl {
        rtol: cfg.rtol,
        atol: cfg.atol,
        h_init: cfg.h_init,
        h_max: cfg.h_max,
        max_steps: cfg.max_steps,
    };
    let ln_t0 = t0_fast.ln();
    let s_crit = 1.0 / r;
    let mut st = Stepper::new(rhs, 0.0, [s_entry, ln_t0, h0.ln()], ctl);
    let tol = Tolerance {
        f_tol: 0.0,
        x_tol: EVENT_T_TOL,
        max_iter: 200,
    };

    let mut exit = None;
    while st.t() < cfg.t_max {
        let step = st.step(cfg.t_max)?;
        let (g0, g1) = (step.start()[1] - ln_t0, step.end()[1] - ln_t0);
        if g0 < 0.0 && g1 >= 0.0 {
            let t = find_root(|t| step.eval_component(t, 1) - ln_t0, step.t0, step.t1(), tol)?;
            let s = step.eval_component(t, 0);
            if s > s_crit {
                exit = Some((t, s));
                break;
            }
        }
    }

    let (s_sim, tau_sim) = match exit {
        Some((t, s)) => (Some(s), Some(eps * t)),
        None => {
            log::warn!("exit not detected for s_entry = {s_entry} within t_max = {}", cfg.t_max);
            (None, None)
        }
    };
    Ok(EntryExitResult {
        s_entry,
        s_exit_predicted,
        tau_exit_predicted,
        s_exit_simulated: s_sim,
        tau_exit_simulated: tau_sim,
        abs_err_point: s_sim.map(|s| (s - s_exit_predicted).abs()),
        abs_err_time: tau_sim.map(|t| (t - tau_exit_predicted).abs()),
    })
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    b
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Runs [`simulate_entry_exit`] over `grid` concurrently; results come back
/// sorted by entry point.
pub fn entry_exit_sweep(p: &ModelParams, grid: &[f64], t0_fast: f64, h0: f64) -> Result<Vec<EntryExitResult>> {
    let mut pts = grid.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.par_iter()
        .map(|&s| {
            simulate_entry_exit(p, s, t0_fast, h0).map_err(|e| Error::AtGridPoint {
                point: s,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Largest point and time errors over a sweep, ignoring undetected exits.
pub fn max_errors(results: &[EntryExitResult]) -> (f64, f64) {
    results.iter().fold((0.0f64, 0.0f64), |(ep, et), r| {
        (
            ep.max(r.abs_err_point.unwrap_or(0.0)),
            et.max(r.abs_err_time.unwrap_or(0.0)),
        )
    })
}
