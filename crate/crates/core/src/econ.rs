//! Hospitalization cost as a function of disease severity `theta`.
//!
//! At the endemic equilibrium the hospitalized fraction is proportional to
//! `f(theta) = theta (1 - 1/R0(theta))`; its maximiser `theta_tilde` is the
//! analytic worst case. The empirical counterpart simulates one outbreak per
//! grid value and compares the cost at the end of the first wave.

use crate::analysis::{r0, theta_star};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{simulate_outbreak, EventKind, EventSpec, IntegratorConfig};
use rayon::prelude::*;
use std::fmt;

/// Rows with `R0` in `(1, 1 + NEAR_THRESHOLD]` are skipped by the sweep.
pub const NEAR_THRESHOLD: f64 = 1e-6;

/// Relative cost gap below which the analytic worst case is accepted.
pub const PRACTICAL_MATCH_GAP: f64 = 0.05;

pub const DEFAULT_COST_RATE: f64 = 1.0;
pub const DEFAULT_INITIAL_INFECTED: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    /// `beta >= gamma_c^2 / gamma_i`: worst at `theta = 1`.
    Case1FastEpidemic,
    /// `gamma_c <= beta < gamma_c^2 / gamma_i`.
    Case2ModerateEpidemic,
    /// `gamma_i < beta < gamma_c`: worst below `theta*`.
    Case3SlowEpidemic,
    /// `beta <= gamma_i`.
    Case4NoEpidemic,
}

impl CaseId {
    pub fn number(&self) -> u8 {
        match self {
            CaseId::Case1FastEpidemic => 1,
            CaseId::Case2ModerateEpidemic => 2,
            CaseId::Case3SlowEpidemic => 3,
            CaseId::Case4NoEpidemic => 4,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CaseId::Case1FastEpidemic => "case1_fast_epidemic",
            CaseId::Case2ModerateEpidemic => "case2_moderate_epidemic",
            CaseId::Case3SlowEpidemic => "case3_slow_epidemic",
            CaseId::Case4NoEpidemic => "case4_no_epidemic",
        };
        f.write_str(name)
    }
}

/// `R0` as a function of severity, other rates taken from `p`.
fn r0_at(p: &ModelParams, theta: f64) -> f64 {
    p.beta() * ((1.0 - theta) / p.gamma_i() + theta / p.gamma_c())
}

/// `theta (1 - 1/R0(theta))`, extended by 0 where `R0(theta) <= 1`.
pub fn f_theta(p: &ModelParams, theta: f64) -> f64 {
    let r = r0_at(p, theta);
    if r <= 1.0 {
        0.0
    } else {
        theta * (1.0 - 1.0 / r)
    }
}

/// Interior maximiser of `f` when it exists.
fn tilde_formula(p: &ModelParams) -> f64 {
    let (b, gi, gc) = (p.beta(), p.gamma_i(), p.gamma_c());
    gc / (gc - gi) * (1.0 - (gi / b).sqrt())
}

/// Case classification and analytic worst severity.
pub fn classify_case(p: &ModelParams) -> (CaseId, Option<f64>) {
    let (b, gi, gc) = (p.beta(), p.gamma_i(), p.gamma_c());
    if gi >= gc {
        // R0 is nondecreasing in theta: the worst case sits at theta = 1
        return if b / gc > 1.0 {
            (CaseId::Case1FastEpidemic, Some(1.0))
        } else {
            (CaseId::Case4NoEpidemic, None)
        };
    }
    if b >= gc * gc / gi {
        (CaseId::Case1FastEpidemic, Some(1.0))
    } else if b >= gc {
        (CaseId::Case2ModerateEpidemic, Some(tilde_formula(p)))
    } else if b > gi {
        (CaseId::Case3SlowEpidemic, Some(tilde_formula(p)))
    } else {
        (CaseId::Case4NoEpidemic, None)
    }
}

/// Cost at the end of the first wave for each severity on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowStatus {
    Ok,
    /// `R0 <= 1`.
    NoEpidemic,
    /// `R0` within [`NEAR_THRESHOLD`] of 1.
    NearThreshold,
    /// `theta = 0`: nobody is ever hospitalized.
    ZeroSeverity,
    /// The first-wave end was not reached within the horizon.
    NoWaveEnd,
    /// The integrator failed.
    Failed,
}

impl RowStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::NoEpidemic => "skipped_no_epidemic",
            RowStatus::NearThreshold => "skipped_near_threshold",
            RowStatus::ZeroSeverity => "skipped_zero_severity",
            RowStatus::NoWaveEnd => "no_wave_end",
            RowStatus::Failed => "failed",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            RowStatus::Ok,
            RowStatus::NoEpidemic,
            RowStatus::NearThreshold,
            RowStatus::ZeroSeverity,
            RowStatus::NoWaveEnd,
            RowStatus::Failed,
        ]
        .into_iter()
        .find(|r| r.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub r0: f64,
    pub t_f: Option<f64>,
    pub k_tf: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalResult {
    pub rows: Vec<SweepRow>,
    /// Smallest spacing of the grid, if it has two or more points.
    pub grid_step: Option<f64>,
    pub argmax_theta: Option<f64>,
    pub k_at_argmax: Option<f64>,
    pub k_at_theta_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseReport {
    pub case_id: CaseId,
    pub theta_tilde: Option<f64>,
    pub theta_star: Option<f64>,
    /// `(theta, f(theta))` samples.
    pub f_curve: Vec<(f64, f64)>,
    pub empirical: Option<EmpiricalResult>,
}

/// Points at which [`WorstCaseReport::f_curve`] is sampled.
pub const F_CURVE_POINTS: usize = 101;

/// Analytic part of the worst-case report; `p.theta()` is ignored.
pub fn worst_theta_analytic(p: &ModelParams) -> WorstCaseReport {
    let (case_id, theta_tilde) = classify_case(p);
    let f_curve = (0..F_CURVE_POINTS)
        .map(|k| {
            let th = k as f64 / (F_CURVE_POINTS - 1) as f64;
            (th, f_theta(p, th))
        })
        .collect();
    WorstCaseReport {
        case_id,
        theta_tilde,
        theta_star: theta_star(p).ok(),
        f_curve,
        empirical: None,
    }
}

/// 51 severities from 0 to 1 in steps of 0.02.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 * 0.02).collect()
}

/// Grid from `a` to `b` (inclusive up to rounding) with spacing `step`.
pub fn stepped_grid(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidConfig(format!("bad grid {a}:{b}:{step}")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

/// Cost at the end of the first wave for one severity.
pub fn cost_at_wave_end(p: &ModelParams, total_infected: f64, k: f64, cfg: &IntegratorConfig) -> SweepRow {
    let theta = p.theta();
    let r = r0(p);
    let row = |t_f, k_tf, status| SweepRow {
        theta,
        r0: r,
        t_f,
        k_tf,
        status,
    };
    if r <= 1.0 {
        return row(None, None, RowStatus::NoEpidemic);
    }
    if r <= 1.0 + NEAR_THRESHOLD {
        return row(None, None, RowStatus::NearThreshold);
    }
    if theta == 0.0 {
        return row(None, None, RowStatus::ZeroSeverity);
    }
    let run = EventSpec::wave_end(p, true).and_then(|ev| simulate_outbreak(p, total_infected, cfg, &[ev]));
    match run {
        Ok(traj) => match traj.events_of(|e| *e == EventKind::WaveEnd).next() {
            Some(ev) => row(Some(ev.t), Some(k * ev.hosp_integral), RowStatus::Ok),
            None => row(None, None, RowStatus::NoWaveEnd),
        },
        Err(e) => {
            log::warn!("theta = {theta}: {e}");
            row(None, None, RowStatus::Failed)
        }
    }
}

/// Simulated sweep over `theta_grid`; `p.theta()` is ignored.
pub fn worst_theta_empirical(
    p: &ModelParams,
    theta_grid: &[f64],
    total_infected: f64,
    k: f64,
    cfg: &IntegratorConfig,
) -> Result<EmpiricalResult> {
    let mut grid = theta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let params: Vec<ModelParams> = grid.iter().map(|&th| p.with_theta(th)).collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = params
        .par_iter()
        .map(|q| cost_at_wave_end(q, total_infected, k, cfg))
        .collect();

    let mut best: Option<(f64, f64)> = None;
    for r in &rows {
        if let Some(kv) = r.k_tf {
            if best.is_none_or(|(_, bk)| kv > bk) {
                best = Some((r.theta, kv));
            }
        }
    }
    let grid_step = grid.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
    let k_at_theta_tilde = match classify_case(p).1 {
        Some(tt) => cost_at_wave_end(&p.with_theta(tt)?, total_infected, k, cfg).k_tf,
        None => None,
    };
    Ok(EmpiricalResult {
        rows,
        grid_step,
        argmax_theta: best.map(|b| b.0),
        k_at_argmax: best.map(|b| b.1),
        k_at_theta_tilde,
    })
}

/// Analytic report with the empirical sweep attached.
pub fn worst_theta(
    p: &ModelParams,
    theta_grid: &[f64],
    total_infected: f64,
    k: f64,
    cfg: &IntegratorConfig,
) -> Result<WorstCaseReport> {
    let mut rep = worst_theta_analytic(p);
    rep.empirical = Some(worst_theta_empirical(p, theta_grid, total_infected, k, cfg)?);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub theta_tilde: f64,
    pub theta_argmax: f64,
    pub theta_gap: f64,
    pub k_at_argmax: f64,
    pub k_at_theta_tilde: f64,
    /// `|K(argmax) - K(theta_tilde)| / K(argmax)`.
    pub k_gap_rel: f64,
    pub practical_match: bool,
}

/// Gap between the analytic and empirical worst cases.
pub fn compare(report: &WorstCaseReport) -> Result<Comparison> {
    let missing = |what: &str| Error::NotApplicable(format!("comparison needs {what}"));
    let theta_tilde = report.theta_tilde.ok_or_else(|| missing("an analytic worst case"))?;
    let emp = report.empirical.as_ref().ok_or_else(|| missing("an empirical sweep"))?;
    let theta_argmax = emp.argmax_theta.ok_or_else(|| missing("an empirical maximum"))?;
    let k_at_argmax = emp.k_at_argmax.ok_or_else(|| missing("an empirical maximum"))?;
    let k_at_theta_tilde = emp.k_at_theta_tilde.ok_or_else(|| missing("the cost at theta_tilde"))?;
    let k_gap_rel = if k_at_argmax == k_at_theta_tilde {
        0.0
    } else {
        (k_at_argmax - k_at_theta_tilde).abs() / k_at_argmax.abs()
    };
    Ok(Comparison {
        theta_tilde,
        theta_argmax,
        theta_gap: (theta_argmax - theta_tilde).abs(),
        k_at_argmax,
        k_at_theta_tilde,
        k_gap_rel,
        practical_match: k_gap_rel < PRACTICAL_MATCH_GAP,
    })
}
