//! CSV emission and reloading. Floats are written with 17 significant digits
//! so every value reloads bit-for-bit.

use crate::analysis::{BifurcationBranch, BranchKind, BranchPoint};
use crate::econ::{RowStatus, SweepRow};
use crate::model::State;
use crate::sim::Trajectory;
use crate::slowfast::EntryExitResult;
use std::io;
use std::path::Path;

pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "S", "I", "C", "H", "R", "K", "event"];
pub const SWEEP_HEADER: [&str; 5] = ["theta", "r0", "t_F", "K_tF", "status"];
pub const EXIT_POINT_HEADER: [&str; 4] = ["s_entry", "s_exit_predicted", "s_exit_simulated", "abs_err_point"];
pub const EXIT_TIME_HEADER: [&str; 4] = ["s_entry", "tau_exit_predicted", "tau_exit_simulated", "abs_err_time"];
pub const BIFURCATION_HEADER: [&str; 10] = [
    "branch", "beta", "S", "I", "C", "H", "I_scaled", "C_scaled", "H_scaled", "stable",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn parse_f64(s: &str) -> io::Result<f64> {
    s.parse().map_err(|e| bad(format!("`{s}`: {e}")))
}

fn parse_opt(s: &str) -> io::Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

fn write_rows<const W: usize>(
    path: &Path,
    header: [&str; W],
    rows: impl Iterator<Item = [String; W]>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()
}

fn read_rows<const W: usize>(path: &Path, header: [&str; W]) -> io::Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let got = r.headers()?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(bad(format!("unexpected header in {}: {got:?}", path.display())));
    }
    r.records().map(|rec| rec.map_err(io::Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: State,
    pub k: f64,
    pub event: Option<String>,
}

/// Accepted steps interleaved with event rows in time order.
pub fn trajectory_rows(traj: &Trajectory, k: f64) -> Vec<TrajectoryRow> {
    let mut rows = Vec::with_capacity(traj.times().len() + traj.events().len());
    let mut events = traj.events().iter().peekable();
    for ((t, x), q) in traj.times().iter().zip(traj.states()).zip(traj.hosp_integral()) {
        while let Some(e) = events.next_if(|e| e.t < *t) {
            rows.push(event_row(e, k));
        }
        rows.push(TrajectoryRow {
            t: *t,
            state: *x,
            k: k * q,
            event: None,
        });
    }
    rows.extend(events.map(|e| event_row(e, k)));
    rows
}

fn event_row(e: &crate::sim::Event, k: f64) -> TrajectoryRow {
    TrajectoryRow {
        t: e.t,
        state: e.state,
        k: k * e.hosp_integral,
        event: Some(e.kind.label().to_string()),
    }
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> io::Result<()> {
    write_rows(
        path,
        TRAJECTORY_HEADER,
        rows.iter().map(|r| {
            let x = &r.state;
            [
                fmt_f64(r.t),
                fmt_f64(x.s),
                fmt_f64(x.i),
                fmt_f64(x.c),
                fmt_f64(x.h),
                fmt_f64(x.r()),
                fmt_f64(r.k),
                r.event.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn read_trajectory_csv(path: &Path) -> io::Result<Vec<TrajectoryRow>> {
    read_rows(path, TRAJECTORY_HEADER)?
        .iter()
        .map(|rec| {
            let f = |i: usize| parse_f64(&rec[i]);
            Ok(TrajectoryRow {
                t: f(0)?,
                state: State::from_array([f(1)?, f(2)?, f(3)?, f(4)?]),
                k: f(6)?,
                event: (!rec[7].is_empty()).then(|| rec[7].to_string()),
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> io::Result<()> {
    write_rows(
        path,
        SWEEP_HEADER,
        rows.iter().map(|r| {
            [
                fmt_f64(r.theta),
                fmt_f64(r.r0),
                fmt_opt(r.t_f),
                fmt_opt(r.k_tf),
                r.status.label().to_string(),
            ]
        }),
    )
}

pub fn read_sweep_csv(path: &Path) -> io::Result<Vec<SweepRow>> {
    read_rows(path, SWEEP_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SweepRow {
                theta: parse_f64(&rec[0])?,
                r0: parse_f64(&rec[1])?,
                t_f: parse_opt(&rec[2])?,
                k_tf: parse_opt(&rec[3])?,
                status: RowStatus::from_label(&rec[4]).ok_or_else(|| bad(format!("status `{}`", &rec[4])))?,
            })
        })
        .collect()
}

/// Writes the exit-point and exit-time tables.
pub fn write_entry_exit_csv(points: &Path, times: &Path, results: &[EntryExitResult]) -> io::Result<()> {
    write_rows(
        points,
        EXIT_POINT_HEADER,
        results.iter().map(|r| {
            [
                fmt_f64(r.s_entry),
                fmt_f64(r.s_exit_predicted),
                fmt_opt(r.s_exit_simulated),
                fmt_opt(r.abs_err_point),
            ]
        }),
    )?;
    write_rows(
        times,
        EXIT_TIME_HEADER,
        results.iter().map(|r| {
            [
                fmt_f64(r.s_entry),
                fmt_f64(r.tau_exit_predicted),
                fmt_opt(r.tau_exit_simulated),
                fmt_opt(r.abs_err_time),
            ]
        }),
    )
}

pub fn read_entry_exit_csv(points: &Path, times: &Path) -> io::Result<Vec<EntryExitResult>> {
    let p = read_rows(points, EXIT_POINT_HEADER)?;
    let t = read_rows(times, EXIT_TIME_HEADER)?;
    if p.len() != t.len() {
        return Err(bad("exit point and exit time tables differ in length"));
    }
    p.iter()
        .zip(&t)
        .map(|(a, b)| {
            if a[0] != b[0] {
                return Err(bad(format!("entry points differ: {} vs {}", &a[0], &b[0])));
            }
            Ok(EntryExitResult {
                s_entry: parse_f64(&a[0])?,
                s_exit_predicted: parse_f64(&a[1])?,
                s_exit_simulated: parse_opt(&a[2])?,
                abs_err_point: parse_opt(&a[3])?,
                tau_exit_predicted: parse_f64(&b[1])?,
                tau_exit_simulated: parse_opt(&b[2])?,
                abs_err_time: parse_opt(&b[3])?,
            })
        })
        .collect()
}

fn branch_label(k: BranchKind) -> &'static str {
    match k {
        BranchKind::Dfe => "dfe",
        BranchKind::Ee => "ee",
    }
}

pub fn write_bifurcation_csv(path: &Path, branches: &[BifurcationBranch]) -> io::Result<()> {
    let rows = branches.iter().flat_map(|b| {
        b.points.iter().map(move |pt| {
            let x = &pt.state;
            let sc = pt.scaled.map_or([None; 3], |s| s.map(Some));
            [
                branch_label(b.kind).to_string(),
                fmt_f64(pt.beta),
                fmt_f64(x.s),
                fmt_f64(x.i),
                fmt_f64(x.c),
                fmt_f64(x.h),
                fmt_opt(sc[0]),
                fmt_opt(sc[1]),
                fmt_opt(sc[2]),
                pt.stable.to_string(),
            ]
        })
    });
    write_rows(path, BIFURCATION_HEADER, rows)
}

pub fn read_bifurcation_csv(path: &Path) -> io::Result<Vec<BifurcationBranch>> {
    let mut out: Vec<BifurcationBranch> = Vec::new();
    for rec in read_rows(path, BIFURCATION_HEADER)? {
        let kind = match &rec[0] {
            "dfe" => BranchKind::Dfe,
            "ee" => BranchKind::Ee,
            other => return Err(bad(format!("branch `{other}`"))),
        };
        let f = |i: usize| parse_f64(&rec[i]);
        let scaled = match (parse_opt(&rec[6])?, parse_opt(&rec[7])?, parse_opt(&rec[8])?) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let point = BranchPoint {
            beta: f(1)?,
            state: State::from_array([f(2)?, f(3)?, f(4)?, f(5)?]),
            scaled,
            stable: rec[9].parse().map_err(|_| bad(format!("stable `{}`", &rec[9])))?,
        };
        match out.last_mut() {
            Some(b) if b.kind == kind => b.points.push(point),
            _ => out.push(BifurcationBranch {
                kind,
                points: vec![point],
            }),
        }
    }
    Ok(out)
}
