//! Command-line front end: scenario in, CSV tables and a key=value summary
//! out.

pub mod csvio;
pub mod scenario;

use crate::analysis::{bifurcation_diagram, equilibrium_report, r0, transcritical_beta};
use crate::econ::{self, compare, default_theta_grid, stepped_grid, RowStatus, SweepRow};
use crate::error::Error;
use crate::model::ModelParams;
use crate::sim::{self, EventKind, EventSpec, WAVE_END_R0_MARGIN};
use crate::slowfast::{self, linspace};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scenario::{CountGrid, Experiment, Scenario, StepGrid};
use std::ffi::OsString;
use std::fmt::{self, Display};
use std::io;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sirsh", version, about = "Two-timescale SIRS model with hospitalizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Flat key = value scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for CSV tables and summary.txt.
    #[arg(long, default_value = "sirsh-out")]
    out: PathBuf,
    /// Severity grid `a:b:step`.
    #[arg(long)]
    theta_grid: Option<StepGrid>,
    /// Entry-point grid `a:b:n`.
    #[arg(long)]
    entry_grid: Option<CountGrid>,
    /// Hospitalization cost rate.
    #[arg(long)]
    k: Option<f64>,
    /// Relative integration tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one outbreak and write its trajectory.
    Simulate(Common),
    /// Equilibria, stability and analytic worst-case severity.
    Analyze(Common),
    /// Predicted against simulated exits from the slow regime.
    EntryExit(Common),
    /// Analytic and simulated worst-case severity.
    WorstTheta(Common),
    /// Equilibrium branches against the transmission rate.
    Bifurcation(Common),
    /// Cost at the end of the first wave over a severity grid.
    Sweep(Common),
    /// Run a built-in figure scenario.
    Reproduce {
        figure: Figure,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6a,
    Fig6b,
    Fig6c,
    Fig7,
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Numerical(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "scenario error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn numerical(context: impl Display, e: Error) -> CliError {
    CliError::Numerical(format!("{context}: {e}"))
}

/// Ordered `key=value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn num(&mut self, key: &str, x: f64) {
        self.push(key, csvio::fmt_f64(x));
    }

    fn opt(&mut self, key: &str, x: Option<f64>) {
        self.push(key, x.map(csvio::fmt_f64).unwrap_or_else(|| "none".into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Inverse of [`Summary::render`].
    pub fn parse(text: &str) -> Self {
        Summary(
            text.lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }
}

/// Built-in scenario behind each figure recipe.
pub fn figure_scenario(fig: Figure) -> (Experiment, Scenario) {
    let p = |b, th, gi, gc, gh| ModelParams::new(b, th, gi, gc, gh, 0.01).expect("built-in parameters are valid");
    match fig {
        Figure::Fig4 => {
            let mut sc = Scenario::with_params(p(1.0, 0.35, 0.6, 0.8, 0.4));
            sc.integrator.t_max = 2000.0;
            (Experiment::Simulate, sc)
        }
        Figure::Fig5 => {
            let mut sc = Scenario::with_params(p(1.0, 0.2, 0.2, 0.3, 0.15));
            sc.integrator.t_max = 2000.0;
            (Experiment::Simulate, sc)
        }
        Figure::Fig6a => (
            Experiment::WorstTheta,
            Scenario::with_params(p(1.5, 0.5, 0.6, 0.8, 0.4)),
        ),
        Figure::Fig6b => (
            Experiment::WorstTheta,
            Scenario::with_params(p(1.0, 0.5, 0.6, 0.9, 0.4)),
        ),
        Figure::Fig6c => (
            Experiment::WorstTheta,
            Scenario::with_params(p(0.7, 0.5, 0.6, 0.8, 0.4)),
        ),
        Figure::Fig7 => {
            let mut sc = Scenario::with_params(p(1.0, 0.35, 0.6, 0.6, 0.2));
            sc.entry_grid = Some(CountGrid {
                start: 0.05,
                end: 0.59,
                n: 50,
            });
            (Experiment::EntryExit, sc)
        }
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Parse("--scenario <path> is required".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    Scenario::parse(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn apply_overrides(sc: &mut Scenario, c: &Common) -> Result<(), CliError> {
    if let Some(g) = c.theta_grid {
        sc.theta_grid = Some(g);
    }
    if let Some(g) = c.entry_grid {
        sc.entry_grid = Some(g);
    }
    if let Some(k) = c.k {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(CliError::Parse(format!("--k {k} must be non-negative")));
        }
        sc.k = k;
    }
    if let Some(tol) = c.tol {
        sc.integrator.rtol = tol;
        sc.integrator.atol = sc.integrator.atol.min(tol);
    }
    sc.integrator.validate().map_err(|e| CliError::Parse(e.to_string()))
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            print!("{}", summary.render());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("sirsh: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<Summary, CliError> {
    let (experiment, mut sc, common) = match cmd {
        Command::Reproduce { figure, common } => {
            let (exp, sc) = figure_scenario(figure);
            (exp, sc, common)
        }
        Command::Simulate(c) => (Experiment::Simulate, load_scenario(&c.scenario)?, c),
        Command::Analyze(c) => (Experiment::Analyze, load_scenario(&c.scenario)?, c),
        Command::EntryExit(c) => (Experiment::EntryExit, load_scenario(&c.scenario)?, c),
        Command::WorstTheta(c) => (Experiment::WorstTheta, load_scenario(&c.scenario)?, c),
        Command::Bifurcation(c) => (Experiment::Bifurcation, load_scenario(&c.scenario)?, c),
        Command::Sweep(c) => (Experiment::Sweep, load_scenario(&c.scenario)?, c),
    };
    if let Some(declared) = sc.experiment {
        if declared != experiment {
            return Err(CliError::Parse(format!(
                "scenario declares experiment `{}` but `{}` was requested",
                declared.name(),
                experiment.name()
            )));
        }
    }
    apply_overrides(&mut sc, &common)?;
    run_experiment(experiment, &sc, &common.out)
}

/// Runs one experiment, writing its tables and `summary.txt` into `out`.
pub fn run_experiment(experiment: Experiment, sc: &Scenario, out: &Path) -> Result<Summary, CliError> {
    std::fs::create_dir_all(out)?;
    let mut s = Summary::default();
    s.push("experiment", experiment.name());
    push_params(&mut s, &sc.params);
    let result = match experiment {
        Experiment::Simulate => simulate(sc, out, &mut s),
        Experiment::Analyze => {
            analyze(sc, &mut s);
            Ok(())
        }
        Experiment::EntryExit => entry_exit(sc, out, &mut s),
        Experiment::WorstTheta => worst_theta(sc, out, &mut s),
        Experiment::Bifurcation => bifurcation(sc, out, &mut s),
        Experiment::Sweep => sweep(sc, out, &mut s),
    };
    std::fs::write(out.join("summary.txt"), s.render())?;
    result.map(|_| s)
}

fn push_params(s: &mut Summary, p: &ModelParams) {
    s.num("beta", p.beta());
    s.num("theta", p.theta());
    s.num("gamma_i", p.gamma_i());
    s.num("gamma_c", p.gamma_c());
    s.num("gamma_h", p.gamma_h());
    s.num("eps", p.eps());
    s.num("r0", r0(p));
}

fn simulate(sc: &Scenario, out: &Path, s: &mut Summary) -> Result<(), CliError> {
    let p = &sc.params;
    let mut events = vec![EventSpec::slow_regime(p)];
    if r0(p) > 1.0 + WAVE_END_R0_MARGIN && p.theta() > 0.0 {
        events.push(EventSpec::wave_end(p, false).map_err(|e| numerical("wave end", e))?);
    }
    let traj = sim::simulate_outbreak(p, sc.initial_total_infected, &sc.integrator, &events).map_err(|e| {
        numerical(
            format!("theta = {}, S0 = {}", p.theta(), 1.0 - sc.initial_total_infected),
            e,
        )
    })?;
    let rows = csvio::trajectory_rows(&traj, sc.k);
    csvio::write_trajectory_csv(&out.join("trajectory.csv"), &rows)?;

    s.num("k", sc.k);
    s.push("steps", traj.steps().len());
    s.num("t_end", traj.t_end());
    let wave_end = traj.events_of(|k| *k == EventKind::WaveEnd).next();
    s.opt("t_F", wave_end.map(|e| e.t));
    s.opt("K_tF", wave_end.map(|e| sc.k * e.hosp_integral));
    let entries: Vec<f64> = traj.events_of(|k| *k == EventKind::SlowEntry).map(|e| e.t).collect();
    let exits: Vec<f64> = traj.events_of(|k| *k == EventKind::SlowExit).map(|e| e.t).collect();
    s.push("slow_entries", entries.len());
    s.opt("first_slow_entry", entries.first().copied());
    s.opt("first_slow_exit", exits.first().copied());
    let x = traj.final_state();
    s.num("S_end", x.s);
    s.num("I_end", x.i);
    s.num("C_end", x.c);
    s.num("H_end", x.h);
    s.num("K_end", sc.k * traj.hosp_integral().last().copied().unwrap_or(0.0));
    s.push("trajectory_csv", out.join("trajectory.csv").display());
    Ok(())
}

fn analyze(sc: &Scenario, s: &mut Summary) {
    let p = &sc.params;
    let rep = equilibrium_report(p);
    s.num("rbar0", rep.rbar0);
    s.num("transcritical_beta", transcritical_beta(p));
    s.push("dfe_stable", rep.dfe_stable);
    for (n, ev) in rep.dfe_eigenvalues.iter().enumerate() {
        s.num(&format!("dfe_lambda{}", n + 1), ev.value.re);
    }
    match (&rep.ee, &rep.ee_error) {
        (Some(x), _) => {
            s.num("S2", x.s);
            s.num("I2", x.i);
            s.num("C2", x.c);
            s.num("H2", x.h);
        }
        (None, Some(e)) => s.push("ee", format!("none ({e})")),
        (None, None) => s.push("ee", "none"),
    }
    if let Some(ev) = rep.ee_eigenvalues {
        for (n, z) in ev.iter().enumerate() {
            s.num(&format!("ee_lambda{}_re", n + 1), z.re);
            s.num(&format!("ee_lambda{}_im", n + 1), z.im);
        }
    }
    if let Some(st) = rep.ee_locally_stable {
        s.push("ee_locally_stable", st);
    }
    s.opt("theta_star", rep.theta_star);
    let wc = econ::worst_theta_analytic(p);
    s.push("case", wc.case_id);
    s.opt("theta_tilde", wc.theta_tilde);
}

fn entry_grid(sc: &Scenario) -> Vec<f64> {
    match sc.entry_grid {
        Some(g) => linspace(g.start, g.end, g.n),
        None => {
            let sc_crit = 1.0 / r0(&sc.params);
            linspace(sc_crit / 12.0, sc_crit * (1.0 - 1.0 / 60.0), 50)
        }
    }
}

fn entry_exit(sc: &Scenario, out: &Path, s: &mut Summary) -> Result<(), CliError> {
    let p = &sc.params;
    let grid = entry_grid(sc);
    let results = slowfast::entry_exit_sweep(p, &grid, sc.entry_t0, sc.entry_h0).map_err(|e| match e {
        Error::AtGridPoint { point, source } => numerical(format!("s_entry = {point}"), *source),
        other => numerical("entry-exit", other),
    })?;
    let (pts, times) = (out.join("entry_exit_points.csv"), out.join("entry_exit_times.csv"));
    csvio::write_entry_exit_csv(&pts, &times, &results)?;
    let (ep, et) = slowfast::max_errors(&results);
    s.push("points", results.len());
    s.push(
        "exits_undetected",
        results.iter().filter(|r| r.s_exit_simulated.is_none()).count(),
    );
    s.num("max_abs_err_point", ep);
    s.num("max_abs_err_time", et);
    s.num("max_abs_err_fast_time", et / p.eps());
    s.push("points_csv", pts.display());
    s.push("times_csv", times.display());
    Ok(())
}

fn theta_grid(sc: &Scenario) -> Result<Vec<f64>, CliError> {
    match sc.theta_grid {
        Some(g) => {
            if g.start < 0.0 || g.end > 1.0 {
                return Err(CliError::Parse(format!(
                    "theta grid {}:{} leaves [0, 1]",
                    g.start, g.end
                )));
            }
            stepped_grid(g.start, g.end, g.step).map_err(|e| CliError::Parse(e.to_string()))
        }
        None => Ok(default_theta_grid()),
    }
}

fn failed_rows(rows: &[SweepRow]) -> Result<(), CliError> {
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.status == RowStatus::Failed)
        .map(|r| r.theta.to_string())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "integration failed at theta = {}",
            bad.join(", ")
        )))
    }
}

fn push_sweep(s: &mut Summary, emp: &econ::EmpiricalResult, path: &Path) {
    s.push("grid_points", emp.rows.len());
    s.opt("grid_step", emp.grid_step);
    s.push("rows_ok", emp.rows.iter().filter(|r| r.status == RowStatus::Ok).count());
    s.opt("theta_argmax", emp.argmax_theta);
    s.opt("K_argmax", emp.k_at_argmax);
    s.push("sweep_csv", path.display());
}

fn worst_theta(sc: &Scenario, out: &Path, s: &mut Summary) -> Result<(), CliError> {
    let grid = theta_grid(sc)?;
    let rep = econ::worst_theta(&sc.params, &grid, sc.initial_total_infected, sc.k, &sc.integrator)
        .map_err(|e| numerical("worst-theta", e))?;
    let emp = rep.empirical.as_ref().expect("sweep attached");
    let path = out.join("sweep.csv");
    csvio::write_sweep_csv(&path, &emp.rows)?;
    s.num("k", sc.k);
    s.push("case", rep.case_id);
    s.opt("theta_tilde", rep.theta_tilde);
    s.opt("theta_star", rep.theta_star);
    push_sweep(s, emp, &path);
    s.opt("K_theta_tilde", emp.k_at_theta_tilde);
    match compare(&rep) {
        Ok(c) => {
            s.num("theta_gap", c.theta_gap);
            s.num("k_gap_rel", c.k_gap_rel);
            s.push("practical_match", c.practical_match);
        }
        Err(e) => s.push("comparison", format!("none ({e})")),
    }
    failed_rows(&emp.rows)
}

fn sweep(sc: &Scenario, out: &Path, s: &mut Summary) -> Result<(), CliError> {
    let grid = theta_grid(sc)?;
    let emp = econ::worst_theta_empirical(&sc.params, &grid, sc.initial_total_infected, sc.k, &sc.integrator)
        .map_err(|e| numerical("sweep", e))?;
    let path = out.join("sweep.csv");
    csvio::write_sweep_csv(&path, &emp.rows)?;
    s.num("k", sc.k);
    push_sweep(s, &emp, &path);
    failed_rows(&emp.rows)
}

fn bifurcation(sc: &Scenario, out: &Path, s: &mut Summary) -> Result<(), CliError> {
    let p = &sc.params;
    let bc = transcritical_beta(p);
    let grid = match sc.beta_grid {
        Some(g) => linspace(g.start, g.end, g.n),
        None => linspace(0.25 * bc, 3.0 * bc, 111),
    };
    let branches = bifurcation_diagram(p, &grid).map_err(|e| match e {
        Error::InvalidConfig(m) => CliError::Parse(m),
        other => numerical("bifurcation", other),
    })?;
    let path = out.join("bifurcation.csv");
    csvio::write_bifurcation_csv(&path, &branches)?;
    s.num("transcritical_beta", bc);
    for b in &branches {
        let name = match b.kind {
            crate::analysis::BranchKind::Dfe => "dfe_points",
            crate::analysis::BranchKind::Ee => "ee_points",
        };
        s.push(name, b.points.len());
    }
    s.push("bifurcation_csv", path.display());
    Ok(())
}
