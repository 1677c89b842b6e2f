//! Flat `key = value` scenario files.

use crate::model::ModelParams;
use crate::sim::IntegratorConfig;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    /// 1-based line, when the problem is tied to one.
    pub line: Option<usize>,
    pub message: String,
}

impl ScenarioError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Analyze,
    EntryExit,
    WorstTheta,
    Bifurcation,
    Sweep,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Analyze => "analyze",
            Experiment::EntryExit => "entry-exit",
            Experiment::WorstTheta => "worst-theta",
            Experiment::Bifurcation => "bifurcation",
            Experiment::Sweep => "sweep",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            Experiment::Simulate,
            Experiment::Analyze,
            Experiment::EntryExit,
            Experiment::WorstTheta,
            Experiment::Bifurcation,
            Experiment::Sweep,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// `a:b:step`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl FromStr for StepGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [start, end, step] = three_fields(s)?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let g = StepGrid {
            start: parse(start)?,
            end: parse(end)?,
            step: parse(step)?,
        };
        if !(g.step > 0.0 && g.end >= g.start) {
            return Err(format!("grid `{s}` needs start <= end and step > 0"));
        }
        Ok(g)
    }
}

/// `a:b:n`, `n` points inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountGrid {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl FromStr for CountGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [start, end, n] = three_fields(s)?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let g = CountGrid {
            start: parse(start)?,
            end: parse(end)?,
            n: n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?,
        };
        if g.n == 0 || g.end < g.start {
            return Err(format!("grid `{s}` needs start <= end and n >= 1"));
        }
        Ok(g)
    }
}

fn three_fields(s: &str) -> Result<[&str; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    <[&str; 3]>::try_from(parts).map_err(|_| format!("expected a:b:c, got `{s}`"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub initial_total_infected: f64,
    pub integrator: IntegratorConfig,
    pub experiment: Option<Experiment>,
    pub theta_grid: Option<StepGrid>,
    pub entry_grid: Option<CountGrid>,
    pub beta_grid: Option<CountGrid>,
    pub k: f64,
    /// Seeds `(T0, H0)` of entry–exit runs.
    pub entry_t0: f64,
    pub entry_h0: f64,
}

pub const KEYS: &[&str] = &[
    "beta",
    "theta",
    "gamma_i",
    "gamma_c",
    "gamma_h",
    "eps",
    "allow_unordered",
    "initial_total_infected",
    "rtol",
    "atol",
    "h_init",
    "h_max",
    "t_max",
    "max_steps",
    "experiment",
    "theta_grid",
    "entry_grid",
    "beta_grid",
    "k",
    "entry_t0",
    "entry_h0",
];

const REQUIRED: &[&str] = &["beta", "theta", "gamma_i", "gamma_c", "gamma_h", "eps"];

impl Scenario {
    /// Scenario with default run settings for `params`.
    pub fn with_params(params: ModelParams) -> Self {
        Self {
            params,
            initial_total_infected: crate::econ::DEFAULT_INITIAL_INFECTED,
            integrator: IntegratorConfig::default(),
            experiment: None,
            theta_grid: None,
            entry_grid: None,
            beta_grid: None,
            k: crate::econ::DEFAULT_COST_RATE,
            entry_t0: 1e-5,
            entry_h0: 1e-5,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut raw: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let n = idx + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ScenarioError::at(n, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ScenarioError::at(n, format!("unknown key `{key}`")));
            }
            if raw.insert(key, (n, value)).is_some() {
                return Err(ScenarioError::at(n, format!("duplicate key `{key}`")));
            }
        }
        for key in REQUIRED {
            if !raw.contains_key(key) {
                return Err(ScenarioError::general(format!("missing required key `{key}`")));
            }
        }

        fn get<T: FromStr>(raw: &BTreeMap<&str, (usize, &str)>, key: &str) -> Result<Option<T>, ScenarioError>
        where
            T::Err: fmt::Display,
        {
            raw.get(key)
                .map(|(n, v)| {
                    v.parse::<T>()
                        .map_err(|e| ScenarioError::at(*n, format!("bad value for `{key}`: {e}")))
                })
                .transpose()
        }
        let num = |key: &str| -> Result<f64, ScenarioError> { Ok(get::<f64>(&raw, key)?.expect("required key")) };

        let (beta, theta, gi, gc, gh, eps) = (
            num("beta")?,
            num("theta")?,
            num("gamma_i")?,
            num("gamma_c")?,
            num("gamma_h")?,
            num("eps")?,
        );
        let unordered = get::<bool>(&raw, "allow_unordered")?.unwrap_or(false);
        let params = if unordered {
            ModelParams::new_unordered(beta, theta, gi, gc, gh, eps)
        } else {
            ModelParams::new(beta, theta, gi, gc, gh, eps)
        }
        .map_err(|e| ScenarioError::general(e.to_string()))?;

        let mut sc = Scenario::with_params(params);
        if let Some(v) = get(&raw, "initial_total_infected")? {
            sc.initial_total_infected = v;
        }
        let cfg = &mut sc.integrator;
        if let Some(v) = get(&raw, "rtol")? {
            cfg.rtol = v;
        }
        if let Some(v) = get(&raw, "atol")? {
            cfg.atol = v;
        }
        if let Some(v) = get(&raw, "h_init")? {
            cfg.h_init = v;
        }
        if let Some(v) = get(&raw, "h_max")? {
            cfg.h_max = v;
        }
        if let Some(v) = get(&raw, "t_max")? {
            cfg.t_max = v;
        }
        if let Some(v) = get(&raw, "max_steps")? {
            cfg.max_steps = v;
        }
        cfg.validate().map_err(|e| ScenarioError::general(e.to_string()))?;
        sc.experiment = get(&raw, "experiment")?;
        sc.theta_grid = get(&raw, "theta_grid")?;
        sc.entry_grid = get(&raw, "entry_grid")?;
        sc.beta_grid = get(&raw, "beta_grid")?;
        if let Some(v) = get(&raw, "k")? {
            sc.k = v;
        }
        if let Some(v) = get(&raw, "entry_t0")? {
            sc.entry_t0 = v;
        }
        if let Some(v) = get(&raw, "entry_h0")? {
            sc.entry_h0 = v;
        }
        if !(sc.initial_total_infected > 0.0 && sc.initial_total_infected < 0.1) {
            return Err(ScenarioError::general(format!(
                "initial_total_infected = {} must lie in (0, 0.1)",
                sc.initial_total_infected
            )));
        }
        if !(sc.k >= 0.0 && sc.k.is_finite()) {
            return Err(ScenarioError::general(format!("k = {} must be non-negative", sc.k)));
        }
        Ok(sc)
    }
}
