use thiserror::Error;

/// Errors raised by the model, analysis and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("gamma_i = {gamma_i} exceeds gamma_c = {gamma_c}; construct with unordered rates explicitly allowed")]
    UnorderedRates { gamma_i: f64, gamma_c: f64 },
    #[error("state ({s}, {i}, {c}, {h}) lies outside the simplex")]
    OutsideSimplex { s: f64, i: f64, c: f64, h: f64 },
    #[error("initial infected fraction {0} must lie in (0, 0.1)")]
    InvalidInitialInfected(f64),
    #[error("operation requires gamma_i == gamma_c (got {gamma_i} and {gamma_c})")]
    UnsupportedRegime { gamma_i: f64, gamma_c: f64 },
    #[error("no endemic equilibrium: R0 = {r0} <= 1")]
    NoEndemicEquilibrium { r0: f64 },
    #[error("theta = 0 makes the endemic equilibrium formulas degenerate")]
    DegenerateTheta,
    #[error("entry point S = {s_entry} is not in the attracting region (0, {s_critical})")]
    NotInAttractingRegion { s_entry: f64, s_critical: f64 },
    #[error("no epidemic orbit: I0 + C0 = 0")]
    NoEpidemicOrbit,
    #[error("susceptible fraction must be positive (got {0})")]
    NonPositiveSusceptible(f64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("step size underflow at t = {t} (h = {h}); stiffness suspected")]
    StiffnessSuspected { t: f64, h: f64 },
    #[error("trajectory left the simplex at t = {t}")]
    DomainViolation { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("at grid point {point}: {source}")]
    AtGridPoint { point: f64, source: Box<Error> },
    #[error("root finder: {0}")]
    Root(#[from] crate::roots::RootError),
}

pub type Result<T> = std::result::Result<T, Error>;
