//! Parameters, state and vector fields of the SIRS model with hospitalizations.
//!
//! The population is normalised to one and the recovered compartment is
//! eliminated through `R = 1 - S - I - C - H`, leaving a four-dimensional
//! system on the simplex `S, I, C, H >= 0, S + I + C + H <= 1`.

use crate::error::{Error, Result};

/// Tolerance used when checking simplex membership of user supplied states.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Rates and probabilities of the model.
///
/// Fields are private so the validity predicates hold for every value in
/// circulation; use [`ModelParams::new`] or [`ModelParams::new_unordered`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    theta: f64,
    gamma_i: f64,
    gamma_c: f64,
    gamma_h: f64,
    eps: f64,
}

impl ModelParams {
    /// Builds a parameter set satisfying `gamma_i <= gamma_c`.
    pub fn new(beta: f64, theta: f64, gamma_i: f64, gamma_c: f64, gamma_h: f64, eps: f64) -> Result<Self> {
        let p = Self::new_unordered(beta, theta, gamma_i, gamma_c, gamma_h, eps)?;
        if gamma_i > gamma_c {
            return Err(Error::UnorderedRates { gamma_i, gamma_c });
        }
        Ok(p)
    }

    /// Builds a parameter set without requiring `gamma_i <= gamma_c`.
    ///
    /// Callers opt into the fast-recovery regime explicitly; check
    /// [`ModelParams::ordered`] before applying results derived under the
    /// ordering assumption.
    pub fn new_unordered(beta: f64, theta: f64, gamma_i: f64, gamma_c: f64, gamma_h: f64, eps: f64) -> Result<Self> {
        positive("beta", beta)?;
        positive("gamma_i", gamma_i)?;
        positive("gamma_c", gamma_c)?;
        positive("gamma_h", gamma_h)?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in [0, 1]",
            });
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "must be finite and non-negative",
            });
        }
        let p = Self {
            beta,
            theta,
            gamma_i,
            gamma_c,
            gamma_h,
            eps,
        };
        if let Some(msg) = p.timescale_warning() {
            log::warn!("{msg}");
        }
        Ok(p)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn gamma_i(&self) -> f64 {
        self.gamma_i
    }
    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }
    pub fn gamma_h(&self) -> f64 {
        self.gamma_h
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// True iff `gamma_i <= gamma_c`.
    pub fn ordered(&self) -> bool {
        self.gamma_i <= self.gamma_c
    }

    /// True iff the standard and critical courses share one exit rate.
    pub fn equal_gammas(&self) -> bool {
        self.gamma_i == self.gamma_c
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        self.rebuild(beta, self.theta, self.eps)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        self.rebuild(self.beta, theta, self.eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        self.rebuild(self.beta, self.theta, eps)
    }

    fn rebuild(&self, beta: f64, theta: f64, eps: f64) -> Result<Self> {
        Self::new_unordered(beta, theta, self.gamma_i, self.gamma_c, self.gamma_h, eps)
    }

    /// Warning text when `eps` is not clearly separated from the fast rates.
    pub fn timescale_warning(&self) -> Option<String> {
        let fast = self.beta.min(self.gamma_i).min(self.gamma_c).min(self.gamma_h);
        (self.eps > 0.1 * fast).then(|| {
            format!(
                "eps = {} is not small against the fastest-process floor {} (timescale separation is weak)",
                self.eps, fast
            )
        })
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

/// A point `(S, I, C, H)` of the simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub s: f64,
    pub i: f64,
    pub c: f64,
    pub h: f64,
}

impl State {
    /// Disease-free equilibrium.
    pub const DFE: State = State {
        s: 1.0,
        i: 0.0,
        c: 0.0,
        h: 0.0,
    };

    /// Validated constructor.
    pub fn new(s: f64, i: f64, c: f64, h: f64) -> Result<Self> {
        let x = Self { s, i, c, h };
        if x.in_simplex(SIMPLEX_TOL) {
            Ok(x)
        } else {
            Err(Error::OutsideSimplex { s, i, c, h })
        }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            s: a[0],
            i: a[1],
            c: a[2],
            h: a[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.s, self.i, self.c, self.h]
    }

    /// Recovered fraction `1 - S - I - C - H`.
    pub fn r(&self) -> f64 {
        1.0 - self.s - self.i - self.c - self.h
    }

    /// Total infective fraction `I + C`.
    pub fn infective(&self) -> f64 {
        self.i + self.c
    }

    pub fn in_simplex(&self, tol: f64) -> bool {
        let a = self.to_array();
        a.iter().all(|v| v.is_finite() && *v >= -tol) && a.iter().sum::<f64>() <= 1.0 + tol
    }

    /// Sets components in `[-tol, 0)` to zero. No renormalisation: the
    /// four-dimensional system does not conserve `S + I + C + H`.
    pub fn clamp_to_simplex(&mut self, tol: f64) {
        for v in [&mut self.s, &mut self.i, &mut self.c, &mut self.h] {
            if *v < 0.0 && *v >= -tol {
                *v = 0.0;
            }
        }
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub s: f64,
    pub i: f64,
    pub c: f64,
    pub h: f64,
}

impl StateDerivative {
    /// Implied derivative of the recovered compartment.
    pub fn r(&self) -> f64 {
        -(self.s + self.i + self.c + self.h)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.s, self.i, self.c, self.h]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Right-hand side of the full system, immunity loss included.
pub fn derivative(p: &ModelParams, x: &State) -> StateDerivative {
    let force = p.beta * x.s * (x.i + x.c);
    StateDerivative {
        s: -force + p.eps * x.r(),
        i: (1.0 - p.theta) * force - p.gamma_i * x.i,
        c: p.theta * force - p.gamma_c * x.c,
        h: p.gamma_c * x.c - p.gamma_h * x.h,
    }
}

/// Right-hand side of the fast subsystem (`eps = 0`).
pub fn fast_derivative(p: &ModelParams, x: &State) -> StateDerivative {
    let force = p.beta * x.s * (x.i + x.c);
    StateDerivative {
        s: -force,
        i: (1.0 - p.theta) * force - p.gamma_i * x.i,
        c: p.theta * force - p.gamma_c * x.c,
        h: p.gamma_c * x.c - p.gamma_h * x.h,
    }
}

/// State of the collapsed system when `gamma_i == gamma_c`, with
/// `t_inf = I + C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub s: f64,
    pub t_inf: f64,
    pub h: f64,
}

impl ReducedState {
    pub fn new(s: f64, t_inf: f64, h: f64) -> Result<Self> {
        let ok =
            [s, t_inf, h].iter().all(|v| v.is_finite() && *v >= -SIMPLEX_TOL) && s + t_inf + h <= 1.0 + SIMPLEX_TOL;
        if ok {
            Ok(Self { s, t_inf, h })
        } else {
            Err(Error::OutsideSimplex { s, i: t_inf, c: 0.0, h })
        }
    }

    /// Embeds into the full state using `I = (1 - theta) T`, `C = theta T`.
    pub fn embed(&self, theta: f64) -> State {
        State {
            s: self.s,
            i: (1.0 - theta) * self.t_inf,
            c: theta * self.t_inf,
            h: self.h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDerivative {
    pub s: f64,
    pub t_inf: f64,
    pub h: f64,
}

/// Right-hand side of the three-dimensional system for `gamma_i == gamma_c`.
pub fn reduced_derivative(p: &ModelParams, x: &ReducedState) -> Result<ReducedDerivative> {
    if !p.equal_gammas() {
        return Err(Error::UnsupportedRegime {
            gamma_i: p.gamma_i,
            gamma_c: p.gamma_c,
        });
    }
    let gamma = p.gamma_i;
    let force = p.beta * x.s * x.t_inf;
    Ok(ReducedDerivative {
        s: -force + p.eps * (1.0 - x.s - x.t_inf - x.h),
        t_inf: force - gamma * x.t_inf,
        h: gamma * p.theta * x.t_inf - p.gamma_h * x.h,
    })
}

/// Start of an outbreak: `H0 = R0 = 0` and the infected split according to
/// `theta`.
pub fn make_initial_conditions(p: &ModelParams, total_infected: f64) -> Result<State> {
    if !(total_infected > 0.0 && total_infected < 0.1) {
        return Err(Error::InvalidInitialInfected(total_infected));
    }
    Ok(State {
        s: 1.0 - total_infected,
        i: (1.0 - p.theta) * total_infected,
        c: p.theta * total_infected,
        h: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> ModelParams {
        ModelParams::new(1.0, 0.35, 0.6, 0.8, 0.4, 0.01).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ModelParams::new(0.0, 0.3, 0.6, 0.8, 0.4, 0.01).is_err());
        assert!(ModelParams::new(1.0, 1.2, 0.6, 0.8, 0.4, 0.01).is_err());
        assert!(ModelParams::new(1.0, 0.3, 0.6, 0.8, 0.4, -0.01).is_err());
        assert!(ModelParams::new(1.0, 0.3, 0.6, 0.8, f64::NAN, 0.01).is_err());
        assert!(ModelParams::new(1.0, 0.3, 0.6, 0.8, 0.4, 0.0).is_ok());
    }

    #[test]
    fn unordered_rates_need_explicit_opt_in() {
        let e = ModelParams::new(1.0, 0.3, 0.9, 0.6, 0.4, 0.01).unwrap_err();
        assert!(matches!(e, Error::UnorderedRates { .. }));
        let p = ModelParams::new_unordered(1.0, 0.3, 0.9, 0.6, 0.4, 0.01).unwrap();
        assert!(!p.ordered());
        assert!(fig4().ordered());
    }

    #[test]
    fn timescale_warning_threshold() {
        assert!(fig4().timescale_warning().is_none());
        let p = ModelParams::new(1.0, 0.35, 0.6, 0.8, 0.4, 0.05).unwrap();
        assert!(p.timescale_warning().is_some());
    }

    #[test]
    fn dfe_is_an_equilibrium() {
        let d = derivative(&fig4(), &State::DFE);
        assert_eq!(d, StateDerivative::default());
    }

    #[test]
    fn no_critical_course_when_theta_zero() {
        let p = fig4().with_theta(0.0).unwrap();
        let x = State::new(0.7, 0.1, 0.0, 0.0).unwrap();
        let d = derivative(&p, &x);
        assert_eq!(d.c, 0.0);
        assert_eq!(d.h, 0.0);
    }

    #[test]
    fn recovered_derivative_matches_outflows() {
        let p = fig4();
        let x = State::new(0.5, 0.1, 0.05, 0.02).unwrap();
        let d = derivative(&p, &x);
        let expected = p.gamma_i() * x.i + p.gamma_h() * x.h - p.eps() * x.r();
        assert!((d.r() - expected).abs() < 1e-15);
    }

    #[test]
    fn fast_field_by_hand() {
        // beta S (I + C) = 0.9 * 0.08 = 0.072
        let x = State::new(0.9, 0.05, 0.03, 0.02).unwrap();
        let d = fast_derivative(&fig4(), &x);
        let expect = [
            -0.072,
            0.65 * 0.072 - 0.6 * 0.05,
            0.35 * 0.072 - 0.8 * 0.03,
            0.8 * 0.03 - 0.4 * 0.02,
        ];
        for (a, b) in d.to_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-16, "{a} vs {b}");
        }
    }

    #[test]
    fn fast_field_vanishes_on_critical_manifold() {
        let x = State::new(0.42, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(fast_derivative(&fig4(), &x), StateDerivative::default());
    }

    #[test]
    fn reduced_field_requires_equal_gammas() {
        let x = ReducedState::new(0.5, 0.01, 0.001).unwrap();
        assert!(matches!(
            reduced_derivative(&fig4(), &x),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn reduced_field_by_hand() {
        let p = ModelParams::new(1.0, 0.35, 0.6, 0.6, 0.2, 0.01).unwrap();
        let x = ReducedState::new(0.5, 0.01, 0.001).unwrap();
        let d = reduced_derivative(&p, &x).unwrap();
        assert!((d.s - (-0.005 + 0.01 * 0.489)).abs() < 1e-17);
        assert!((d.t_inf - (0.005 - 0.006)).abs() < 1e-17);
        assert!((d.h - (0.6 * 0.35 * 0.01 - 0.2 * 0.001)).abs() < 1e-17);
    }

    #[test]
    fn reduced_field_on_manifold() {
        let p = ModelParams::new(1.0, 0.35, 0.6, 0.6, 0.2, 0.01).unwrap();
        let x = ReducedState::new(0.3, 0.0, 0.0).unwrap();
        let d = reduced_derivative(&p, &x).unwrap();
        assert_eq!((d.s, d.t_inf, d.h), (0.01 * 0.7, 0.0, 0.0));
    }

    #[test]
    fn initial_conditions() {
        let x = make_initial_conditions(&fig4(), 1e-5).unwrap();
        assert!((x.s - 0.99999).abs() < 1e-16);
        assert!((x.i - 6.5e-6).abs() < 1e-20);
        assert!((x.c - 3.5e-6).abs() < 1e-20);
        assert_eq!(x.h, 0.0);
        assert!(x.r().abs() < 1e-16);

        let p0 = fig4().with_theta(0.0).unwrap();
        assert_eq!(make_initial_conditions(&p0, 1e-5).unwrap().c, 0.0);
        let p1 = fig4().with_theta(1.0).unwrap();
        assert_eq!(make_initial_conditions(&p1, 1e-5).unwrap().i, 0.0);

        for bad in [0.0, -1e-5, 0.1, 0.5, f64::NAN] {
            assert!(matches!(
                make_initial_conditions(&fig4(), bad),
                Err(Error::InvalidInitialInfected(_))
            ));
        }
    }

    #[test]
    fn clamp_only_touches_small_negatives() {
        let mut x = State {
            s: 0.5,
            i: -1e-14,
            c: -1e-3,
            h: 0.1,
        };
        x.clamp_to_simplex(1e-11);
        assert_eq!(x.i, 0.0);
        assert_eq!(x.c, -1e-3);
        assert!(!x.in_simplex(1e-11));
    }

    #[test]
    fn state_constructor_validates() {
        assert!(State::new(0.5, 0.3, 0.3, 0.0).is_err());
        assert!(State::new(-0.1, 0.3, 0.3, 0.0).is_err());
        assert!(State::new(1.0, 0.0, 0.0, 0.0).is_ok());
    }
}
