//! Closed-form equilibrium analysis: reproduction number, equilibria and
//! their linear stability, the epidemic threshold in `theta`, and the
//! transcritical bifurcation in `beta`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::roots::{find_root, Tolerance};

/// Basic reproduction number `beta ((1 - theta)/gamma_i + theta/gamma_c)`.
pub fn r0(p: &ModelParams) -> f64 {
    p.beta() * rbar0(p)
}

/// Reproduction number per unit transmission rate, `R0 / beta`.
pub fn rbar0(p: &ModelParams) -> f64 {
    (1.0 - p.theta()) / p.gamma_i() + p.theta() / p.gamma_c()
}

/// Next generation matrix `F V^-1` over the disease compartments `(I, C, H)`.
pub fn next_generation_matrix(p: &ModelParams) -> [[f64; 3]; 3] {
    let (b, th) = (p.beta(), p.theta());
    [
        [b * (1.0 - th) / p.gamma_i(), b * (1.0 - th) / p.gamma_c(), 0.0],
        [b * th / p.gamma_i(), b * th / p.gamma_c(), 0.0],
        [0.0, 0.0, 0.0],
    ]
}

/// Which direction of the linearisation at the disease-free equilibrium an
/// eigenvalue belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenRole {
    /// `-eps`: along the susceptible axis, which contains the critical manifold.
    ImmunityLoss,
    /// `-gamma_h`: hospital discharge.
    Discharge,
    /// Larger root of the infective block; positive iff `R0 > 1`.
    InfectiveGrowth,
    /// Smaller root of the infective block.
    InfectiveDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub role: EigenRole,
}

/// Roots of `lambda^2 - trace lambda + det`, larger real part first.
fn quadratic_pair(trace: f64, det: f64) -> (Complex64, Complex64) {
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the larger-magnitude root first
        let big = 0.5 * (trace + trace.signum() * sq);
        if big == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let small = det / big;
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * trace, im), Complex64::new(0.5 * trace, -im))
    }
}

/// Eigenvalues of the Jacobian at `(1, 0, 0, 0)`, from their closed forms.
pub fn dfe_eigenvalues(p: &ModelParams) -> [Eigenvalue; 4] {
    let trace = p.beta() - p.gamma_i() - p.gamma_c();
    let det = p.gamma_i() * p.gamma_c() * (1.0 - r0(p));
    let (grow, decay) = quadratic_pair(trace, det);
    [
        Eigenvalue {
            value: Complex64::new(-p.eps(), 0.0),
            role: EigenRole::ImmunityLoss,
        },
        Eigenvalue {
            value: Complex64::new(-p.gamma_h(), 0.0),
            role: EigenRole::Discharge,
        },
        Eigenvalue {
            value: grow,
            role: EigenRole::InfectiveGrowth,
        },
        Eigenvalue {
            value: decay,
            role: EigenRole::InfectiveDecay,
        },
    ]
}

/// Whether the endemic equilibrium is evaluated exactly or to leading order
/// in `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EeMode {
    #[default]
    Exact,
    /// Replaces the inverse bracket by its `eps -> 0` limit `theta / gamma_c`.
    Simplified,
}

fn check_endemic(p: &ModelParams) -> Result<f64> {
    let r = r0(p);
    if !(r > 1.0) {
        return Err(Error::NoEndemicEquilibrium { r0: r });
    }
    if p.theta() == 0.0 {
        return Err(Error::DegenerateTheta);
    }
    Ok(r)
}

/// Endemic equilibrium `(S2, I2, C2, H2)`.
pub fn endemic_equilibrium(p: &ModelParams, mode: EeMode) -> Result<State> {
    let r = check_endemic(p)?;
    let (th, gi, gc, gh, eps) = (p.theta(), p.gamma_i(), p.gamma_c(), p.gamma_h(), p.eps());
    let inv = match mode {
        EeMode::Exact => 1.0 / (gc / th + eps * (1.0 + gc / gh + gc / gi * (1.0 / th - 1.0))),
        EeMode::Simplified => th / gc,
    };
    let amp = eps * (1.0 - 1.0 / r) * inv;
    Ok(State {
        s: 1.0 / r,
        i: amp * (1.0 - th) / th * gc / gi,
        c: amp,
        h: amp * gc / gh,
    })
}

/// Coefficients of the cubic factor `lambda^3 + a lambda^2 + b lambda + c`
/// of the endemic characteristic polynomial, with `O(eps^2)` terms dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CharPoly {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.a) * z + self.b) * z + self.c
    }

    fn eval_real(&self, x: f64) -> f64 {
        ((x + self.a) * x + self.b) * x + self.c
    }

    /// Value at `-a`; negative exactly when the complex pair (if any) is stable.
    pub fn at_minus_a(&self) -> f64 {
        self.eval_real(-self.a)
    }

    /// The three roots, one real root first.
    pub fn roots(&self) -> [Complex64; 3] {
        // every root lies inside the Cauchy disc
        let bound = 1.0 + self.a.abs().max(self.b.abs()).max(self.c.abs());
        let f = |x: f64| self.eval_real(x);
        let (lo, hi) = if self.c >= 0.0 { (-bound, 0.0) } else { (0.0, bound) };
        let real = find_root(f, lo, hi, Tolerance::width(0.0)).unwrap_or(0.0);
        // deflate to lambda^2 + p lambda + s
        let pc = self.a + real;
        let sc = self.b + pc * real;
        let (r1, r2) = quadratic_pair(-pc, sc);
        [real.into(), r1, r2].map(|z| self.polish(z))
    }

    fn polish(&self, mut z: Complex64) -> Complex64 {
        for _ in 0..3 {
            let d = (3.0 * z + 2.0 * self.a) * z + self.b;
            if d.norm() == 0.0 {
                break;
            }
            let step = self.eval(z) / d;
            if !step.is_finite() {
                break;
            }
            z -= step;
        }
        z
    }
}

pub fn ee_charpoly_coeffs(p: &ModelParams) -> Result<CharPoly> {
    let r = check_endemic(p)?;
    let (b, th, gi, gc, eps) = (p.beta(), p.theta(), p.gamma_i(), p.gamma_c(), p.eps());
    Ok(CharPoly {
        a: (th * gi * gi + (1.0 - th) * gc * gc) / (th * gi + (1.0 - th) * gc) + eps * r,
        b: eps * (r * (gi + gc) - b / r),
        c: eps * gi * gc * (r - 1.0),
    })
}

/// Approximate Jacobian eigenvalues at the endemic equilibrium: `-gamma_h`
/// followed by the roots of the cubic factor.
pub fn ee_eigenvalues(p: &ModelParams) -> Result<[Complex64; 4]> {
    let q = ee_charpoly_coeffs(p)?;
    let [a, b, c] = q.roots();
    Ok([Complex64::new(-p.gamma_h(), 0.0), a, b, c])
}

/// Why no epidemic threshold `theta*` exists in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoThetaStar {
    /// `beta <= gamma_i`: `R0 <= 1` for every `theta`.
    NoEpidemic,
    /// `beta >= gamma_c`: `R0 >= 1` for every `theta`.
    AlwaysEpidemic,
    /// `gamma_i == gamma_c`: `R0` does not depend on `theta`.
    ThetaIndependent,
    /// `gamma_i > gamma_c`: the threshold is only defined under the ordering.
    Unordered,
}

/// The severity at which `R0 = 1`, defined when `gamma_i < beta < gamma_c`.
pub fn theta_star(p: &ModelParams) -> std::result::Result<f64, NoThetaStar> {
    let (b, gi, gc) = (p.beta(), p.gamma_i(), p.gamma_c());
    if gi == gc {
        return Err(NoThetaStar::ThetaIndependent);
    }
    if gi > gc {
        return Err(NoThetaStar::Unordered);
    }
    if b <= gi {
        return Err(NoThetaStar::NoEpidemic);
    }
    if b >= gc {
        return Err(NoThetaStar::AlwaysEpidemic);
    }
    Ok((1.0 / gi - 1.0 / b) / (1.0 / gi - 1.0 / gc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub r0: f64,
    pub rbar0: f64,
    pub dfe: State,
    pub dfe_eigenvalues: [Eigenvalue; 4],
    pub dfe_stable: bool,
    pub ee: Option<State>,
    /// Reason the endemic equilibrium was not produced, if any.
    pub ee_error: Option<Error>,
    pub ee_charpoly: Option<CharPoly>,
    pub ee_eigenvalues: Option<[Complex64; 4]>,
    pub ee_locally_stable: Option<bool>,
    pub theta_star: Option<f64>,
}

pub fn equilibrium_report(p: &ModelParams) -> EquilibriumReport {
    let r = r0(p);
    let (ee, ee_error) = match endemic_equilibrium(p, EeMode::Exact) {
        Ok(x) => (Some(x), None),
        Err(e) => (None, Some(e)),
    };
    let ee_charpoly = ee_charpoly_coeffs(p).ok();
    let ee_eigenvalues = ee_eigenvalues(p).ok();
    EquilibriumReport {
        r0: r,
        rbar0: rbar0(p),
        dfe: State::DFE,
        dfe_eigenvalues: dfe_eigenvalues(p),
        dfe_stable: r < 1.0,
        ee,
        ee_error,
        ee_charpoly,
        ee_locally_stable: ee_eigenvalues.map(|ev| ev.iter().all(|z| z.re < 0.0)),
        ee_eigenvalues,
        theta_star: theta_star(p).ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Dfe,
    Ee,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub beta: f64,
    pub state: State,
    /// `X2 / (1 - 1/R0)` for `X in {I, C, H}`; endemic branch only.
    pub scaled: Option<[f64; 3]>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationBranch {
    pub kind: BranchKind,
    pub points: Vec<BranchPoint>,
}

/// Transmission rate of the transcritical point, `1 / rbar0`.
pub fn transcritical_beta(p: &ModelParams) -> f64 {
    1.0 / rbar0(p)
}

/// Equilibrium branches over `beta_grid`; the `beta` of `base` is ignored.
pub fn bifurcation_diagram(base: &ModelParams, beta_grid: &[f64]) -> Result<Vec<BifurcationBranch>> {
    if beta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("beta grid must be strictly increasing".into()));
    }
    let mut dfe = Vec::with_capacity(beta_grid.len());
    let mut ee = Vec::new();
    for &beta in beta_grid {
        let p = base.with_beta(beta)?;
        let r = r0(&p);
        dfe.push(BranchPoint {
            beta,
            state: State::DFE,
            scaled: None,
            stable: r < 1.0,
        });
        if r > 1.0 {
            let x = endemic_equilibrium(&p, EeMode::Exact)?;
            let scale = 1.0 - 1.0 / r;
            let stable = ee_eigenvalues(&p)?.iter().all(|z| z.re < 0.0);
            ee.push(BranchPoint {
                beta,
                state: x,
                scaled: Some([x.i / scale, x.c / scale, x.h / scale]),
                stable,
            });
        }
    }
    Ok(vec![
        BifurcationBranch {
            kind: BranchKind::Dfe,
            points: dfe,
        },
        BifurcationBranch {
            kind: BranchKind::Ee,
            points: ee,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derivative;

    fn fig4() -> ModelParams {
        ModelParams::new(1.0, 0.35, 0.6, 0.8, 0.4, 0.01).unwrap()
    }

    #[test]
    fn r0_fig4() {
        // 0.65/0.6 + 0.35/0.8 = 1.0833.. + 0.4375
        assert!((r0(&fig4()) - 1.520_833_333_333_333_3).abs() < 1e-15);
    }

    #[test]
    fn r0_theta_independent_for_equal_gammas() {
        for th in [0.0, 0.2, 0.7, 1.0] {
            let p = ModelParams::new(1.3, th, 0.5, 0.5, 0.2, 0.01).unwrap();
            assert!((r0(&p) - 1.3 / 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn ngm_entries() {
        let p = ModelParams::new(1.0, 0.2, 0.2, 0.3, 0.15, 0.01).unwrap();
        let m = next_generation_matrix(&p);
        assert!((m[0][0] - 4.0).abs() < 1e-15);
        assert_eq!(m[2], [0.0; 3]);
        assert_eq!([m[0][2], m[1][2]], [0.0; 2]);
        let p0 = p.with_theta(0.0).unwrap();
        assert_eq!(next_generation_matrix(&p0)[1], [0.0; 3]);
    }

    #[test]
    fn dfe_eigen_signs() {
        let ev = dfe_eigenvalues(&fig4());
        assert!(ev[2].value.re > 0.0);
        let stable = ModelParams::new(0.5, 0.35, 0.6, 0.8, 0.4, 0.01).unwrap();
        assert!(dfe_eigenvalues(&stable).iter().all(|e| e.value.re < 0.0));
    }

    #[test]
    fn dfe_infective_pair_is_real() {
        // the infective block has positive off-diagonal entries, so its
        // discriminant is a sum of squares
        for (b, th, gi, gc) in [(0.05, 0.5, 0.6, 0.6), (0.5, 0.5, 0.25, 4.0), (4.0, 0.99, 0.1, 10.0)] {
            let p = ModelParams::new(b, th, gi, gc, 0.4, 0.01).unwrap();
            let ev = dfe_eigenvalues(&p);
            assert!(ev.iter().all(|e| e.value.im == 0.0));
            let det = gi * gc * (1.0 - r0(&p));
            assert!((ev[2].value * ev[3].value - det).norm() < 1e-12);
            assert!((ev[2].value + ev[3].value - (b - gi - gc)).norm() < 1e-12);
        }
    }

    #[test]
    fn theta_one_endemic() {
        let p = fig4().with_theta(1.0).unwrap();
        let p = p.with_beta(1.2).unwrap();
        let x = endemic_equilibrium(&p, EeMode::Exact).unwrap();
        assert_eq!(x.i, 0.0);
        assert!(x.c > 0.0 && x.h > 0.0);
    }

    #[test]
    fn fig4_ee_susceptible() {
        let x = endemic_equilibrium(&fig4(), EeMode::Exact).unwrap();
        assert!((x.s - 1.0 / 1.520_833_333_333_333_3).abs() < 1e-15);
        assert!((x.s - 0.657_534_246_575_342_4).abs() < 1e-15);
        let d = derivative(&fig4(), &x);
        assert!(d.max_abs() < 1e-17, "{d:?}");
    }

    #[test]
    fn ee_is_order_eps_and_below_simplified_bounds() {
        let p = fig4();
        let e = endemic_equilibrium(&p, EeMode::Exact).unwrap();
        let s = endemic_equilibrium(&p, EeMode::Simplified).unwrap();
        let amp = p.eps() * (1.0 - 1.0 / r0(&p));
        assert!((s.i - amp * 0.65 / 0.6).abs() < 1e-17);
        assert!((s.c - amp * 0.35 / 0.8).abs() < 1e-17);
        assert!((s.h - amp * 0.35 / 0.4).abs() < 1e-17);
        assert!(e.i <= s.i && e.c <= s.c && e.h <= s.h);
        assert!((e.c - s.c).abs() / s.c < 5.0 * p.eps());
        assert_eq!(e.s, s.s);
    }

    #[test]
    fn ee_errors() {
        let p = ModelParams::new(0.5, 0.35, 0.6, 0.8, 0.4, 0.01).unwrap();
        assert!(matches!(
            endemic_equilibrium(&p, EeMode::Exact),
            Err(Error::NoEndemicEquilibrium { .. })
        ));
        let p0 = fig4().with_theta(0.0).unwrap();
        assert_eq!(endemic_equilibrium(&p0, EeMode::Exact), Err(Error::DegenerateTheta));
        assert_eq!(ee_charpoly_coeffs(&p0), Err(Error::DegenerateTheta));
    }

    #[test]
    fn charpoly_positive_and_verdict() {
        let q = ee_charpoly_coeffs(&fig4()).unwrap();
        assert!(q.a > 0.0 && q.b > 0.0 && q.c > 0.0);
        assert!(q.at_minus_a() < 0.0);
        let ev = ee_eigenvalues(&fig4()).unwrap();
        assert!(ev.iter().all(|z| z.re < 0.0));
        for z in &ev[1..] {
            assert!(q.eval(*z).norm() < 1e-14);
        }
    }

    #[test]
    fn charpoly_c_vanishes_at_threshold() {
        let base = fig4();
        let b_crit = transcritical_beta(&base);
        let mut prev = f64::INFINITY;
        for d in [1e-1, 1e-2, 1e-4, 1e-8] {
            let q = ee_charpoly_coeffs(&base.with_beta(b_crit * (1.0 + d)).unwrap()).unwrap();
            assert!(q.c > 0.0 && q.c < prev);
            prev = q.c;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn cubic_roots_three_real() {
        // (x+1)(x+2)(x+3)
        let q = CharPoly {
            a: 6.0,
            b: 11.0,
            c: 6.0,
        };
        let mut re: Vec<f64> = q.roots().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (r, e) in re.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_star_values() {
        let p = ModelParams::new(0.7, 0.3, 0.6, 0.8, 0.4, 0.01).unwrap();
        let ts = theta_star(&p).unwrap();
        assert!((ts - 4.0 / 7.0).abs() < 1e-15);
        assert!((r0(&p.with_theta(ts).unwrap()) - 1.0).abs() < 1e-12);

        let fast = p.with_beta(0.9).unwrap();
        assert_eq!(theta_star(&fast), Err(NoThetaStar::AlwaysEpidemic));
        let none = p.with_beta(0.5).unwrap();
        assert_eq!(theta_star(&none), Err(NoThetaStar::NoEpidemic));
        let eq = ModelParams::new(0.7, 0.3, 0.6, 0.6, 0.4, 0.01).unwrap();
        assert_eq!(theta_star(&eq), Err(NoThetaStar::ThetaIndependent));
    }

    #[test]
    fn report_invariants() {
        let rep = equilibrium_report(&fig4());
        assert!(!rep.dfe_stable);
        assert_eq!(rep.ee.unwrap().s, 1.0 / rep.r0);
        assert_eq!(rep.ee_locally_stable, Some(true));
        assert!(rep.theta_star.is_none());

        let rep = equilibrium_report(&fig4().with_beta(0.5).unwrap());
        assert!(rep.dfe_stable && rep.ee.is_none());
        assert!(rep.ee_locally_stable.is_none());
    }

    #[test]
    fn bifurcation_branches() {
        let base = fig4();
        let bc = transcritical_beta(&base);
        let grid: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
        let br = bifurcation_diagram(&base, &grid).unwrap();
        let dfe = &br[0];
        let ee = &br[1];
        assert_eq!(dfe.points.len(), grid.len());
        let flips = dfe.points.windows(2).filter(|w| w[0].stable != w[1].stable).count();
        assert_eq!(flips, 1);
        for w in dfe.points.windows(2) {
            if w[0].stable && !w[1].stable {
                assert!(w[0].beta < bc && w[1].beta > bc);
            }
        }
        assert!(ee.points.iter().all(|pt| pt.beta > bc && pt.stable));
        let first = ee.points[0].scaled.unwrap();
        for pt in &ee.points {
            let sc = pt.scaled.unwrap();
            for k in 0..3 {
                assert!((sc[k] - first[k]).abs() <= 1e-12 * first[k].abs());
            }
        }
        for w in ee.points.windows(2) {
            assert!(w[1].state.s < w[0].state.s);
        }
    }

    #[test]
    fn bifurcation_rejects_unsorted_grid() {
        assert!(bifurcation_diagram(&fig4(), &[1.0, 0.5]).is_err());
    }
}
