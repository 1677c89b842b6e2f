mod common;

use approx::assert_relative_eq;
use common::*;
use proptest::prelude::*;
use sirsh::analysis::{
    bifurcation_diagram, dfe_eigenvalues, ee_eigenvalues, endemic_equilibrium, next_generation_matrix, r0, theta_star,
    transcritical_beta, EeMode,
};
use sirsh::model::{derivative, ModelParams, State};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ngm_spectral_radius_matches_r0(p in params()) {
        let rho = spectral_radius(next_generation_matrix(&p));
        prop_assert!((rho - r0(&p)).abs() < 1e-12 * r0(&p).max(1.0), "rho = {rho}, r0 = {}", r0(&p));
    }

    #[test]
    fn weighted_infective_lyapunov_identity(p in params(), x in simplex_point()) {
        let d = derivative(&p, &x);
        let lhs = d.i / p.gamma_i() + d.c / p.gamma_c();
        let rhs = (x.i + x.c) * (x.s * r0(&p) - 1.0);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + p.beta() / p.gamma_i()));
    }

    #[test]
    fn weighted_infective_decays_below_threshold(p in params(), x in simplex_point()) {
        prop_assume!(r0(&p) <= 1.0);
        let d = derivative(&p, &x);
        let lhs = d.i / p.gamma_i() + d.c / p.gamma_c();
        prop_assert!(lhs <= 1e-15);
    }

    #[test]
    fn r0_monotone_in_severity(p in params(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (rl, rh) = (r0(&p.with_theta(lo).unwrap()), r0(&p.with_theta(hi).unwrap()));
        prop_assert!(rh <= rl + 1e-14 * rl);
        let q = ModelParams::new_unordered(p.beta(), 0.0, p.gamma_c(), p.gamma_i(), p.gamma_h(), p.eps()).unwrap();
        let (ul, uh) = (r0(&q.with_theta(lo).unwrap()), r0(&q.with_theta(hi).unwrap()));
        prop_assert!(uh >= ul - 1e-14 * ul);
    }

    #[test]
    fn fast_transmission_is_always_epidemic(p in params(), extra in 0.0f64..2.0) {
        let q = p.with_beta(p.gamma_i() + p.gamma_c() + extra).unwrap();
        prop_assert!(r0(&q) > 1.0);
    }

    #[test]
    fn exact_endemic_equilibrium_is_an_equilibrium(p in endemic_params()) {
        let x = endemic_equilibrium(&p, EeMode::Exact).unwrap();
        let d = derivative(&p, &x);
        let flux = p.beta() * x.s * (x.i + x.c) + p.gamma_i() * x.i + p.gamma_c() * x.c + p.gamma_h() * x.h
            + p.eps() * x.r();
        prop_assert!(d.max_abs() <= 1e-12 * flux, "residual {} vs flux {flux}", d.max_abs());
        prop_assert!(x.i > 0.0 && x.c > 0.0 && x.h > 0.0 && x.in_simplex(1e-12));
    }

    #[test]
    fn simplified_equilibrium_is_first_order_accurate(p in endemic_params()) {
        let a = endemic_equilibrium(&p, EeMode::Exact).unwrap();
        let b = endemic_equilibrium(&p, EeMode::Simplified).unwrap();
        prop_assert_eq!(a.s, b.s);
        let rel = (a.c - b.c).abs() / a.c;
        let bound = p.eps() * (1.0 + p.gamma_c() / p.gamma_h() + p.gamma_c() / p.gamma_i() * (1.0 / p.theta() - 1.0))
            * p.theta() / p.gamma_c();
        prop_assert!(rel <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn dfe_eigenvalues_match_numerical_jacobian(p in params()) {
        let jac = numerical_jacobian(&p, &State::DFE, 1e-6);
        let numeric = eigenvalues4(&jac);
        let closed: Vec<_> = dfe_eigenvalues(&p).iter().map(|e| e.value).collect();
        prop_assert!(spectrum_distance(&closed, &numeric) < 1e-6);
    }

    #[test]
    fn ee_charpoly_truncation_is_second_order(p in endemic_params()) {
        // central differences are exact on a quadratic field up to rounding
        let gap = |eps: f64| {
            let q = p.with_eps(eps).unwrap();
            let x = endemic_equilibrium(&q, EeMode::Exact).unwrap();
            let exact = monic_quartic(&eigenvalues4(&numerical_jacobian(&q, &x, 1e-4)));
            let approx = monic_quartic(&ee_eigenvalues(&q).unwrap());
            exact.iter().zip(approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (g1, g2) = (gap(0.01), gap(0.005));
        prop_assume!(g1 > 1e-9);
        prop_assert!(g2 <= 0.3 * g1, "gap {g1:e} -> {g2:e}");
    }

    #[test]
    fn ee_charpoly_roots_match_jacobian(p in endemic_params()) {
        let p = p.with_eps(1e-4).unwrap();
        let x = endemic_equilibrium(&p, EeMode::Exact).unwrap();
        let numeric = eigenvalues4(&numerical_jacobian(&p, &x, 1e-4));
        let approx = ee_eigenvalues(&p).unwrap();
        prop_assert!(spectrum_distance(&approx, &numeric) < 1e-4);
    }

    #[test]
    fn theta_star_is_the_threshold(gi in 0.05f64..1.0, d in 0.05f64..1.0, u in 0.01f64..0.99) {
        let gc = gi + d;
        let p = ModelParams::new(gi + u * d, 0.0, gi, gc, 0.3, 0.01).unwrap();
        let ts = theta_star(&p).unwrap();
        prop_assert!(ts > 0.0 && ts < 1.0);
        prop_assert!((r0(&p.with_theta(ts).unwrap()) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn bifurcation_scaled_endemic_branch_is_constant() {
    let p = fig4();
    let bc = transcritical_beta(&p);
    assert_relative_eq!(r0(&p.with_beta(bc).unwrap()), 1.0, epsilon = 1e-14);
    let grid: Vec<f64> = (1..=80).map(|k| bc * (1.0 + 0.05 * k as f64)).collect();
    let branches = bifurcation_diagram(&p, &grid).unwrap();
    let ee = &branches[1].points;
    assert_eq!(ee.len(), grid.len());
    let first = ee[0].scaled.unwrap();
    for pt in ee {
        for (a, b) in pt.scaled.unwrap().iter().zip(first) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        assert!(pt.stable);
    }
    assert!(branches[0].points.iter().all(|pt| !pt.stable));
}

#[test]
fn ee_charpoly_roots_at_fig4() {
    let p = fig4();
    let x = endemic_equilibrium(&p, EeMode::Exact).unwrap();
    let numeric = eigenvalues4(&numerical_jacobian(&p, &x, 1e-4));
    assert!(spectrum_distance(&ee_eigenvalues(&p).unwrap(), &numeric) < 1e-4);
}
