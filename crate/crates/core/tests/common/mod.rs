#![allow(dead_code)]

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use sirsh::model::{derivative, ModelParams, State};

pub fn fig4() -> ModelParams {
    ModelParams::new(1.0, 0.35, 0.6, 0.8, 0.4, 0.01).unwrap()
}

pub fn fig5() -> ModelParams {
    ModelParams::new(1.0, 0.2, 0.2, 0.3, 0.15, 0.01).unwrap()
}

pub fn fig7() -> ModelParams {
    ModelParams::new(1.0, 0.35, 0.6, 0.6, 0.2, 0.01).unwrap()
}

pub fn case(beta: f64, gi: f64, gc: f64) -> ModelParams {
    ModelParams::new(beta, 0.5, gi, gc, 0.4, 0.01).unwrap()
}

/// Ordered parameter sets with moderate rates.
pub fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.05f64..3.0,
        0.0f64..=1.0,
        0.05f64..1.5,
        0.0f64..1.5,
        0.05f64..1.5,
        1e-4f64..0.05,
    )
        .prop_map(|(b, th, gi, d, gh, e)| ModelParams::new(b, th, gi, gi + d, gh, e).unwrap())
}

/// Ordered parameter sets with `R0 > 1` and `theta > 0`.
pub fn endemic_params() -> impl Strategy<Value = ModelParams> {
    (
        0.01f64..=1.0,
        0.05f64..1.5,
        0.0f64..1.5,
        0.05f64..1.5,
        1e-4f64..0.05,
        1.05f64..6.0,
    )
        .prop_map(|(th, gi, d, gh, e, target)| {
            let gc = gi + d;
            let rbar = (1.0 - th) / gi + th / gc;
            ModelParams::new(target / rbar, th, gi, gc, gh, e).unwrap()
        })
}

/// Points of the simplex.
pub fn simplex_point() -> impl Strategy<Value = State> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, d, r)| {
        let tot = a + b + c + d + r + 1e-12;
        State {
            s: a / tot,
            i: b / tot,
            c: c / tot,
            h: d / tot,
        }
    })
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_params(rng: &mut StdRng) -> ModelParams {
    let gi = rng.gen_range(0.05..1.5);
    let gc = gi + rng.gen_range(0.0..1.5);
    ModelParams::new(
        rng.gen_range(0.05..3.0),
        rng.gen_range(0.0..=1.0),
        gi,
        gc,
        rng.gen_range(0.05..1.5),
        rng.gen_range(1e-4..0.05),
    )
    .unwrap()
}

pub fn random_endemic_params(rng: &mut StdRng) -> ModelParams {
    let th: f64 = rng.gen_range(0.01..=1.0);
    let gi = rng.gen_range(0.05..1.5);
    let gc = gi + rng.gen_range(0.0..1.5);
    let rbar = (1.0 - th) / gi + th / gc;
    let target = rng.gen_range(1.05..6.0);
    ModelParams::new(
        target / rbar,
        th,
        gi,
        gc,
        rng.gen_range(0.05..1.5),
        rng.gen_range(1e-4..0.05),
    )
    .unwrap()
}

/// Spectral radius by a general eigen-solve.
pub fn spectral_radius(m: [[f64; 3]; 3]) -> f64 {
    let mat = Matrix3::from_fn(|r, c| m[r][c]);
    mat.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Central-difference Jacobian of the full vector field.
pub fn numerical_jacobian(p: &ModelParams, x: &State, h: f64) -> Matrix4<f64> {
    let base = x.to_array();
    Matrix4::from_fn(|r, c| {
        let mut xp = base;
        let mut xm = base;
        xp[c] += h;
        xm[c] -= h;
        let fp = derivative(p, &State::from_array(xp)).to_array();
        let fm = derivative(p, &State::from_array(xm)).to_array();
        (fp[r] - fm[r]) / (2.0 * h)
    })
}

pub fn eigenvalues4(m: &Matrix4<f64>) -> Vec<Complex64> {
    m.complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

/// Greedy matching distance between two eigenvalue multisets.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}

/// Composite Gauss–Legendre (5 nodes) quadrature of `f` over `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            X.iter().zip(W).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
        })
        .sum()
}

/// Coefficients `c1..c4` of `prod (x - z)` over four roots.
pub fn monic_quartic(roots: &[Complex64]) -> [f64; 4] {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for z in roots {
        let mut n = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, a) in c.iter().enumerate() {
            n[k] += a;
            n[k + 1] -= a * z;
        }
        c = n;
    }
    [c[1].re, c[2].re, c[3].re, c[4].re]
}

/// Ordered rates `gamma_i < gamma_c` with `beta` inside the band of case `n`.
pub fn random_case_params(rng: &mut StdRng, n: u8) -> ModelParams {
    let gi: f64 = rng.gen_range(0.1..1.0);
    let gc = gi * (1.0 + rng.gen_range(0.05..1.5));
    let u: f64 = rng.gen_range(0.01..0.99);
    let beta = match n {
        1 => gc * gc / gi * (1.0 + 2.0 * u),
        2 => gc + u * (gc * gc / gi - gc),
        3 => gi + u * (gc - gi),
        _ => gi * u,
    };
    ModelParams::new(beta, 0.5, gi, gc, rng.gen_range(0.1..1.0), 0.01).unwrap()
}

/// Argmax of `f` over `n + 1` equispaced points of `[0, 1]`, first on ties.
pub fn grid_argmax(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let mut best = (0.0, f(0.0));
    for j in 1..=n {
        let th = j as f64 / n as f64;
        let v = f(th);
        if v > best.1 {
            best = (th, v);
        }
    }
    best.0
}
