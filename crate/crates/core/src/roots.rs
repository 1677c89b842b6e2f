//! Bracketed scalar root finding.
//!
//! The solver keeps a sign-changing bracket at all times. Each iteration
//! proposes a secant (false position) point; whenever that point fails to
//! shrink the bracket by at least half, the next iteration falls back to plain
//! bisection. Convergence is therefore never slower than bisection while the
//! secant steps give superlinear refinement on smooth residuals.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}] (f(a) = {fa}, f(b) = {fb})")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("non-finite residual {fx} at x = {x}")]
    NotFinite { x: f64, fx: f64 },
    #[error("no convergence after {0} iterations")]
    MaxIterations(usize),
}

/// Termination criteria; the solver stops when either test passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Stop once `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than `x_tol`.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            x_tol: 0.0,
            max_iter: 500,
        }
    }
}

impl Tolerance {
    pub fn residual(f_tol: f64) -> Self {
        Self {
            f_tol,
            ..Self::default()
        }
    }

    pub fn width(x_tol: f64) -> Self {
        Self {
            f_tol: 0.0,
            x_tol,
            ..Self::default()
        }
    }
}

/// Finds a root of `f` inside `[a, b]`, which must bracket a sign change.
pub fn find_root<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut f_lo = eval(&mut f, lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut f_hi = eval(&mut f, hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoSignChange {
            a: lo,
            b: hi,
            fa: f_lo,
            fb: f_hi,
        });
    }

    let mut bisect_next = false;
    for _ in 0..tol.max_iter {
        let width = hi - lo;
        let mut x = if bisect_next {
            lo + 0.5 * width
        } else {
            hi - f_hi * width / (f_hi - f_lo)
        };
        // stay strictly inside the bracket
        if !(x > lo && x < hi) {
            x = lo + 0.5 * width;
        }
        if x <= lo || x >= hi {
            // bracket has collapsed to adjacent floats
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }

        let fx = eval(&mut f, x)?;
        if fx.abs() <= tol.f_tol || fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let new_width = hi - lo;
        if new_width <= tol.x_tol {
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }
        bisect_next = !bisect_next && new_width > 0.5 * width;
    }
    Err(RootError::MaxIterations(tol.max_iter))
}

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64, RootError> {
    let fx = f(x);
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(RootError::NotFinite { x, fx })
    }
}
