//! Dormand–Prince 5(4) with the free fourth-order continuous extension.
//!
//! The stepper is generic over the state dimension and advances one accepted
//! step per call, handing back a [`DenseStep`] that can be interpolated
//! anywhere inside the step. Event location and output sampling are built on
//! top of that by the caller.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Step-size and tolerance settings for one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.coeffs[0]
    }

    pub fn end(&self) -> [f64; N] {
        let mut y = self.coeffs[0];
        for (yi, di) in y.iter_mut().zip(self.coeffs[1]) {
            *yi += di;
        }
        y
    }

    /// Interpolated state at `t` (meaningful for `t0 <= t <= t1`).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
    }

    /// Single component of [`DenseStep::eval`].
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.coeffs;
        c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
    }

    pub fn coefficients(&self) -> &[[f64; N]; 5] {
        &self.coeffs
    }
}

/// Adaptive stepper for `y' = f(t, y)`.
pub struct Stepper<F, const N: usize> {
    rhs: F,
    ctl: StepControl,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    steps: usize,
    rejected: usize,
}

impl<F, const N: usize> Stepper<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, t0: f64, y0: [f64; N], ctl: StepControl) -> Self {
        let k1 = rhs(t0, &y0);
        Self {
            rhs,
            ctl,
            t: t0,
            y: y0,
            k1,
            h: ctl.h_init.min(ctl.h_max),
            steps: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Replaces the current state (e.g. after clamping); the first stage is
    /// re-evaluated since the FSAL value no longer applies.
    pub fn reset_state(&mut self, y: [f64; N]) {
        self.y = y;
        self.k1 = (self.rhs)(self.t, &self.y);
    }

    /// Takes one accepted step without passing `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep<N>> {
        if self.steps >= self.ctl.max_steps {
            return Err(Error::StiffnessSuspected { t: self.t, h: self.h });
        }
        let f = &self.rhs;
        let (t, y, k1) = (self.t, self.y, self.k1);
        let mut h = self.h.min(self.ctl.h_max);
        let mut last_rejected = false;
        loop {
            let remaining = t_end - t;
            if h >= remaining {
                h = remaining;
            }
            if h <= 1e-14 * t.abs().max(1.0) || !h.is_finite() {
                return Err(Error::StiffnessSuspected { t, h });
            }

            let stage = |coef: &[(f64, &[f64; N])]| -> [f64; N] {
                std::array::from_fn(|i| y[i] + h * coef.iter().map(|(a, k)| a * k[i]).sum::<f64>())
            };
            let k2 = f(t + C2 * h, &stage(&[(A21, &k1)]));
            let k3 = f(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * h, &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(
                t + h,
                &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y1 = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t1 = if h == remaining { t_end } else { t + h };
            let k7 = f(t1, &y1);

            let mut acc = 0.0;
            for i in 0..N {
                let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.ctl.atol + self.ctl.rtol * y[i].abs().max(y1[i].abs());
                acc += (err / sc).powi(2);
            }
            let err = (acc / N as f64).sqrt();

            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                let fac = if last_rejected { fac.min(1.0) } else { fac };

                let mut coeffs = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y1[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    coeffs[0][i] = y[i];
                    coeffs[1][i] = dy;
                    coeffs[2][i] = bspl;
                    coeffs[3][i] = dy - h * k7[i] - bspl;
                    coeffs[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let dense = DenseStep { t0: t, h, coeffs };

                self.t = t1;
                self.y = y1;
                self.k1 = k7;
                // a step truncated at t_end says nothing about the natural size
                if h < remaining {
                    self.h = (h * fac).min(self.ctl.h_max);
                }
                self.steps += 1;
                return Ok(dense);
            }
            self.rejected += 1;
            last_rejected = true;
            h *= if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
        }
    }
}
