//! Dormand–Prince 5(4) integrator shared by the real level-parameter
//! systems, the complex continuation in `s`, and the orbit simulator.

use std::ops::{Add, ControlFlow, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars the integrator can carry.
pub trait OdeScalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn modulus(self) -> f64;
}

impl OdeScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

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

// fifth-order weights minus the embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince 5(4) with FSAL and a mixed error norm.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub max_step: f64,
    last_step: Option<f64>,
    steps_taken: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 2_000_000,
            max_step: f64::INFINITY,
            last_step: None,
            steps_taken: 0,
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    /// Accepted steps over the lifetime of this integrator.
    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn integrate<T, F>(&mut self, f: F, t0: f64, y0: &[T], t1: f64) -> Result<Vec<T>>
    where
        T: OdeScalar,
        F: FnMut(f64, &[T], &mut [T]),
    {
        self.integrate_observed(f, t0, y0, t1, |_, _| ControlFlow::Continue(()))
            .map(|(_, y)| y)
    }

    /// Integrates from `t0` to `t1`, calling `observer` after every accepted
    /// step. The observer may stop the integration early; the returned pair
    /// is the time and state where integration ended.
    pub fn integrate_observed<T, F, O>(
        &mut self,
        mut f: F,
        t0: f64,
        y0: &[T],
        t1: f64,
        mut observer: O,
    ) -> Result<(f64, Vec<T>)>
    where
        T: OdeScalar,
        F: FnMut(f64, &[T], &mut [T]),
        O: FnMut(f64, &[T]) -> ControlFlow<()>,
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        if t1 == t0 {
            return Ok((t0, y));
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();

        let mut k1 = vec![T::default(); n];
        let mut k2 = vec![T::default(); n];
        let mut k3 = vec![T::default(); n];
        let mut k4 = vec![T::default(); n];
        let mut k5 = vec![T::default(); n];
        let mut k6 = vec![T::default(); n];
        let mut k7 = vec![T::default(); n];
        let mut tmp = vec![T::default(); n];
        let mut y_new = vec![T::default(); n];

        f(t0, &y, &mut k1);
        let mut step = match self.last_step {
            Some(s) => s.min(span),
            None => self.initial_step(&y, &k1, span),
        }
        .min(self.max_step);

        let mut t = t0;
        let mut count = 0usize;
        loop {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-15 * t1.abs().max(1.0) {
                break;
            }
            let last = step >= remaining;
            let h = if last { remaining } else { step } * dir;
            if step < 1e-15 * t.abs().max(span) {
                return Err(Error::StepUnderflow(t));
            }
            count += 1;
            if count > self.max_steps {
                return Err(Error::NonConvergence(format!(
                    "step budget of {} exhausted at t = {t}",
                    self.max_steps
                )));
            }

            for i in 0..n {
                tmp[i] = y[i] + k1[i] * (h * A21);
            }
            f(t + C2 * h, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            f(t + C3 * h, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            f(t + C4 * h, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            f(t + C5 * h, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            f(t + h, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            f(t + h, &y_new, &mut k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6
                    + k7[i] * E7)
                    * h;
                let sc = self.atol + self.rtol * y[i].modulus().max(y_new[i].modulus());
                let r = e.modulus() / sc;
                err += r * r;
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                step *= 0.25;
                continue;
            }

            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                self.steps_taken += 1;
                if !last {
                    self.last_step = Some(step);
                }
                if observer(t, &y).is_break() {
                    return Ok((t, y));
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                step = (step * fac).min(self.max_step);
                if last {
                    break;
                }
            } else {
                step *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        Ok((t, y))
    }

    fn initial_step<T: OdeScalar>(&self, y: &[T], dy: &[T], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in y.iter().zip(dy) {
            let sc = self.atol + self.rtol * yi.modulus();
            d0 += (yi.modulus() / sc).powi(2);
            d1 += (fi.modulus() / sc).powi(2);
        }
        let d0 = (d0 / y.len() as f64).sqrt();
        let d1 = (d1 / y.len() as f64).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span * 0.1).max(span * 1e-12)
    }
}
