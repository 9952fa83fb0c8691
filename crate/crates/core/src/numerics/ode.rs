//! Dormand–Prince 5(4) integrator for small systems.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-15,
            max_steps: 200_000,
        }
    }
}

/// One accepted step, with the data needed for cubic Hermite dense output.
#[derive(Clone, Copy, Debug)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub dy0: [f64; N],
    pub dy1: [f64; N],
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolation of component `k` inside the step.
    pub fn dense(&self, k: usize, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y0[k] + h10 * h * self.dy0[k] + h01 * self.y1[k] + h11 * h * self.dy1[k]
    }
}

/// What the step observer wants the integrator to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 > t0`), handing every
/// accepted step to `observe`. Returns the state at the point where
/// integration ended (`t1`, or the end of the step on which `observe`
/// returned [`Control::Stop`]).
pub fn integrate<const N: usize, F, O>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    mut observe: O,
) -> Result<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Step<N>) -> Control,
{
    if t1 <= t0 {
        return Ok((t0, y0));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = t1 - t0;
    let mut h = initial_step(&y, &k1, span, opts);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Convergence(format!(
                "ODE integrator exceeded {} steps at t = {t:e}",
                opts.max_steps
            )));
        }
        let last = t + h >= t1 || t1 - (t + h) < 1e-12 * span;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Convergence(format!(
                    "ODE right-hand side is not finite near t = {t:e}"
                )));
            }
            continue;
        }
        if err <= 1.0 {
            let step = Step {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                dy0: k1,
                dy1: k7,
            };
            t = t_new;
            y = y_new;
            k1 = k7;
            if observe(&step) == Control::Stop {
                return Ok((t, y));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Convergence(format!(
                    "ODE step size underflow at t = {t:e}"
                )));
            }
        }
    }
    Ok((t, y))
}

fn initial_step<const N: usize>(y: &[f64; N], dy: &[f64; N], span: f64, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 = d0.max((y[i] / sc).abs());
        d1 = d1.max((dy[i] / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_over_many_periods() {
        let opts = OdeOptions::default();
        let (t, y) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            20.0,
            &opts,
            |_| Control::Continue,
        )
        .unwrap();
        assert_eq!(t, 20.0);
        assert!((y[0] - 20f64.sin()).abs() < 1e-10);
        assert!((y[1] - 20f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn observer_can_stop_at_sign_change() {
        let opts = OdeOptions::default();
        let mut crossing = None;
        integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &opts,
            |s| {
                if s.y1[0] <= 0.0 {
                    crossing = Some(*s);
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        let s = crossing.expect("cos crosses zero before t = 10");
        assert!(s.t0 < std::f64::consts::FRAC_PI_2 && s.t1 >= std::f64::consts::FRAC_PI_2);
        let mid = std::f64::consts::FRAC_PI_2;
        assert!(s.dense(0, mid).abs() < 1e-6);
    }
}
