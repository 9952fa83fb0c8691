//! Recovery of small rationals from their nearest `f64`.

use num_rational::Rational64;

const MAX_DENOMINATOR: i64 = 1_000_000;

/// Returns the simplest fraction with denominator at most one million whose
/// nearest `f64` lies within a few ulps of `x`, if there is one.
pub fn snap(x: f64) -> Option<Rational64> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let tol = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
    let sign = if x < 0.0 { -1 } else { 1 };
    let target = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut rest = target;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e12 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > MAX_DENOMINATOR {
            return None;
        }
        if (p2 as f64 / q2 as f64 - target).abs() <= tol {
            return Some(Rational64::new(sign * p2, q2));
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            return None;
        }
        rest = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

pub fn to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}
