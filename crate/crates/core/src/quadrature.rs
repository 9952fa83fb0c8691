//! Overflow-safe integrals of positive radial integrands: weighted ball and
//! annulus integrals, and improper tails such as `γ(r) = ∫_r^∞ dξ/(aS)`.

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::numerics::gauss_kronrod;
use crate::radial::RadialMap;

/// Largest `ln r` reached by improper integrals before extrapolating.
pub const LN_R_CAP: f64 = 690.0;

/// A positive integral reported both linearly and as a logarithm. `value`
/// is infinite or zero when the magnitude leaves the `f64` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogIntegral {
    pub value: f64,
    pub ln_value: f64,
    pub rel_error: f64,
}

impl LogIntegral {
    pub const ZERO: LogIntegral = LogIntegral {
        value: 0.0,
        ln_value: f64::NEG_INFINITY,
        rel_error: 0.0,
    };

    fn from_ln(ln_value: f64, rel_error: f64) -> Self {
        Self {
            value: ln_value.exp(),
            ln_value,
            rel_error,
        }
    }
}

/// Accumulates `Σ e^{l_k}` without overflow.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    shift: f64,
    sum: f64,
    err: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
            err: 0.0,
        }
    }

    fn add(&mut self, ln_term: f64, rel_err: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.shift {
            let scale = (self.shift - ln_term).exp();
            self.sum *= scale;
            self.err *= scale;
            self.shift = ln_term;
        }
        let t = (ln_term - self.shift).exp();
        self.sum += t;
        self.err += t * rel_err;
    }

    fn ln(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.shift + self.sum.ln()
        }
    }

    fn result(&self) -> LogIntegral {
        if self.sum == 0.0 {
            return LogIntegral::ZERO;
        }
        LogIntegral::from_ln(self.ln(), self.err / self.sum)
    }
}

const SAMPLES: usize = 64;
/// Largest change of `ln f` tolerated between neighbouring samples before a
/// piece is bisected.
const MAX_LN_STEP: f64 = 40.0;

/// `∫_a^b exp(ln_f)` on one smooth piece, shifted by the sampled maximum.
fn piece(
    ln_f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    acc: &mut LogSum,
    floor: f64,
    depth: u32,
) -> Result<()> {
    let mut shift = f64::NEG_INFINITY;
    let mut prev = f64::NAN;
    let mut steep = false;
    for k in 0..=SAMPLES {
        let x = a + (b - a) * k as f64 / SAMPLES as f64;
        let l = ln_f(x);
        if l.is_nan() {
            return Err(Error::Domain(format!("integrand undefined at r = {x:e}")));
        }
        if l.is_finite() && prev.is_finite() && (l - prev).abs() > MAX_LN_STEP {
            steep = true;
        }
        prev = l;
        shift = shift.max(l);
    }
    if shift == f64::NEG_INFINITY {
        return Ok(());
    }
    if shift == f64::INFINITY {
        return Err(Error::Divergence {
            a,
            b,
            detail: "integrand is infinite".into(),
        });
    }
    if shift + (b - a).ln() < acc.ln().max(floor) + rel_tol.ln() - 7.0 {
        return Ok(());
    }
    if steep && depth < 64 {
        let mid = 0.5 * (a + b);
        piece(ln_f, a, mid, rel_tol, acc, floor, depth + 1)?;
        return piece(ln_f, mid, b, rel_tol, acc, floor, depth + 1);
    }
    // exp(ln f) cannot be more accurate than the rounding of ln f itself.
    let tol = rel_tol.max(4.0 * f64::EPSILON * shift.abs());
    let res = gauss_kronrod::integrate(|x| (ln_f(x) - shift).exp(), a, b, tol, 0.0)?;
    if res.value > 0.0 {
        acc.add(shift + res.value.ln(), res.error / res.value);
    }
    Ok(())
}

/// Cut points for `[a, b]`: the given breakpoints plus decade boundaries.
fn cuts(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    let lo = if a > 0.0 { a.log10().floor() as i32 } else { 0 };
    let hi = b.log10().ceil() as i32;
    for k in lo..=hi {
        let x = 10f64.powi(k);
        if x > a && x < b {
            pts.push(x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_a^b f` given `ln f`, split at `breaks` and at every decade.
pub fn integrate_ln(
    ln_f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> Result<LogIntegral> {
    let mut acc = LogSum::new();
    accumulate(&ln_f, a, b, breaks, rel_tol, &mut acc, f64::NEG_INFINITY)?;
    Ok(acc.result())
}

/// Adds `∫_a^b f` to `acc`, skipping pieces negligible against `acc` or
/// against `e^floor`.
fn accumulate(
    ln_f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    acc: &mut LogSum,
    floor: f64,
) -> Result<()> {
    if a < b {
        for w in cuts(a, b, breaks).windows(2) {
            piece(ln_f, w[0], w[1], rel_tol, acc, floor, 0)?;
        }
    }
    Ok(())
}

/// `∫_a^∞ f` given `ln f`, for slowly decaying tails.
///
/// Works in `s = ln r` on doubling blocks `[s₀, 2s₀], [2s₀, 4s₀], …`, stops
/// early once three consecutive blocks are negligible, and otherwise
/// extrapolates the remainder past [`LN_R_CAP`] geometrically from the last
/// two block contributions. A block ratio of 0.95 or more is reported as
/// divergence.
pub fn integrate_ln_to_infinity(ln_f: impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> Result<LogIntegral> {
    let mut acc = LogSum::new();
    let mut s0 = a.ln();
    if s0 < 1.0 {
        let head = integrate_ln(&ln_f, a, std::f64::consts::E, &[], rel_tol)?;
        acc.add(head.ln_value, head.rel_error);
        s0 = 1.0;
    }
    let g = |s: f64| ln_f(s.exp()) + s;
    let mut blocks: Vec<f64> = Vec::new();
    let mut negligible = 0;
    let mut lo = s0;
    while 2.0 * lo <= LN_R_CAP {
        let hi = 2.0 * lo;
        let mut part = LogSum::new();
        accumulate(&g, lo, hi, &[], rel_tol, &mut part, acc.ln())?;
        let block = part.ln();
        acc.add(block, part.result().rel_error);
        blocks.push(block);
        if block == f64::NEG_INFINITY || block < acc.ln() + (rel_tol / 10.0).ln() {
            negligible += 1;
            let n = blocks.len();
            // Far out in r the integrand is often a difference of huge
            // logarithms, so stop as soon as the decay is clearly geometric.
            if n >= 2 && blocks[n - 1] - blocks[n - 2] < 0.5f64.ln() {
                let q = (blocks[n - 1] - blocks[n - 2]).exp();
                acc.add(blocks[n - 1] + q.ln() - (1.0 - q).ln(), 1.0);
                return Ok(acc.result());
            }
            if negligible >= 3 {
                return Ok(acc.result());
            }
        } else {
            negligible = 0;
        }
        lo = hi;
    }
    let n = blocks.len();
    if n < 2 {
        return Ok(acc.result());
    }
    let ln_q = blocks[n - 1] - blocks[n - 2];
    if !(ln_q < 0.95f64.ln()) {
        return Err(Error::Divergence {
            a,
            b: f64::INFINITY,
            detail: format!(
                "tail blocks in ln r shrink by a factor {:.4} only",
                ln_q.exp()
            ),
        });
    }
    let q = ln_q.exp();
    // Remainder ≈ c·q/(1 − q), assumed accurate to about its own size times q.
    let ln_rem = blocks[n - 1] + ln_q - (1.0 - q).ln();
    acc.add(ln_rem, q);
    Ok(acc.result())
}

/// Integration region for a weighted integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `B_outer ∖ B_inner`.
    Annulus { inner: f64, outer: f64 },
    Ball { radius: f64 },
    /// `M ∖ B_from`.
    Tail { from: f64 },
}

impl Region {
    /// The annulus `B_R ∖ B_{R/2}`.
    pub fn half_annulus(r: f64) -> Self {
        Region::Annulus {
            inner: 0.5 * r,
            outer: r,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Annulus { inner, outer } => inner > 0.0 && outer > inner,
            Region::Ball { radius } => radius > 0.0,
            Region::Tail { from } => from > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid region {self:?}")))
        }
    }
}

/// `∫_region V^e dμ` with `dμ = a dμ₀`.
#[derive(Clone, Copy, Debug)]
pub struct WeightedIntegralSpec<'a> {
    pub man: &'a ModelManifold,
    pub v: &'a RadialMap,
    pub exponent: f64,
    pub region: Region,
}

pub fn weighted_integral(spec: &WeightedIntegralSpec<'_>, rel_tol: f64) -> Result<LogIntegral> {
    if !(rel_tol > 1e-12 && rel_tol < 1e-2) {
        return Err(Error::Domain(format!("rel_tol {rel_tol:e} outside (1e-12, 1e-2)")));
    }
    spec.region.validate()?;
    let WeightedIntegralSpec { man, v, exponent, .. } = *spec;
    let ln_f = |r: f64| {
        let lv = if exponent == 0.0 { 0.0 } else { exponent * v.ln_eval(r) };
        lv + man.ln_density(r)
    };
    let breaks = man.psi().breakpoints();
    match spec.region {
        Region::Annulus { inner, outer } => integrate_ln(ln_f, inner, outer, &breaks, rel_tol),
        Region::Ball { radius } => integrate_ln(ln_f, 0.0, radius, &breaks, rel_tol),
        Region::Tail { from } => {
            let head_end = breaks.iter().copied().fold(from, f64::max);
            let head = integrate_ln(ln_f, from, head_end, &breaks, rel_tol)?;
            let tail = integrate_ln_to_infinity(ln_f, head_end, rel_tol)?;
            let mut acc = LogSum::new();
            acc.add(head.ln_value, head.rel_error);
            acc.add(tail.ln_value, tail.rel_error);
            Ok(acc.result())
        }
    }
}

/// `ln γ(r)` with `γ(r) = ∫_r^∞ dξ / (a S)(ξ)`.
///
/// Integrates decade by decade until three consecutive decades each add less
/// than `rel_tol/10` of the running total. Contributions that fail to shrink
/// for five consecutive decades mean the manifold is parabolic at this
/// weight, reported as [`Error::Nonparabolicity`].
pub fn tail_gamma_ln(man: &ModelManifold, r: f64, rel_tol: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("tail_gamma needs r > 0, got {r}")));
    }
    let ln_f = |x: f64| -man.ln_density(x);
    let breaks = man.psi().breakpoints();
    let mut acc = LogSum::new();
    let mut lo = r;
    let mut prev = f64::NEG_INFINITY;
    let mut growing = 0;
    let mut small = 0;
    let mut history: Vec<f64> = Vec::new();
    loop {
        let mut hi = 10f64.powf(lo.log10().floor() + 1.0);
        if hi <= lo * (1.0 + 1e-9) {
            hi *= 10.0;
        }
        if hi.ln() > LN_R_CAP {
            break;
        }
        let c = integrate_ln(ln_f, lo, hi, &breaks, rel_tol * 0.1)?.ln_value;
        acc.add(c, 0.0);
        let full_decade = (hi / lo - 10.0).abs() < 1e-9;
        if full_decade {
            if c >= prev {
                growing += 1;
                if growing >= 5 {
                    return Err(Error::Nonparabolicity(format!(
                        "per-decade contributions to ∫ dξ/(aS) stop decreasing beyond r = {lo:e}"
                    )));
                }
            } else {
                growing = 0;
            }
            prev = c;
            history.push(c);
        }
        if c < acc.ln() + (rel_tol / 10.0).ln() {
            small += 1;
            if small >= 3 {
                return Ok(acc.ln());
            }
        } else {
            small = 0;
        }
        lo = hi;
    }
    let n = history.len();
    if n < 2 {
        return Ok(acc.ln());
    }
    let ln_q = history[n - 1] - history[n - 2];
    if !(ln_q < 0.95f64.ln()) {
        return Err(Error::Nonparabolicity(format!(
            "∫ dξ/(aS) decays too slowly to extrapolate (decade ratio {:.4})",
            ln_q.exp()
        )));
    }
    let q = ln_q.exp();
    acc.add(history[n - 1] + ln_q - (1.0 - q).ln(), 0.0);
    Ok(acc.ln())
}

pub fn tail_gamma(man: &ModelManifold, r: f64, rel_tol: f64) -> Result<f64> {
    tail_gamma_ln(man, r, rel_tol).map(f64::exp)
}
