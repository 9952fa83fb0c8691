//! Cutoff functions `φ_n = η_n φ` with `φ = (r/R)^{−C₁t}` outside `B_R`, and
//! numerical probes of the two test-function inequalities behind the
//! nonexistence argument.
//!
//! The inequalities hold with an unspecified constant `C`, so each probe
//! reports both sides with `C = 1` and their ratio. What can be checked is
//! that the ratio stays bounded over a family of cutoffs.

use crate::error::{Error, Result};
use crate::growth::ExponentSet;
use crate::manifold::ModelManifold;
use crate::quadrature::integrate_ln;
use crate::radial::{RadialFunction, RadialMap, Side};

/// Below this `u` counts as zero, i.e. outside `Ω = {u > 0}`.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

const REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFamily {
    pub r: f64,
    pub c1: f64,
    /// `1/log R`.
    pub t: f64,
    pub n: u32,
    pub s: f64,
}

impl CutoffFamily {
    pub fn new(r: f64, c1: f64, n: u32, s: f64) -> Result<Self> {
        if !(r > std::f64::consts::E) {
            return Err(Error::Domain(format!("cutoff radius must exceed e, got {r}")));
        }
        if n == 0 {
            return Err(Error::Domain("cutoff scale n must be at least 1".into()));
        }
        if !(c1 > 0.0 && s > 0.0) {
            return Err(Error::Domain(format!("need C₁ > 0 and s > 0, got C₁ = {c1}, s = {s}")));
        }
        Ok(Self {
            r,
            c1,
            t: 1.0 / r.ln(),
            n,
            s,
        })
    }

    /// `(C₀ + p + 2)/(pσ)`.
    pub fn minimal_c1(c0: f64, exps: &ExponentSet) -> f64 {
        (c0 + exps.p + 2.0) / (exps.p * exps.sigma)
    }

    /// `pσ/(σ−p+1)`, doubled for the second lemma.
    pub fn minimal_s(exps: &ExponentSet, lemma: Lemma) -> f64 {
        let s = exps.p * exps.sigma / (exps.sigma - exps.p + 1.0);
        match lemma {
            Lemma::Energy => s,
            Lemma::Potential => 2.0 * s,
        }
    }

    fn ct(&self) -> f64 {
        self.c1 * self.t
    }

    fn outer(&self) -> f64 {
        2.0 * self.n as f64 * self.r
    }

    pub fn support(&self) -> f64 {
        self.outer()
    }

    pub fn phi(&self, r: f64) -> f64 {
        if r < self.r {
            1.0
        } else {
            (r / self.r).powf(-self.ct())
        }
    }

    pub fn eta(&self, r: f64) -> f64 {
        let nr = self.n as f64 * self.r;
        if r <= nr {
            1.0
        } else if r >= 2.0 * nr {
            0.0
        } else {
            2.0 - r / nr
        }
    }

    pub fn phi_n(&self, r: f64) -> f64 {
        self.eta(r) * self.phi(r)
    }

    pub fn ln_phi_n(&self, r: f64) -> f64 {
        if r >= self.outer() {
            return f64::NEG_INFINITY;
        }
        let ln_phi = if r < self.r { 0.0 } else { -self.ct() * (r / self.r).ln() };
        ln_phi + self.eta(r).ln()
    }

    /// One-sided radial derivative of `φ_n`.
    pub fn derivative(&self, r: f64, side: Side) -> f64 {
        let nr = self.n as f64 * self.r;
        let inside = |lo: f64, hi: f64| match side {
            Side::Left => r > lo && r <= hi,
            Side::Right => r >= lo && r < hi,
        };
        let dphi = if inside(self.r, f64::INFINITY) {
            -self.ct() * self.phi(r) / r
        } else {
            0.0
        };
        let deta = if inside(nr, 2.0 * nr) { -1.0 / nr } else { 0.0 };
        self.eta(r) * dphi + deta * self.phi(r)
    }

    /// `ln |∇φ_n|` away from the kinks.
    pub fn ln_gradient(&self, r: f64) -> f64 {
        let nr = self.n as f64 * self.r;
        if r <= self.r || r >= self.outer() {
            return f64::NEG_INFINITY;
        }
        let ln_phi = -self.ct() * (r / self.r).ln();
        if r <= nr {
            (self.ct() / r).ln() + ln_phi
        } else {
            ln_phi + (1.0 / nr + self.eta(r) * self.ct() / r).ln()
        }
    }

    /// Breakpoints of the family: `R`, `nR`, `2nR`.
    pub fn kinks(&self) -> [f64; 3] {
        let nr = self.n as f64 * self.r;
        [self.r, nr, 2.0 * nr]
    }

    /// Right minus left derivative of `φ_n` at `nR`.
    pub fn kink_jump(&self) -> f64 {
        let nr = self.n as f64 * self.r;
        self.derivative(nr, Side::Right) - self.derivative(nr, Side::Left)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    /// The gradient-energy inequality with `u^{−t−1}|∇u|^p`.
    Energy,
    /// The inequality bounding `∫ φ^s u^σ V` by three factors.
    Potential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityProbe {
    pub lhs: f64,
    pub rhs_without_c: f64,
    /// `lhs/rhs_without_c`, and 0 when both vanish.
    pub ratio: f64,
    pub omega_indicator: String,
    pub divergent: bool,
    /// The integrals entering the right side, before their powers.
    pub factors: Vec<f64>,
}

impl InequalityProbe {
    fn new(lhs: f64, rhs: f64, omega: String, factors: Vec<f64>) -> Self {
        let divergent = !(lhs.is_finite() && rhs.is_finite());
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self {
            lhs,
            rhs_without_c: rhs,
            ratio,
            omega_indicator: omega,
            divergent,
            factors,
        }
    }
}

struct Setup<'a> {
    man: &'a ModelManifold,
    v: &'a RadialMap,
    u: &'a RadialFunction,
    fam: &'a CutoffFamily,
    breaks: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(man: &'a ModelManifold, v: &'a RadialMap, u: &'a RadialFunction, fam: &'a CutoffFamily) -> Result<Self> {
        let (lo, hi) = u.range();
        if lo > 0.0 || hi < fam.support() {
            return Err(Error::Extrapolation {
                r: fam.support(),
                lo,
                hi,
            });
        }
        if u.min_value() < 0.0 {
            return Err(Error::Precondition(format!(
                "u must be nonnegative, min is {:e}",
                u.min_value()
            )));
        }
        let mut breaks: Vec<f64> = fam.kinks().to_vec();
        breaks.extend(u.seams());
        breaks.extend(man.psi().breakpoints());
        Ok(Self { man, v, u, fam, breaks })
    }

    fn omega(&self) -> String {
        let outside = self
            .u
            .nodes()
            .filter(|n| n.r > 0.0 && n.r < self.fam.support() && n.jet.value <= POSITIVITY_FLOOR)
            .count();
        if outside == 0 {
            format!("u > {POSITIVITY_FLOOR:e} at every node of the support, so χ_Ω ≡ 1")
        } else {
            format!("χ_Ω = 0 at {outside} nodes where u ≤ {POSITIVITY_FLOOR:e}")
        }
    }

    /// `∫_a^b exp(g(r, u, |u'|)) dμ` with `g` given in log space and zero off `Ω`
    /// when `needs_omega` is set.
    fn integral(&self, a: f64, b: f64, needs_omega: bool, g: impl Fn(f64, f64, f64) -> f64) -> Result<f64> {
        let ln_f = |r: f64| -> f64 {
            let jet = match self.u.jet(r) {
                Ok(j) => j,
                Err(_) => return f64::NAN,
            };
            if needs_omega && jet.value <= POSITIVITY_FLOOR {
                return f64::NEG_INFINITY;
            }
            g(r, jet.value.ln(), jet.d1.abs().ln()) + self.man.ln_density(r)
        };
        match integrate_ln(ln_f, a, b, &self.breaks, REL_TOL) {
            Ok(i) => Ok(i.value),
            Err(Error::Divergence { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    /// `∫ V^{−a}|∇φ|^b dμ` over the gradient support `[R, 2nR]`.
    fn gradient_integral(&self, v_power: f64, grad_power: f64) -> Result<f64> {
        self.integral(self.fam.r, self.fam.support(), false, |r, _, _| {
            -v_power * self.v.ln_eval(r) + grad_power * self.fam.ln_gradient(r)
        })
    }

    /// `∫_a^{2nR} φ^s u^σ V dμ`.
    fn potential_energy(&self, a: f64, s: f64, sigma: f64) -> Result<f64> {
        self.integral(a, self.fam.support(), true, |r, lu, _| {
            s * self.fam.ln_phi_n(r) + sigma * lu + self.v.ln_eval(r)
        })
    }
}

fn check_t(exps: &ExponentSet, t: f64, lemma: Lemma) -> Result<()> {
    let (p, sigma) = (exps.p, exps.sigma);
    let mut bound = f64::min(1.0, p - 1.0);
    if lemma == Lemma::Potential {
        bound = bound.min((sigma - p + 1.0) / (2.0 * (p - 1.0)));
    }
    if !(t > 0.0 && t < bound) {
        return Err(Error::Domain(format!("t must lie in (0, {bound}), got {t}")));
    }
    Ok(())
}

fn check_s(exps: &ExponentSet, fam: &CutoffFamily, lemma: Lemma) -> Result<()> {
    let s_min = CutoffFamily::minimal_s(exps, lemma);
    if fam.s < s_min * (1.0 - 1e-12) {
        return Err(Error::Domain(format!("s must be at least {s_min}, got {}", fam.s)));
    }
    Ok(())
}

/// Both sides of
/// `(t/p)∫ φ^s u^{−t−1}|∇u|^p χ_Ω + (1/p)∫ V u^{σ−t} φ^s
///   ≤ C t^{−(p−1)σ/(σ−p+1)} ∫ V^{−(p−t−1)/(σ−p+1)} |∇φ|^{p(σ−t)/(σ−p+1)}`
/// for `φ = φ_n` and `t = 1/log R`.
pub fn probe_lemma22(
    man: &ModelManifold,
    v: &RadialMap,
    exps: &ExponentSet,
    u: &RadialFunction,
    fam: &CutoffFamily,
) -> Result<InequalityProbe> {
    check_s(exps, fam, Lemma::Energy)?;
    check_t(exps, fam.t, Lemma::Energy)?;
    let st = Setup::new(man, v, u, fam)?;
    let (p, sigma, t, s) = (exps.p, exps.sigma, fam.t, fam.s);
    let gradient = st.integral(0.0, fam.support(), true, |r, lu, ldu| {
        s * fam.ln_phi_n(r) - (t + 1.0) * lu + p * ldu
    })?;
    let potential = st.integral(0.0, fam.support(), true, |r, lu, _| {
        s * fam.ln_phi_n(r) + (sigma - t) * lu + v.ln_eval(r)
    })?;
    let lhs = t / p * gradient + potential / p;
    let q = sigma - p + 1.0;
    let rhs_integral = st.gradient_integral((p - t - 1.0) / q, p * (sigma - t) / q)?;
    let rhs = t.powf(-(p - 1.0) * sigma / q) * rhs_integral;
    Ok(InequalityProbe::new(lhs, rhs, st.omega(), vec![rhs_integral]))
}

fn potential_factors(
    st: &Setup<'_>,
    exps: &ExponentSet,
    fam: &CutoffFamily,
) -> Result<(f64, [f64; 3], [f64; 3], f64)> {
    let (p, sigma, t) = (exps.p, exps.sigma, fam.t);
    let q = sigma - p + 1.0;
    let w = sigma - (t + 1.0) * (p - 1.0);
    let f1 = st.gradient_integral((t + 1.0) * (p - 1.0) / w, p * sigma / w)?;
    let f2 = st.gradient_integral((p - t - 1.0) / q, p * (sigma - t) / q)?;
    let f3 = st.potential_energy(fam.r, fam.s, sigma)?;
    let powers = [w / (p * sigma), (p - 1.0) / p, (t + 1.0) * (p - 1.0) / (p * sigma)];
    let coef = t.powf(-(p - 1.0) / p - (p - 1.0).powi(2) * sigma / (p * q));
    Ok((coef, [f1, f2, f3], powers, st.potential_energy(0.0, fam.s, sigma)?))
}

/// Both sides of
/// `∫ φ^s u^σ V ≤ C t^{−(p−1)/p−(p−1)²σ/(p(σ−p+1))} F₁^{(σ−(t+1)(p−1))/(pσ)} F₂^{(p−1)/p} F₃^{(t+1)(p−1)/(pσ)}`
/// where `F₁`, `F₃` are taken over `M ∖ K` with `K = {φ = 1} = B_R`.
pub fn probe_lemma23(
    man: &ModelManifold,
    v: &RadialMap,
    exps: &ExponentSet,
    u: &RadialFunction,
    fam: &CutoffFamily,
) -> Result<InequalityProbe> {
    check_s(exps, fam, Lemma::Potential)?;
    check_t(exps, fam.t, Lemma::Potential)?;
    let st = Setup::new(man, v, u, fam)?;
    let (coef, f, pw, lhs) = potential_factors(&st, exps, fam)?;
    let rhs = coef * f[0].powf(pw[0]) * f[1].powf(pw[1]) * f[2].powf(pw[2]);
    Ok(InequalityProbe::new(lhs, rhs, st.omega(), f.to_vec()))
}

/// The consequence with `F₃` absorbed into the left side:
/// `(∫ φ^s u^σ V)^{1−(t+1)(p−1)/(pσ)} ≤ C t^{…} F₂^{(p−1)/p} F₁^{(σ−(t+1)(p−1))/(pσ)}`.
pub fn probe_corollary(
    man: &ModelManifold,
    v: &RadialMap,
    exps: &ExponentSet,
    u: &RadialFunction,
    fam: &CutoffFamily,
) -> Result<InequalityProbe> {
    check_s(exps, fam, Lemma::Potential)?;
    check_t(exps, fam.t, Lemma::Potential)?;
    let st = Setup::new(man, v, u, fam)?;
    let (coef, f, pw, energy) = potential_factors(&st, exps, fam)?;
    let lhs = energy.powf(1.0 - pw[2]);
    let rhs = coef * f[0].powf(pw[0]) * f[1].powf(pw[1]);
    Ok(InequalityProbe::new(lhs, rhs, st.omega(), vec![f[0], f[1]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::critical_exponents;
    use crate::manifold::WarpingProfile;
    use crate::numerics::lattice::origin_mesh;
    use proptest::prelude::*;

    fn exps() -> ExponentSet {
        critical_exponents(2.0, 3.0).unwrap()
    }

    fn fam(r: f64, n: u32, s: f64) -> CutoffFamily {
        CutoffFamily::new(r, CutoffFamily::minimal_c1(1.0, &exps()), n, s).unwrap()
    }

    fn smooth_u(r_max: f64) -> RadialFunction {
        RadialFunction::from_fn(origin_mesh(r_max, 1e-4, 256), |r| {
            ((1.0 + r * r).powf(-0.5), -r * (1.0 + r * r).powf(-1.5))
        })
        .unwrap()
    }

    #[test]
    fn radius_must_exceed_e() {
        assert!(matches!(CutoffFamily::new(2.7, 1.0, 1, 3.0), Err(Error::Domain(_))));
        assert!(CutoffFamily::new(2.72, 1.0, 1, 3.0).is_ok());
    }

    #[test]
    fn plateau_and_support_edge() {
        let f = fam(100.0, 2, 3.0);
        assert_eq!(f.phi_n(50.0), 1.0);
        assert_eq!(f.derivative(50.0, Side::Left), 0.0);
        assert_eq!(f.derivative(50.0, Side::Right), 0.0);
        assert_eq!(f.phi_n(400.0), 0.0);
        assert_eq!(f.ln_phi_n(400.0), f64::NEG_INFINITY);
    }

    #[test]
    fn kink_at_n_r() {
        let f = fam(100.0, 4, 3.0);
        let ct = f.c1 * f.t;
        assert!((f.phi_n(400.0) - 4f64.powf(-ct)).abs() < 1e-15);
        let left = f.derivative(400.0, Side::Left);
        let right = f.derivative(400.0, Side::Right);
        assert!((left + ct * 4f64.powf(-ct) / 400.0).abs() < 1e-15);
        assert!((right - left + 4f64.powf(-ct) / 400.0).abs() < 1e-15);
        assert!((f.kink_jump() + 4f64.powf(-ct) / 400.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_closed_form() {
        let f = fam(1e3, 2, 3.0);
        let ct = f.c1 * f.t;
        for r in [1.5e3f64, 1.9e3] {
            let exact = ct * f.r.powf(ct) * r.powf(-ct - 1.0);
            assert!((f.ln_gradient(r).exp() / exact - 1.0).abs() < 1e-12);
            assert!((f.derivative(r, Side::Left) + exact).abs() < 1e-12 * exact);
        }
    }

    proptest! {
        #[test]
        fn cutoff_is_monotone_and_bounded(r0 in 3.0f64..1e6, n in 1u32..10, a in 0.0f64..30.0, b in 0.0f64..30.0) {
            let f = fam(r0, n, 3.0);
            let (x, y) = (a.min(b) * r0, a.max(b) * r0);
            prop_assert!(f.phi_n(x) >= f.phi_n(y));
            prop_assert!(f.phi_n(x) <= 1.0 && f.phi_n(y) >= 0.0);
            prop_assert!(f.phi(y) > 0.0);
            prop_assert!(f.phi_n(y) <= fam(r0, n + 1, 3.0).phi_n(y));
        }

        #[test]
        fn cutoff_is_lipschitz(r0 in 3.0f64..1e4, n in 1u32..5, a in 0.0f64..12.0, h in 1e-6f64..1e-2) {
            let f = fam(r0, n, 3.0);
            let x = a * r0;
            let lip = f.c1 * f.t / r0 + 1.0 / (n as f64 * r0);
            prop_assert!((f.phi_n(x + h * r0) - f.phi_n(x)).abs() <= lip * h * r0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_solution_has_zero_left_side() {
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let u = RadialFunction::from_fn(origin_mesh(1e4, 1e-3, 64), |_| (0.0, 0.0)).unwrap();
        let f = fam(1e3, 1, 6.0);
        let p22 = probe_lemma22(&man, &v, &exps(), &u, &f).unwrap();
        assert_eq!(p22.lhs, 0.0);
        assert_eq!(p22.ratio, 0.0);
        assert!(p22.rhs_without_c > 0.0);
        assert!(p22.omega_indicator.contains("χ_Ω = 0"));
        let p23 = probe_lemma23(&man, &v, &exps(), &u, &f).unwrap();
        assert_eq!(p23.lhs, 0.0);
        assert_eq!(p23.rhs_without_c, 0.0);
        assert_eq!(p23.ratio, 0.0);
    }

    #[test]
    fn euclidean_gradient_integral_closed_form() {
        // On [R, nR] only φ varies: ∫ (ct)^b R^{ct·b} r^{−(ct+1)b} 4π r² dr.
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let f = fam(1e3, 1000, 3.0);
        let u = smooth_u(3e6);
        let st = Setup::new(&man, &v, &u, &f).unwrap();
        let b: f64 = 3.0;
        let ct = f.c1 * f.t;
        let k = 3.0 - (ct + 1.0) * b;
        let nr: f64 = 1e6;
        let exact = 4.0 * std::f64::consts::PI * (ct.powf(b) * f.r.powf(ct * b)) * (nr.powf(k) - f.r.powf(k)) / k;
        let got = st.integral(f.r, nr, false, |r, _, _| b * f.ln_gradient(r)).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn admissibility_of_s_and_t() {
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let u = smooth_u(1e4);
        assert!(matches!(
            probe_lemma22(&man, &v, &exps(), &u, &fam(1e3, 1, 2.9)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            probe_lemma23(&man, &v, &exps(), &u, &fam(1e3, 1, 3.0)),
            Err(Error::Domain(_))
        ));
        assert!(probe_lemma23(&man, &v, &exps(), &u, &fam(1e3, 1, 6.0)).is_ok());
        assert!(matches!(
            probe_lemma22(&man, &v, &exps(), &u, &fam(1e4, 1, 3.0)),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn corollary_is_ordered_against_lemma() {
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let u = smooth_u(1e4);
        let f = fam(1e3, 1, 6.0);
        let l23 = probe_lemma23(&man, &v, &exps(), &u, &f).unwrap();
        let cor = probe_corollary(&man, &v, &exps(), &u, &f).unwrap();
        assert!(cor.ratio <= l23.ratio * (1.0 + 1e-9));
        assert!(l23.factors[2] <= l23.lhs);
    }

    #[test]
    fn left_side_decreases_in_s() {
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let u = smooth_u(1e4);
        let probes: Vec<_> = [3.0, 4.0, 6.0, 10.0]
            .iter()
            .map(|&s| probe_lemma22(&man, &v, &exps(), &u, &fam(1e3, 1, s)).unwrap())
            .collect();
        for w in probes.windows(2) {
            assert!(w[1].lhs <= w[0].lhs);
            assert!(w[1].rhs_without_c <= w[0].rhs_without_c);
        }
    }

    #[test]
    fn growing_n_increases_the_integrals() {
        let man = ModelManifold::new(3, WarpingProfile::euclidean()).unwrap();
        let v = RadialMap::constant(1.0);
        let u = smooth_u(1e5);
        let lhs: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|&n| probe_lemma22(&man, &v, &exps(), &u, &fam(1e3, n, 3.0)).unwrap().lhs)
            .collect();
        for w in lhs.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in lhs.windows(3) {
            assert!(w[2] - w[1] <= w[1] - w[0]);
        }
    }

    #[test]
    fn probes_are_stable_under_mesh_refinement() {
        let man = ModelManifold::new(3, WarpingProfile::hyperbolic()).unwrap();
        let v = RadialMap::new("1+1/(1+r)", |r: f64| 1.0 + 1.0 / (1.0 + r));
        let u = |pd| {
            RadialFunction::from_fn(origin_mesh(100.0, 1e-4, pd), |r| ((-r).exp(), -(-r).exp())).unwrap()
        };
        let (coarse, fine) = (u(2048), u(4096));
        let f = fam(20.0, 2, 6.0);
        for probe in [probe_lemma22, probe_lemma23, probe_corollary] {
            let a = probe(&man, &v, &exps(), &coarse, &f).unwrap();
            let b = probe(&man, &v, &exps(), &fine, &f).unwrap();
            assert!((a.ratio / b.ratio - 1.0).abs() < 1e-10, "{} vs {}", a.ratio, b.ratio);
        }
    }
}
