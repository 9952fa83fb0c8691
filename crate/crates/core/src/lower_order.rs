//! Inequalities with a zeroth-order term,
//! `(1/a) div(a∇u) + b u + V u^σ ≤ 0`, reduced to the weighted problem
//! `(1/(az²)) div(az²∇w) + V z^{σ−1} w^σ ≤ 0` through `w = u/z`, where
//! `z > 0` satisfies `(1/a) div(a∇z) + b z ≥ 0`.
//!
//! Only radial `b` is handled, so the lower bound `b₀` coincides with `b`
//! unless one is supplied separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counterexample::{residual_report, ResidualReport};
use crate::error::{Error, Result};
use crate::growth::{check_condition, Condition, ExponentSet, GrowthVerdict, HpParameters, RegionKind};
use crate::manifold::{potential_term, ModelManifold, WarpingProfile};
use crate::numerics::lattice::{log_mesh, origin_mesh, DEFAULT_PER_DECADE};
use crate::numerics::ode::{self, Control, OdeOptions};
use crate::radial::{RadialFunction, RadialMap};

/// Starting radius of the auxiliary shooting.
pub const START_RADIUS: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct LowerOrderProblem {
    pub man: ModelManifold,
    pub b: RadialMap,
    pub b0: RadialMap,
    pub v: RadialMap,
    pub sigma: f64,
}

impl LowerOrderProblem {
    pub fn new(man: ModelManifold, b: RadialMap, v: RadialMap, sigma: f64) -> Result<Self> {
        if !(sigma > 1.0) {
            return Err(Error::Domain(format!("σ must exceed 1, got {sigma}")));
        }
        Ok(Self {
            man,
            b0: b.clone(),
            b,
            v,
            sigma,
        })
    }

    /// Uses `b₀ ≤ b` for the auxiliary equation; checked on a log grid.
    pub fn with_lower_bound(mut self, b0: RadialMap) -> Result<Self> {
        for k in 0..=200 {
            let r = 1e-3 * 1e10f64.powf(k as f64 / 200.0);
            let (b, lo) = (self.b.eval(r), b0.eval(r));
            if !(b >= lo) {
                return Err(Error::Domain(format!("b₀ exceeds b at r = {r:e}: {lo} > {b}")));
            }
        }
        self.b0 = b0;
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    Constant,
}

/// Which curvature comparison the auxiliary function is paired with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComparisonCondition {
    /// Sectional curvature bounded above by the model's; `ζ` nondecreasing.
    A,
    /// Radial Ricci curvature bounded below by the model's; `ζ` nonincreasing.
    B,
}

#[derive(Clone, Debug)]
pub struct AuxiliarySolution {
    pub z: RadialFunction,
    pub monotone: Monotonicity,
    pub condition: ComparisonCondition,
    /// Smallest `(ψ^{m−1}ζ′)′ + b₀ψ^{m−1}ζ`, divided by `ψ^{m−1}`.
    pub min_residual: f64,
}

impl AuxiliarySolution {
    /// Wraps a given `z` after the positivity, monotonicity and inequality
    /// checks.
    pub fn from_function(prob: &LowerOrderProblem, z: RadialFunction) -> Result<Self> {
        if let Some(n) = z.nodes().find(|n| !(n.jet.value > 0.0)) {
            return Err(Error::Positivity { r: n.r });
        }
        let scale = z.nodes().map(|n| n.jet.d1.abs()).fold(0.0, f64::max);
        let slack = 1e-12 * scale;
        let up = z.nodes().all(|n| n.jet.d1 >= -slack);
        let down = z.nodes().all(|n| n.jet.d1 <= slack);
        let monotone = match (up, down) {
            (true, true) => Monotonicity::Constant,
            (true, false) => Monotonicity::NonDecreasing,
            (false, true) => Monotonicity::NonIncreasing,
            (false, false) => return Err(Error::Monotone),
        };
        let condition = if monotone == Monotonicity::NonIncreasing {
            ComparisonCondition::B
        } else {
            ComparisonCondition::A
        };
        let m1 = prob.man.dimension() as f64 - 1.0;
        let mut min_residual = f64::INFINITY;
        for n in z.nodes().filter(|n| n.r > 0.0) {
            let j = n.jet;
            let b0z = prob.b0.eval(n.r) * j.value;
            let res = j.d2 + prob.man.drift(n.r) * j.d1 + b0z;
            // −1e−8 |ψ^{m−1} b₀ ζ| − 1e−12, divided through by ψ^{m−1}.
            let floor = (-m1 * prob.man.psi().log_jet(n.r).ln).exp() * 1e-12;
            if res < -1e-8 * b0z.abs() - floor {
                return Err(Error::Verification {
                    r: n.r,
                    residual: res,
                    bound: -1e-8 * b0z.abs() - floor,
                });
            }
            min_residual = min_residual.min(res);
        }
        Ok(Self {
            z,
            monotone,
            condition,
            min_residual,
        })
    }

    pub fn admits(&self, condition: ComparisonCondition) -> bool {
        self.monotone == Monotonicity::Constant || self.condition == condition
    }

    pub fn as_map(&self) -> RadialMap {
        RadialMap::from_sampled("z", self.z.clone())
    }
}

/// Shoots `ζ'' + (ln aS)'ζ' + b₀ζ = 0` outward from `r = 10⁻⁶` and samples it
/// on a mesh of `[0, r_max]`. With `z0prime = 0` the start uses the regular
/// series `ζ ≈ z0(1 − b₀(0)r²/(2m))`.
pub fn solve_auxiliary(prob: &LowerOrderProblem, z0: f64, z0prime: f64, r_max: f64) -> Result<AuxiliarySolution> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("z0 must be positive, got {z0}")));
    }
    if !(r_max > 1e3 * START_RADIUS) {
        return Err(Error::Domain(format!("r_max too small: {r_max}")));
    }
    let man = &prob.man;
    let b0 = &prob.b0;
    let f = |r: f64, y: &[f64; 2]| [y[1], -man.drift(r) * y[1] - b0.eval(r) * y[0]];
    let r0 = START_RADIUS;
    let mut state = if z0prime == 0.0 {
        let m = man.dimension() as f64;
        let c = b0.eval(0.0);
        [z0 * (1.0 - c * r0 * r0 / (2.0 * m)), -z0 * c * r0 / m]
    } else {
        [z0, z0prime]
    };
    let opts = OdeOptions::default();
    let mesh = origin_mesh(r_max, 1e-7, DEFAULT_PER_DECADE);
    let mut values = vec![if z0prime == 0.0 { z0 } else { z0 - z0prime * r0 }];
    let mut slopes = vec![if z0prime == 0.0 { 0.0 } else { z0prime }];
    let mut r = r0;
    for &next in &mesh[1..] {
        let mut crossing = None;
        let (_, y) = ode::integrate(f, r, state, next, &opts, |step| {
            if step.y1[0] <= 0.0 {
                let frac = step.y0[0] / (step.y0[0] - step.y1[0]);
                crossing = Some(step.t0 + frac * (step.t1 - step.t0));
                Control::Stop
            } else {
                Control::Continue
            }
        })?;
        if let Some(rc) = crossing {
            return Err(Error::Positivity { r: rc });
        }
        state = y;
        r = next;
        values.push(y[0]);
        slopes.push(y[1]);
    }
    if !(values[0] > 0.0) {
        return Err(Error::Positivity { r: 0.0 });
    }
    AuxiliarySolution::from_function(prob, RadialFunction::new(mesh, values, slopes)?)
}

/// `w = u/z` with `w′ = (u′z − uz′)/z²`, on the nodes of `u`.
pub fn quotient_transform(_prob: &LowerOrderProblem, z: &AuxiliarySolution, u: &RadialFunction) -> Result<RadialFunction> {
    if u.min_value() < 0.0 {
        return Err(Error::Precondition(format!("u must be nonnegative, min is {:e}", u.min_value())));
    }
    let z_max = z.z.nodes().map(|n| n.jet.value).fold(0.0, f64::max);
    let mut pieces = Vec::with_capacity(u.segments().len());
    for seg in u.segments() {
        let mut vals = Vec::with_capacity(seg.mesh().len());
        let mut ders = Vec::with_capacity(seg.mesh().len());
        for ((&r, &uv), &du) in seg.mesh().iter().zip(seg.values()).zip(seg.derivatives()) {
            let zj = z.z.jet(r)?;
            if zj.value < 1e-12 * z_max {
                return Err(Error::Conditioning(format!(
                    "z = {:e} at r = {r:e} is below 1e-12 of its maximum {z_max:e}",
                    zj.value
                )));
            }
            vals.push(uv / zj.value);
            ders.push((du * zj.value - uv * zj.d1) / (zj.value * zj.value));
        }
        pieces.push((seg.mesh().to_vec(), vals, ders));
    }
    RadialFunction::piecewise(pieces, u.interpolation())
}

/// Nodal residual `u'' + (ln aS)'u' + b u + V u^σ` of the original problem.
pub fn original_residual(prob: &LowerOrderProblem, u: &RadialFunction, tol: f64) -> Result<ResidualReport> {
    residual_report(u, tol, |r, j| {
        let potential = potential_term(&prob.v, prob.sigma, r, j.value);
        (j.d2 + prob.man.drift(r) * j.d1 + prob.b.eval(r) * j.value + potential, potential)
    })
}

/// Nodal residual `w'' + ((ln aS)' + 2z'/z)w' + V z^{σ−1} w^σ` of the weighted
/// problem.
pub fn weighted_residual(prob: &LowerOrderProblem, z: &AuxiliarySolution, w: &RadialFunction, tol: f64) -> Result<ResidualReport> {
    residual_report(w, tol, |r, j| {
        let zj = match z.z.jet(r) {
            Ok(zj) => zj,
            Err(_) => return (f64::NAN, f64::NAN),
        };
        let potential = potential_term(&prob.v, prob.sigma, r, j.value) * zj.value.powf(prob.sigma - 1.0);
        let drift = prob.man.drift(r) + 2.0 * zj.d1 / zj.value;
        (j.d2 + drift * j.d1 + potential, potential)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prop42Variant {
    /// Ball bound with `V^{−β+ε}` and log power `k < β`.
    I { c0: f64, k: f64 },
    /// Ball bounds with `V^{−β±ε}` and log power `β`.
    II { c0: f64 },
    /// Outer annuli `B_{2R} ∖ B_R` with the factor `e^{−εθ(log R)^τ}`.
    III { c0: f64, k: f64, theta: f64, tau: f64 },
}

/// The weighted growth conditions, i.e. the plain ones with measure density
/// `a z²` and `p = 2`.
pub fn check_prop42(prob: &LowerOrderProblem, z: &RadialMap, exps: &ExponentSet, variant: Prop42Variant) -> Result<GrowthVerdict> {
    if exps.p != 2.0 {
        return Err(Error::Domain(format!("the weighted conditions need p = 2, got {}", exps.p)));
    }
    let weight = prob.man.weight().product(&z.product(z));
    let man = prob.man.clone().with_weight(weight)?;
    let params = match variant {
        Prop42Variant::I { c0, k } => HpParameters {
            region: RegionKind::Ball,
            ..HpParameters::new(Condition::Hp1, c0, k)
        },
        Prop42Variant::II { c0 } => HpParameters {
            region: RegionKind::Ball,
            ..HpParameters::new(Condition::Hp2, c0, exps.beta)
        },
        Prop42Variant::III { c0, k, theta, tau } => HpParameters {
            region: RegionKind::OuterAnnulus,
            ..HpParameters::hp3(c0, k, theta, tau)
        },
    };
    check_condition(&man, &prob.v, exps, &params)
}

/// One case of the randomized agreement suite.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientCase {
    pub hyperbolic: bool,
    pub sigma: f64,
    /// `z = (1+r)^q`.
    pub q: f64,
    /// `w = A(1+r)^{−κ}`.
    pub amplitude: f64,
    pub kappa: f64,
    /// `V = v0 (1+r)^{−ν}`.
    pub v0: f64,
    pub nu: f64,
    pub original_pass: bool,
    pub weighted_pass: bool,
}

impl QuotientCase {
    pub fn agrees(&self) -> bool {
        self.original_pass == self.weighted_pass
    }
}

/// Draws `cases` smooth positive pairs `u = z w` on `[0.1, 50]` with
/// `z = (1+r)^q` solving the auxiliary equation with equality for
/// `b = −(z'' + (ln S)'z')/z`, and records both supersolution verdicts.
pub fn quotient_suite(seed: u64, cases: usize) -> Result<Vec<QuotientCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for i in 0..cases {
        let hyperbolic = i % 2 == 1;
        let sigma = rng.gen_range(1.5..3.0);
        let q: f64 = rng.gen_range(-0.5..0.5);
        let kappa = rng.gen_range(0.0..(1.0 + 2.0 * q)).max(1e-3);
        let amplitude = 10f64.powf(rng.gen_range(-3.0..2.0));
        let v0 = 10f64.powf(rng.gen_range(-1.0..1.0));
        let nu = rng.gen_range(0.0..2.0);
        let psi = if hyperbolic {
            WarpingProfile::hyperbolic()
        } else {
            WarpingProfile::euclidean()
        };
        let man = ModelManifold::new(3, psi)?;
        let (mb, bq) = (man.clone(), q);
        let b = RadialMap::new("-Lz/z", move |r: f64| {
            let d1 = bq / (1.0 + r);
            let d2 = bq * (bq - 1.0) / (1.0 + r).powi(2);
            -(d2 + mb.drift(r) * d1)
        });
        let v = RadialMap::new("v0(1+r)^-nu", move |r: f64| v0 * (1.0 + r).powf(-nu))
            .with_ln(move |r: f64| v0.ln() - nu * r.ln_1p());
        let prob = LowerOrderProblem::new(man, b, v, sigma)?;
        let mesh = log_mesh(0.1, 50.0, 512);
        let z = RadialFunction::from_fn(mesh.clone(), |r| ((1.0 + r).powf(q), q * (1.0 + r).powf(q - 1.0)))?;
        let z = AuxiliarySolution::from_function(&prob, z)?;
        let u = RadialFunction::from_fn(mesh, |r| {
            let (zz, dz) = ((1.0 + r).powf(q), q * (1.0 + r).powf(q - 1.0));
            let (w, dw) = (amplitude * (1.0 + r).powf(-kappa), -kappa * amplitude * (1.0 + r).powf(-kappa - 1.0));
            (zz * w, dz * w + zz * dw)
        })?;
        let w = quotient_transform(&prob, &z, &u)?;
        let original_pass = original_residual(&prob, &u, 1e-8)?.pass;
        let weighted_pass = weighted_residual(&prob, &z, &w, 1e-8)?.pass;
        out.push(QuotientCase {
            hyperbolic,
            sigma,
            q,
            amplitude,
            kappa,
            v0,
            nu,
            original_pass,
            weighted_pass,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::verify_supersolution;
    use crate::growth::critical_exponents;
    use crate::presets::ExamplePreset;

    fn euclid() -> ModelManifold {
        ModelManifold::new(3, WarpingProfile::euclidean()).unwrap()
    }

    #[test]
    fn zero_potential_gives_constant_auxiliary() {
        let prob = LowerOrderProblem::new(euclid(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        let aux = solve_auxiliary(&prob, 2.5, 0.0, 100.0).unwrap();
        assert_eq!(aux.monotone, Monotonicity::Constant);
        assert!(aux.admits(ComparisonCondition::A) && aux.admits(ComparisonCondition::B));
        assert!(aux.z.nodes().all(|n| n.jet.value == 2.5));
    }

    #[test]
    fn negative_lower_order_term_gives_increasing_auxiliary() {
        let b = RadialMap::new("-2/(1+r)^2", |r: f64| -2.0 / (1.0 + r).powi(2));
        let prob = LowerOrderProblem::new(euclid(), b, RadialMap::constant(1.0), 2.0).unwrap();
        let aux = solve_auxiliary(&prob, 1.0, 0.0, 1e3).unwrap();
        assert_eq!(aux.monotone, Monotonicity::NonDecreasing);
        assert_eq!(aux.condition, ComparisonCondition::A);
        assert!(aux.z.min_value() > 0.0);
        // Independent centered differences on the nodal values.
        let nodes: Vec<_> = aux.z.nodes().filter(|n| n.r >= 1.0).collect();
        for i in (1..nodes.len() - 1).step_by(397) {
            let (a, b, c) = (&nodes[i - 1], &nodes[i], &nodes[i + 1]);
            let (h1, h2) = (b.r - a.r, c.r - b.r);
            let d2 = 2.0 * (a.jet.value * h2 - b.jet.value * (h1 + h2) + c.jet.value * h1) / (h1 * h2 * (h1 + h2));
            let d1 = (c.jet.value - a.jet.value) / (h1 + h2);
            let res = d2 + 2.0 / b.r * d1 - 2.0 / (1.0 + b.r).powi(2) * b.jet.value;
            assert!(res.abs() < 1e-4 * (2.0 / (1.0 + b.r).powi(2) * b.jet.value), "r = {}: {res}", b.r);
        }
    }

    #[test]
    fn oscillating_auxiliary_is_rejected() {
        let man = ModelManifold::new(3, WarpingProfile::hyperbolic()).unwrap();
        let prob = LowerOrderProblem::new(man, RadialMap::constant(5.0), RadialMap::constant(1.0), 2.0).unwrap();
        assert!(matches!(solve_auxiliary(&prob, 1.0, 0.0, 50.0), Err(Error::Positivity { .. })));
    }

    #[test]
    fn auxiliary_reproduces_power_law() {
        let q = 0.3;
        let man = euclid();
        let b = RadialMap::new("-Lz/z", move |r: f64| -(q * (q - 1.0) / (1.0 + r).powi(2) + 2.0 / r * q / (1.0 + r)));
        let prob = LowerOrderProblem::new(man, b, RadialMap::constant(1.0), 2.0).unwrap();
        let r0 = START_RADIUS;
        let aux = solve_auxiliary(&prob, (1.0 + r0).powf(q), q * (1.0 + r0).powf(q - 1.0), 100.0).unwrap();
        for r in [0.5, 5.0, 50.0, 100.0] {
            let z = aux.z.value(r).unwrap();
            assert!((z / (1.0 + r).powf(q) - 1.0).abs() < 1e-8, "r = {r}: {z}");
        }
    }

    #[test]
    fn non_monotone_auxiliary_is_reported() {
        let z = RadialFunction::from_fn(log_mesh(0.1, 10.0, 64), |r| (2.0 + r.sin(), r.cos())).unwrap();
        let prob = LowerOrderProblem::new(euclid(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        assert!(matches!(AuxiliarySolution::from_function(&prob, z), Err(Error::Monotone)));
    }

    #[test]
    fn lower_bound_must_stay_below_b() {
        let prob = LowerOrderProblem::new(euclid(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        assert!(prob.clone().with_lower_bound(RadialMap::constant(-1.0)).is_ok());
        assert!(prob.with_lower_bound(RadialMap::constant(0.5)).is_err());
    }

    #[test]
    fn tiny_auxiliary_is_ill_conditioned() {
        let prob = LowerOrderProblem::new(euclid(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        let z = RadialFunction::from_fn(log_mesh(0.1, 100.0, 64), |r| ((-r).exp(), -(-r).exp())).unwrap();
        let z = AuxiliarySolution {
            z,
            monotone: Monotonicity::NonIncreasing,
            condition: ComparisonCondition::B,
            min_residual: 0.0,
        };
        let u = RadialFunction::from_fn(log_mesh(0.1, 100.0, 64), |_| (1.0, 0.0)).unwrap();
        assert!(matches!(quotient_transform(&prob, &z, &u), Err(Error::Conditioning(_))));
    }

    #[test]
    fn identity_transform_matches_plain_pipeline() {
        let p = ExamplePreset::example52();
        let man = p.manifold().clone();
        let u = RadialFunction::from_fn(log_mesh(0.5, 1e3, 256), |r| (1.0 / (1.0 + r), -1.0 / (1.0 + r).powi(2))).unwrap();
        let prob = LowerOrderProblem::new(man.clone(), RadialMap::constant(0.0), p.potential().clone(), p.sigma).unwrap();
        let one = RadialFunction::from_fn(log_mesh(0.5, 1e3, 256), |_| (1.0, 0.0)).unwrap();
        let z = AuxiliarySolution::from_function(&prob, one).unwrap();
        let w = quotient_transform(&prob, &z, &u).unwrap();
        let plain = verify_supersolution(&man, p.potential(), p.sigma, &u, 1e-8).unwrap();
        let first = original_residual(&prob, &u, 1e-8).unwrap();
        let second = weighted_residual(&prob, &z, &w, 1e-8).unwrap();
        for ((a, b), c) in plain.nodes.iter().zip(&first.nodes).zip(&second.nodes) {
            assert!((a.residual - b.residual).abs() <= 1e-12 * a.residual.abs().max(1e-300));
            assert!((a.residual - c.residual).abs() <= 1e-12 * a.residual.abs().max(1e-300));
        }
        assert_eq!(plain.pass, first.pass);
        assert_eq!(plain.pass, second.pass);
    }

    #[test]
    fn forced_positive_residual_for_w_equal_one() {
        let q = -0.2;
        let man = euclid();
        let b = RadialMap::new("-Lz/z", move |r: f64| -(q * (q - 1.0) / (1.0 + r).powi(2) + 2.0 / r * q / (1.0 + r)));
        let prob = LowerOrderProblem::new(man, b, RadialMap::constant(1.0), 2.0).unwrap();
        let z = RadialFunction::from_fn(log_mesh(0.1, 50.0, 512), |r| ((1.0 + r).powf(q), q * (1.0 + r).powf(q - 1.0))).unwrap();
        let z = AuxiliarySolution::from_function(&prob, z).unwrap();
        let w = quotient_transform(&prob, &z, &z.z).unwrap();
        let rep = weighted_residual(&prob, &z, &w, 1e-8).unwrap();
        assert!(!rep.pass);
        for n in &rep.nodes {
            assert!((n.residual / n.potential - 1.0).abs() < 1e-8, "r = {}", n.r);
        }
        let orig = original_residual(&prob, &z.z, 1e-8).unwrap();
        assert!(!orig.pass);
    }

    #[test]
    fn randomized_verdicts_agree() {
        let cases = quotient_suite(0x5eed, 50).unwrap();
        assert_eq!(cases.len(), 50);
        for c in &cases {
            assert!(c.agrees(), "{c:?}");
        }
        assert!(cases.iter().any(|c| c.original_pass));
        assert!(cases.iter().any(|c| !c.original_pass));
    }

    #[test]
    fn unit_weight_matches_plain_growth_check() {
        let man = euclid();
        let exps = critical_exponents(2.0, 2.0).unwrap();
        let prob = LowerOrderProblem::new(man.clone(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        let weighted = check_prop42(&prob, &RadialMap::constant(1.0), &exps, Prop42Variant::I { c0: 1.0, k: 0.5 }).unwrap();
        let params = HpParameters {
            region: RegionKind::Ball,
            ..HpParameters::new(Condition::Hp1, 1.0, 0.5)
        };
        let plain = check_condition(&man, &RadialMap::constant(1.0), &exps, &params).unwrap();
        assert_eq!(weighted.holds, plain.holds);
        for (a, b) in weighted.branches.iter().zip(&plain.branches) {
            assert!((a.exponent - b.exponent).abs() <= 1e-12 * b.exponent.abs());
        }
    }

    #[test]
    fn power_weight_shifts_exponent() {
        let man = euclid();
        let exps = critical_exponents(2.0, 2.0).unwrap();
        let prob = LowerOrderProblem::new(man, RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        let q = 0.25;
        let z = RadialMap::new("(1+r)^q", move |r: f64| (1.0 + r).powf(q))
            .with_ln(move |r: f64| q * r.ln_1p())
            .with_derivative(move |r: f64| q * (1.0 + r).powf(q - 1.0));
        let base = check_prop42(&prob, &RadialMap::constant(1.0), &exps, Prop42Variant::I { c0: 1.0, k: 0.5 }).unwrap();
        let shifted = check_prop42(&prob, &z, &exps, Prop42Variant::I { c0: 1.0, k: 0.5 }).unwrap();
        for (a, b) in base.branches.iter().zip(&shifted.branches) {
            assert!((b.exponent - a.exponent - 2.0 * q).abs() < 1e-3, "{} vs {}", a.exponent, b.exponent);
        }
    }

    #[test]
    fn example51_unit_weight_fails_first_variant() {
        let p = ExamplePreset::example51();
        let prob = LowerOrderProblem::new(p.manifold().clone(), RadialMap::constant(0.0), p.potential().clone(), p.sigma).unwrap();
        let v = check_prop42(&prob, &RadialMap::constant(1.0), &p.exps, Prop42Variant::I { c0: 1.0, k: 0.99 * p.exps.beta }).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn weighted_conditions_need_p_two() {
        let prob = LowerOrderProblem::new(euclid(), RadialMap::constant(0.0), RadialMap::constant(1.0), 2.0).unwrap();
        let exps = critical_exponents(3.0, 4.0).unwrap();
        assert!(matches!(
            check_prop42(&prob, &RadialMap::constant(1.0), &exps, Prop42Variant::II { c0: 1.0 }),
            Err(Error::Domain(_))
        ));
    }
}
