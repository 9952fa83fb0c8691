//! Critical exponents and empirical checks of the weighted volume-growth
//! conditions (HP1)–(HP3) and their pointwise sufficient conditions.
//!
//! A verdict is a certificate over finite `(R, ε)` grids, never a proof.

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::numerics::rational;
use crate::numerics::regression::fit_line;
use crate::quadrature::{weighted_integral, Region, WeightedIntegralSpec};
use crate::radial::RadialMap;

/// `p`, `σ` and the critical pair `α = pσ/(σ−p+1)`, `β = (p−1)/(σ−p+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentSet {
    pub p: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Exact values when `p` and `σ` are recognisable small rationals.
    pub alpha_exact: Option<Rational64>,
    pub beta_exact: Option<Rational64>,
}

pub fn critical_exponents(p: f64, sigma: f64) -> Result<ExponentSet> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1, got {p}")));
    }
    if !(sigma > p - 1.0) {
        return Err(Error::Domain(format!("σ must exceed p − 1 = {}, got {sigma}", p - 1.0)));
    }
    let exact = rational::snap(p).zip(rational::snap(sigma)).and_then(|(p, s)| {
        let one = Rational64::from_integer(1);
        let d = s.checked_sub(&p)?.checked_add(&one)?;
        let alpha = p.checked_mul(&s)?.checked_div(&d)?;
        let beta = p.checked_sub(&one)?.checked_div(&d)?;
        Some((alpha, beta))
    });
    let (alpha, beta) = match exact {
        Some((a, b)) => (rational::to_f64(a), rational::to_f64(b)),
        None => {
            let d = sigma - p + 1.0;
            (p * sigma / d, (p - 1.0) / d)
        }
    };
    Ok(ExponentSet {
        p,
        sigma,
        alpha,
        beta,
        alpha_exact: exact.map(|e| e.0),
        beta_exact: exact.map(|e| e.1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Hp1,
    Hp2,
    Hp3,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Hp1 => "HP1",
            Condition::Hp2 => "HP2",
            Condition::Hp3 => "HP3",
        }
    }
}

/// Which sets the integrals run over, as a function of `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// `B_R ∖ B_{R/2}`.
    HalfAnnulus,
    /// `B_R`.
    Ball,
    /// `B_{2R} ∖ B_R`.
    OuterAnnulus,
}

impl RegionKind {
    pub fn at(self, r: f64) -> Region {
        match self {
            RegionKind::HalfAnnulus => Region::half_annulus(r),
            RegionKind::Ball => Region::Ball { radius: r },
            RegionKind::OuterAnnulus => Region::Annulus { inner: r, outer: 2.0 * r },
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            RegionKind::HalfAnnulus => "annuli B_R \\ B_{R/2}",
            RegionKind::Ball => "balls B_R",
            RegionKind::OuterAnnulus => "annuli B_{2R} \\ B_R",
        }
    }
}

/// `10^2, 10^2.5, …, 10^7`.
pub fn default_r_grid() -> Vec<f64> {
    (0..=10).map(|k| 10f64.powf(2.0 + 0.5 * k as f64)).collect()
}

pub fn default_eps_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 5e-2]
}

#[derive(Clone, Debug, PartialEq)]
pub struct HpParameters {
    pub which: Condition,
    pub c0: f64,
    /// Log power; HP2 always uses `β`.
    pub k: f64,
    pub theta: f64,
    pub tau: f64,
    pub eps_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub region: RegionKind,
    pub slack: f64,
}

impl HpParameters {
    pub fn new(which: Condition, c0: f64, k: f64) -> Self {
        Self {
            which,
            c0,
            k,
            theta: 1.0,
            tau: 2.0,
            eps_grid: default_eps_grid(),
            r_grid: default_r_grid(),
            region: RegionKind::HalfAnnulus,
            slack: 0.05,
        }
    }

    pub fn hp3(c0: f64, k: f64, theta: f64, tau: f64) -> Self {
        Self {
            theta,
            tau,
            ..Self::new(Condition::Hp3, c0, k)
        }
    }
}

/// Fit of one inequality of a condition at one `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchFit {
    pub name: String,
    pub eps: f64,
    pub exponent: f64,
    pub exponent_bound: f64,
    pub log_power: f64,
    pub log_power_bound: f64,
    /// `max_R I(R)/bound(R)`.
    pub fitted_c: f64,
    pub holds: bool,
}

/// `ln bound − ln I` at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridResidual {
    pub branch: String,
    pub r: f64,
    pub eps: f64,
    pub ln_integral: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthVerdict {
    pub condition: String,
    pub holds: bool,
    pub fitted_alpha: f64,
    pub fitted_k: f64,
    pub fitted_c: f64,
    pub branches: Vec<BranchFit>,
    pub residuals: Vec<GridResidual>,
    pub notes: Vec<String>,
}

impl GrowthVerdict {
    pub fn branch(&self, name: &str) -> impl Iterator<Item = &BranchFit> + '_ {
        let name = name.to_string();
        self.branches.iter().filter(move |b| b.name == name)
    }

    /// True when every fit of the named branch holds.
    pub fn branch_holds(&self, name: &str) -> Option<bool> {
        let mut any = false;
        let mut all = true;
        for b in self.branch(name) {
            any = true;
            all &= b.holds;
        }
        any.then_some(all)
    }

    fn assemble(condition: String, branches: Vec<BranchFit>, residuals: Vec<GridResidual>, notes: Vec<String>) -> Self {
        let fold = |f: fn(&BranchFit) -> f64| branches.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        Self {
            condition,
            holds: !branches.is_empty() && branches.iter().all(|b| b.holds),
            fitted_alpha: fold(|b| b.exponent),
            fitted_k: fold(|b| b.log_power),
            fitted_c: fold(|b| b.fitted_c),
            branches,
            residuals,
            notes,
        }
    }

    fn divergent(condition: String, note: String) -> Self {
        Self {
            condition,
            holds: false,
            fitted_alpha: f64::INFINITY,
            fitted_k: f64::INFINITY,
            fitted_c: f64::INFINITY,
            branches: Vec::new(),
            residuals: Vec::new(),
            notes: vec![note],
        }
    }
}

fn validate_r_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 6 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > std::f64::consts::E) {
        return Err(Error::Domain(
            "R grid needs at least 6 increasing radii above e".into(),
        ));
    }
    if grid[grid.len() - 1] / grid[0] < 1e3 * (1.0 - 1e-12) {
        return Err(Error::Domain("R grid must span at least 3 decades".into()));
    }
    Ok(())
}

fn top_decade(grid: &[f64]) -> impl Fn(f64) -> bool {
    let top = grid[grid.len() - 1];
    move |r| r >= top / 10.0 * (1.0 - 1e-12)
}

/// One integral family `I(R) = ∫_{region(R)} V^{e} dμ` compared against
/// `C R^{a} (log R)^{k} e^{−h(R)}`.
struct Family<'a> {
    name: String,
    eps: f64,
    exponent_on_v: f64,
    a: f64,
    k: f64,
    /// `ln` of the extra decaying factor, added back before fitting.
    extra: &'a (dyn Fn(f64) -> f64 + Sync),
}

fn fit_family(
    man: &ModelManifold,
    v: &RadialMap,
    fam: &Family<'_>,
    r_grid: &[f64],
    region: RegionKind,
    slack: f64,
) -> Result<(BranchFit, Vec<GridResidual>)> {
    let ln_i: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| {
            weighted_integral(
                &WeightedIntegralSpec {
                    man,
                    v,
                    exponent: fam.exponent_on_v,
                    region: region.at(r),
                },
                1e-10,
            )
            .map(|i| i.ln_value)
        })
        .collect::<Result<_>>()?;
    let ln_r: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let lnln_r: Vec<f64> = ln_r.iter().map(|l| l.ln()).collect();
    let adj: Vec<f64> = ln_i.iter().zip(r_grid).map(|(l, &r)| l - (fam.extra)(r)).collect();

    let top = top_decade(r_grid);
    let (tx, ty): (Vec<f64>, Vec<f64>) = ln_r
        .iter()
        .zip(&adj)
        .zip(r_grid)
        .filter(|(_, &r)| top(r))
        .map(|((&x, &y), _)| (x, y))
        .unzip();
    let exponent = fit_line(&tx, &ty).map_or(f64::NAN, |l| l.slope);
    let j: Vec<f64> = adj.iter().zip(&ln_r).map(|(y, x)| y - fam.a * x).collect();
    let log_power = fit_line(&lnln_r, &j).map_or(f64::NAN, |l| l.slope);

    let mut residuals = Vec::with_capacity(r_grid.len());
    let mut worst = f64::NEG_INFINITY;
    for i in 0..r_grid.len() {
        let ln_bound = fam.a * ln_r[i] + fam.k * lnln_r[i] + (fam.extra)(r_grid[i]);
        worst = worst.max(ln_i[i] - ln_bound);
        residuals.push(GridResidual {
            branch: fam.name.clone(),
            r: r_grid[i],
            eps: fam.eps,
            ln_integral: ln_i[i],
            slack: ln_bound - ln_i[i],
        });
    }
    let holds = exponent <= fam.a + slack && log_power <= fam.k + slack;
    Ok((
        BranchFit {
            name: fam.name.clone(),
            eps: fam.eps,
            exponent,
            exponent_bound: fam.a,
            log_power,
            log_power_bound: fam.k,
            fitted_c: worst.exp(),
            holds,
        },
        residuals,
    ))
}

fn no_extra(_: f64) -> f64 {
    0.0
}

#[allow(clippy::too_many_arguments)]
fn collect_families(
    man: &ModelManifold,
    v: &RadialMap,
    condition: String,
    fams: &[Family<'_>],
    r_grid: &[f64],
    region: RegionKind,
    slack: f64,
    mut notes: Vec<String>,
) -> Result<GrowthVerdict> {
    let mut branches = Vec::new();
    let mut residuals = Vec::new();
    for fam in fams {
        match fit_family(man, v, fam, r_grid, region, slack) {
            Ok((b, r)) => {
                branches.push(b);
                residuals.extend(r);
            }
            Err(Error::Divergence { a, b, detail }) => {
                return Ok(GrowthVerdict::divergent(
                    condition,
                    format!("integral of V^{} diverges on [{a:e}, {b:e}]: {detail}", fam.exponent_on_v),
                ));
            }
            Err(e) => return Err(e),
        }
    }
    notes.push(format!("integrals over {}", region.describe()));
    Ok(GrowthVerdict::assemble(condition, branches, residuals, notes))
}

/// Fits `ln I` against `ln R` (top decade) and the remainder
/// `ln I − (α + C₀ε) ln R` against `ln ln R` (whole grid), for every `ε` and
/// every inequality of the condition. The verdict holds iff every fit stays
/// within `slack` of the allowed exponent and log power.
pub fn check_condition(man: &ModelManifold, v: &RadialMap, exps: &ExponentSet, params: &HpParameters) -> Result<GrowthVerdict> {
    validate_r_grid(&params.r_grid)?;
    let beta = exps.beta;
    if params.eps_grid.is_empty() || params.eps_grid.iter().any(|&e| !(e > 0.0 && e < beta / 2.0)) {
        return Err(Error::Domain(format!("ε grid must lie in (0, β/2) = (0, {})", beta / 2.0)));
    }
    if !(params.c0 >= 0.0 && params.k >= 0.0) {
        return Err(Error::Domain("C0 and k must be nonnegative".into()));
    }
    let (theta, tau) = (params.theta, params.tau);
    match params.which {
        Condition::Hp1 if !(params.k < beta) => {
            return Err(Error::Domain(format!("HP1 needs k < β = {beta}, got {}", params.k)));
        }
        Condition::Hp3 => {
            let floor = ((exps.sigma - exps.p + 1.0) / exps.sigma * (params.k + 1.0)).max(1.0);
            if !(theta > 0.0 && tau > floor) {
                return Err(Error::Domain(format!("HP3 needs θ > 0 and τ > {floor}")));
            }
        }
        _ => {}
    }
    let hp3_extra: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = params
        .eps_grid
        .iter()
        .map(|&e| Box::new(move |r: f64| -e * theta * r.ln().powf(tau)) as Box<dyn Fn(f64) -> f64 + Sync>)
        .collect();
    let mut fams = Vec::new();
    for (i, &eps) in params.eps_grid.iter().enumerate() {
        let a = exps.alpha + params.c0 * eps;
        match params.which {
            Condition::Hp1 => fams.push(Family {
                name: "-beta+eps".into(),
                eps,
                exponent_on_v: -beta + eps,
                a,
                k: params.k,
                extra: &no_extra,
            }),
            Condition::Hp2 => {
                for (name, sign) in [("-beta+eps", 1.0), ("-beta-eps", -1.0)] {
                    fams.push(Family {
                        name: name.into(),
                        eps,
                        exponent_on_v: -beta + sign * eps,
                        a,
                        k: beta,
                        extra: &no_extra,
                    });
                }
            }
            Condition::Hp3 => fams.push(Family {
                name: "-beta+eps".into(),
                eps,
                exponent_on_v: -beta + eps,
                a,
                k: params.k,
                extra: hp3_extra[i].as_ref(),
            }),
        }
    }
    collect_families(
        man,
        v,
        params.which.name().into(),
        &fams,
        &params.r_grid,
        params.region,
        params.slack,
        Vec::new(),
    )
}

/// The three pairs of sufficient conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Upper bound `V ≤ C(1+r)^{C₀}` with the integral bound at log power `k`.
    I,
    /// Two-sided bound `C⁻¹(1+r)^{−C₀} ≤ V ≤ C(1+r)^{C₀}` with log power `β`.
    II,
    /// `V ≤ C r^{C₀} e^{−θ(log r)^τ}` with log power `k`.
    III,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::I => "i",
            Variant::II => "ii",
            Variant::III => "iii",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SufficientParameters {
    pub variant: Variant,
    pub c0: f64,
    pub k: f64,
    pub theta: f64,
    pub tau: f64,
    pub r_grid: Vec<f64>,
    pub slack: f64,
}

impl SufficientParameters {
    pub fn new(variant: Variant, c0: f64, k: f64) -> Self {
        Self {
            variant,
            c0,
            k,
            theta: 1.0,
            tau: 2.0,
            r_grid: default_r_grid(),
            slack: 0.05,
        }
    }
}

/// Branch names used by [`check_sufficient`].
pub mod branch {
    pub const E30: &str = "e30";
    pub const E31: &str = "e31";
    pub const E32_LOWER: &str = "e32 lower bound";
    pub const E32_UPPER: &str = "e32 upper bound";
    pub const E33: &str = "e33";
    pub const E34: &str = "e34";
    pub const E35: &str = "e35";
}

/// Checks the pointwise bound(s) by the slope of `ln V` against `ln(1+r)`
/// (or `ln r` for variant iii) over the top decade of the grid, and the
/// single-`β` integral bound by the regression of [`check_condition`] with
/// `ε = 0`.
pub fn check_sufficient(man: &ModelManifold, v: &RadialMap, exps: &ExponentSet, params: &SufficientParameters) -> Result<GrowthVerdict> {
    validate_r_grid(&params.r_grid)?;
    let grid = &params.r_grid;
    let top = top_decade(grid);
    let (theta, tau, c0, slack) = (params.theta, params.tau, params.c0, params.slack);
    let pointwise = |name: &str, upper: bool, shift: &dyn Fn(f64) -> f64, base: &dyn Fn(f64) -> f64| -> BranchFit {
        let (x, y): (Vec<f64>, Vec<f64>) = grid
            .iter()
            .filter(|&&r| top(r))
            .map(|&r| (base(r), v.ln_eval(r) + shift(r)))
            .unzip();
        let slope = fit_line(&x, &y).map_or(f64::NAN, |l| l.slope);
        let sign = if upper { 1.0 } else { -1.0 };
        let worst = grid
            .iter()
            .map(|&r| sign * (v.ln_eval(r) + shift(r) - sign * c0 * base(r)))
            .fold(f64::NEG_INFINITY, f64::max);
        BranchFit {
            name: name.into(),
            eps: 0.0,
            exponent: sign * slope,
            exponent_bound: c0,
            log_power: 0.0,
            log_power_bound: 0.0,
            fitted_c: worst.exp(),
            holds: sign * slope <= c0 + slack,
        }
    };
    let ln1p = |r: f64| r.ln_1p();
    let zero = |_: f64| 0.0;
    let mut point = Vec::new();
    let (int_name, k) = match params.variant {
        Variant::I => {
            point.push(pointwise(branch::E30, true, &zero, &ln1p));
            (branch::E31, params.k)
        }
        Variant::II => {
            point.push(pointwise(branch::E32_LOWER, false, &zero, &ln1p));
            point.push(pointwise(branch::E32_UPPER, true, &zero, &ln1p));
            (branch::E33, exps.beta)
        }
        Variant::III => {
            let floor = ((exps.sigma - exps.p + 1.0) / exps.sigma * (params.k + 1.0)).max(1.0);
            if !(theta > 0.0 && tau > floor) {
                return Err(Error::Domain(format!("variant iii needs θ > 0 and τ > {floor}")));
            }
            let shift = move |r: f64| theta * r.ln().powf(tau);
            point.push(pointwise(branch::E34, true, &shift, &f64::ln));
            (branch::E35, params.k)
        }
    };
    let fam = Family {
        name: int_name.into(),
        eps: 0.0,
        exponent_on_v: -exps.beta,
        a: exps.alpha,
        k,
        extra: &no_extra,
    };
    let mut verdict = collect_families(
        man,
        v,
        format!("sufficient ({})", params.variant.name()),
        std::slice::from_ref(&fam),
        grid,
        RegionKind::HalfAnnulus,
        slack,
        Vec::new(),
    )?;
    if verdict.branches.is_empty() {
        return Ok(verdict);
    }
    point.append(&mut verdict.branches);
    Ok(GrowthVerdict::assemble(verdict.condition, point, verdict.residuals, verdict.notes))
}
