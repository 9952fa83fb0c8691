//! The two radial problems behind the glued supersolutions: the semilinear
//! tail equation `(A y')' + B y^σ = 0` with `A = aS`, solved on its integral
//! form by Picard iteration, and the principal Dirichlet eigenpair of a
//! geodesic ball, found by shooting.

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;
use crate::numerics::lattice::{log_mesh, origin_mesh, DEFAULT_PER_DECADE};
use crate::numerics::ode::{self, Control, OdeOptions};
use crate::numerics::stencil::MeshStencils;
use crate::quadrature::{integrate_ln, integrate_ln_to_infinity, tail_gamma_ln};
use crate::radial::{RadialFunction, RadialMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailOptions {
    /// Right end of the sampled tail.
    pub r_max: f64,
    /// Picard stopping threshold on `max |Δy|/γ`.
    pub tol: f64,
    pub per_decade: usize,
    pub max_iter: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            r_max: 1e7,
            tol: 1e-10,
            per_decade: DEFAULT_PER_DECADE,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TailSolution {
    pub y: RadialFunction,
    /// Start of the tail after any doubling.
    pub r0: f64,
    pub gamma_ref: RadialFunction,
    pub picard_iterations: usize,
    pub sup_rel_change: f64,
    /// Largest nodal `|y'' + (ln aS)' y' + V y^σ|`, relative to the largest
    /// of the three terms.
    pub max_rel_residual: f64,
}

impl TailSolution {
    /// `y/γ` at the nodes of the last decade of the mesh.
    pub fn last_decade_ratios(&self) -> Vec<f64> {
        let (_, hi) = self.y.range();
        self.y
            .nodes()
            .filter(|n| n.r >= hi / 10.0)
            .map(|n| n.jet.value / self.gamma_ref.value(n.r).expect("same mesh"))
            .collect()
    }
}

/// Accuracy of the two improper tail integrals. They only fix the
/// normalisation at infinity, not the residual of the solution.
const TAIL_TOL: f64 = 1e-8;

enum Attempt {
    Done(TailSolution),
    Retry,
}

/// Positive solution of `(aS y')' + B y^σ = 0` on `[R0, r_max]` with
/// `y ∼ γ` at infinity.
///
/// Beyond `r_max` the solution is replaced by `γ` in the two tail integrals,
/// which are evaluated by improper quadrature. When the iterates lose
/// positivity, or the correction `γ − y` exceeds `γ/2`, `R0` is doubled.
pub fn solve_tail(man: &ModelManifold, b: &RadialMap, sigma: f64, r0: f64, opts: &TailOptions) -> Result<TailSolution> {
    if !(sigma > 1.0) {
        return Err(Error::Domain(format!("σ must exceed 1, got {sigma}")));
    }
    if !(r0 > 0.0 && opts.r_max > 10.0 * r0) {
        return Err(Error::Domain(format!(
            "need 0 < R0 and r_max ≥ 10 R0, got R0 = {r0}, r_max = {}",
            opts.r_max
        )));
    }
    let r_max = opts.r_max;
    let ln_gamma_end = tail_gamma_ln(man, r_max, 1e-12)?;
    let ln_gamma = |t: f64| {
        if t == r_max {
            ln_gamma_end
        } else {
            tail_gamma_ln(man, t, 1e-10).unwrap_or(f64::NAN)
        }
    };
    let hypothesis = |e: Error| match e {
        Error::Divergence { detail, .. } => Error::Hypothesis(format!(
            "∫ γ^σ B dr does not converge beyond r = {r_max:e}: {detail}"
        )),
        other => other,
    };
    let f_tail = integrate_ln_to_infinity(|t| b.ln_eval(t) + sigma * ln_gamma(t), r_max, TAIL_TOL)
        .map_err(hypothesis)?
        .value;
    // ∫_{r_max}^∞ (1/A) ∫_s^∞ B γ^σ = ∫_{r_max}^∞ B γ^σ (γ(r_max) − γ), where
    // γ(r_max) − γ(t) = ∫_{r_max}^t 1/A is integrated directly.
    let breaks = man.psi().breakpoints();
    let ln_gap = |t: f64| {
        integrate_ln(|x| -man.ln_density(x), r_max, t, &breaks, TAIL_TOL)
            .map_or(f64::NAN, |i| i.ln_value)
    };
    let q_tail = integrate_ln_to_infinity(|t| b.ln_eval(t) + sigma * ln_gamma(t) + ln_gap(t), r_max, TAIL_TOL)
        .map_err(hypothesis)?
        .value;
    if !(f_tail.is_finite() && q_tail.is_finite()) {
        return Err(Error::Hypothesis("tail integrals of B γ^σ are not finite".into()));
    }

    let mut start = r0;
    while start <= r_max / 10.0 {
        match picard(man, b, sigma, start, opts, ln_gamma_end, f_tail, q_tail)? {
            Attempt::Done(sol) => return Ok(sol),
            Attempt::Retry => start *= 2.0,
        }
    }
    Err(Error::Positivity { r: start })
}

#[allow(clippy::too_many_arguments)]
fn picard(
    man: &ModelManifold,
    b: &RadialMap,
    sigma: f64,
    r0: f64,
    opts: &TailOptions,
    ln_gamma_end: f64,
    f_tail: f64,
    q_tail: f64,
) -> Result<Attempt> {
    let mesh = log_mesh(r0, opts.r_max, opts.per_decade);
    let n = mesh.len();
    let st = MeshStencils::new(&mesh);
    let ln_a: Vec<f64> = mesh.iter().map(|&r| man.ln_density(r)).collect();
    let ln_b: Vec<f64> = mesh.iter().map(|&r| b.ln_eval(r)).collect();
    let inv_a: Vec<f64> = ln_a.iter().map(|l| (-l).exp()).collect();
    let gamma_end = ln_gamma_end.exp();
    let gamma: Vec<f64> = st
        .cumulative_from_right(&inv_a)
        .into_iter()
        .map(|c| gamma_end + c)
        .collect();

    let flux = |y: &[f64]| -> Vec<f64> {
        let g: Vec<f64> = (0..n).map(|i| (ln_b[i] + sigma * y[i].ln()).exp()).collect();
        st.cumulative_from_right(&g).into_iter().map(|c| f_tail + c).collect()
    };

    let mut y = gamma.clone();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while change >= opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::Convergence(format!(
                "Picard iteration still changes by {change:e} after {} steps",
                opts.max_iter
            )));
        }
        iterations += 1;
        let f = flux(&y);
        let h: Vec<f64> = (0..n).map(|i| f[i] * inv_a[i]).collect();
        let corr = st.cumulative_from_right(&h);
        change = 0.0;
        for i in 0..n {
            let c = q_tail + corr[i];
            let next = gamma[i] - c;
            if !(next > 0.0) || c > 0.5 * gamma[i] {
                return Ok(Attempt::Retry);
            }
            change = f64::max(change, (next - y[i]).abs() / gamma[i]);
            y[i] = next;
        }
    }

    let f = flux(&y);
    let dy: Vec<f64> = (0..n).map(|i| (f[i] - 1.0) * inv_a[i]).collect();
    let gamma_d: Vec<f64> = inv_a.iter().map(|v| -v).collect();
    let y_fn = RadialFunction::new(mesh.clone(), y.clone(), dy)?;
    let gamma_ref = RadialFunction::new(mesh.clone(), gamma, gamma_d)?;

    let mut worst = 0.0f64;
    for node in y_fn.nodes() {
        let i = node.index;
        let j = node.jet;
        let drift = man.drift(node.r) * j.d1;
        let pot = (ln_b[i] - ln_a[i] + sigma * j.value.ln()).exp();
        let scale = j.d2.abs().max(drift.abs()).max(pot);
        worst = worst.max((j.d2 + drift + pot).abs() / scale);
    }

    Ok(Attempt::Done(TailSolution {
        y: y_fn,
        r0,
        gamma_ref,
        picard_iterations: iterations,
        sup_rel_change: change,
        max_rel_residual: worst,
    }))
}

/// Principal Dirichlet eigenpair of a geodesic ball, with `v(0) = 1`.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub rho: f64,
    pub lambda: f64,
    pub v: RadialFunction,
}

const START_RATIO: f64 = 1e-6;
const MESH_FLOOR: f64 = 1e-4;

fn eigen_ode(man: &ModelManifold, lambda: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |r, y| [y[1], -lambda * y[0] - man.drift(r) * y[1]]
}

fn series_start(m: usize, lambda: f64, r: f64) -> [f64; 2] {
    let m = m as f64;
    [1.0 - lambda * r * r / (2.0 * m), -lambda * r / m]
}

/// True if the solution with this `λ` vanishes before `ρ`.
fn crosses(man: &ModelManifold, rho: f64, lambda: f64, opts: &OdeOptions) -> Result<bool> {
    let r0 = START_RATIO * rho;
    let mut hit = false;
    ode::integrate(
        eigen_ode(man, lambda),
        r0,
        series_start(man.dimension(), lambda, r0),
        rho,
        opts,
        |step| {
            if step.y1[0] <= 0.0 && step.t1 < rho {
                hit = true;
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )
    .map(|(_, y)| hit || y[0] <= 0.0)
}

pub fn dirichlet_eigen(man: &ModelManifold, rho: f64, tol: f64) -> Result<EigenResult> {
    dirichlet_eigen_with(man, rho, tol, DEFAULT_PER_DECADE)
}

/// Bisects `λ` until the first zero of the shot solution sits at `ρ` to a
/// relative `tol`, then samples `v` on `{0} ∪ [10⁻⁴ρ, ρ]`. The lower end of
/// the final bracket is returned, so `v > 0` on `[0, ρ)`.
pub fn dirichlet_eigen_with(man: &ModelManifold, rho: f64, tol: f64, per_decade: usize) -> Result<EigenResult> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("ball radius must be positive, got {rho}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let opts = OdeOptions::default();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !crosses(man, rho, hi, &opts)? {
        lo = hi;
        hi *= 2.0;
        if hi > 2f64.powi(40) {
            return Err(Error::Bracket(format!(
                "no sign change of v on [0, {rho}] for λ up to 2^40"
            )));
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if crosses(man, rho, mid, &opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = lo;

    let mesh = origin_mesh(rho, MESH_FLOOR, per_decade);
    let f = eigen_ode(man, lambda);
    let r_start = START_RATIO * rho;
    let mut state = series_start(man.dimension(), lambda, r_start);
    let mut r = r_start;
    let mut values = vec![1.0];
    let mut slopes = vec![0.0];
    for &next in &mesh[1..] {
        let (_, y) = ode::integrate(&f, r, state, next, &opts, |_| Control::Continue)?;
        state = y;
        r = next;
        values.push(y[0]);
        slopes.push(y[1]);
    }
    let last = values.len() - 1;
    values[last] = values[last].max(0.0);
    let v = RadialFunction::new(mesh, values, slopes)?;
    Ok(EigenResult { rho, lambda, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::WarpingProfile;
    use std::f64::consts::PI;

    fn euclid(m: usize) -> ModelManifold {
        ModelManifold::new(m, WarpingProfile::euclidean()).unwrap()
    }

    #[test]
    fn euclidean_ball_eigenpair() {
        let res = dirichlet_eigen(&euclid(3), 1.0, 1e-10).unwrap();
        assert!((res.lambda - PI * PI).abs() < 1e-6, "{}", res.lambda);
        let mut worst = 0.0f64;
        for node in res.v.nodes() {
            let exact = if node.r == 0.0 { 1.0 } else { (PI * node.r).sin() / (PI * node.r) };
            worst = worst.max((node.jet.value - exact).abs());
        }
        assert!(worst < 1e-6, "{worst}");
        assert_eq!(res.v.value(0.0).unwrap(), 1.0);
    }

    #[test]
    fn eigenfunction_is_positive_and_decreasing() {
        let man = ModelManifold::new(3, WarpingProfile::hyperbolic()).unwrap();
        let res = dirichlet_eigen(&man, 3.0, 1e-8).unwrap();
        let vals: Vec<f64> = res.v.nodes().map(|n| n.jet.value).collect();
        assert!(vals[..vals.len() - 1].iter().all(|&v| v > 0.0));
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(*vals.last().unwrap() < 1e-6);
    }

    #[test]
    fn planar_disc_eigenvalue_is_bessel_zero_squared() {
        // First zero of J₀: 2.404825557695773.
        let res = dirichlet_eigen(&euclid(2), 1.0, 1e-10).unwrap();
        assert!((res.lambda - 2.404_825_557_695_773f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn eigenvalues_decrease_with_radius() {
        let man = ModelManifold::new(3, WarpingProfile::hyperbolic()).unwrap();
        let lams: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&rho| dirichlet_eigen_with(&man, rho, 1e-8, 256).unwrap().lambda)
            .collect();
        assert!(lams.windows(2).all(|w| w[1] < w[0]), "{lams:?}");
        // Spectral bottom of ℍ³ is 1.
        assert!(lams[4] > 1.0);
    }

    #[test]
    fn invalid_radius() {
        assert!(matches!(dirichlet_eigen(&euclid(3), 0.0, 1e-8), Err(Error::Domain(_))));
    }

    fn euclid_tail_opts() -> TailOptions {
        TailOptions {
            r_max: 1e5,
            per_decade: 512,
            ..TailOptions::default()
        }
    }

    #[test]
    fn zero_coefficient_returns_gamma() {
        let man = euclid(3);
        let b = man.tail_coefficient(&RadialMap::constant(0.0));
        let sol = solve_tail(&man, &b, 2.0, 10.0, &euclid_tail_opts()).unwrap();
        assert_eq!(sol.picard_iterations, 1);
        for node in sol.y.nodes() {
            let exact = 1.0 / (4.0 * PI * node.r);
            assert!(((node.jet.value - exact) / exact).abs() < 1e-10);
        }
    }

    #[test]
    fn euclidean_tail_with_decaying_potential() {
        let man = euclid(3);
        let v = RadialMap::new("r^-3", |r: f64| r.powi(-3)).with_ln(|r: f64| -3.0 * r.ln());
        let b = man.tail_coefficient(&v);
        let sol = solve_tail(&man, &b, 2.0, 0.05, &euclid_tail_opts()).unwrap();
        assert!(sol.max_rel_residual < 1e-6, "{}", sol.max_rel_residual);
        assert!(sol.sup_rel_change < 1e-10);
        for node in sol.y.nodes() {
            let g = sol.gamma_ref.value(node.r).unwrap();
            assert!(node.jet.value > 0.0 && node.jet.value <= g);
        }
        for q in sol.last_decade_ratios() {
            assert!((q - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn tail_residual_against_independent_differences() {
        // Sixth-order centred differences of the sampled values on a uniform
        // sub-grid give y'' without using the stored derivatives.
        let man = euclid(3);
        let v = RadialMap::new("r^-3", |r: f64| r.powi(-3)).with_ln(|r: f64| -3.0 * r.ln());
        let b = man.tail_coefficient(&v);
        let sol = solve_tail(&man, &b, 2.0, 1.0, &euclid_tail_opts()).unwrap();
        let c = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        for r in [3.0, 17.0, 250.0] {
            let h = 1e-3 * r;
            let d2: f64 = (0..7)
                .map(|k| c[k] * sol.y.value(r + (k as f64 - 3.0) * h).unwrap())
                .sum::<f64>()
                / (h * h);
            let j = sol.y.jet(r).unwrap();
            let pot = r.powi(-3) * j.value * j.value;
            let res = d2 + 2.0 / r * j.d1 + pot;
            assert!(res.abs() < 1e-6 * d2.abs(), "{r}: {res:e}");
        }
    }

    #[test]
    fn tail_requires_superlinear_exponent() {
        let man = euclid(3);
        let b = man.tail_coefficient(&RadialMap::constant(1.0));
        assert!(matches!(
            solve_tail(&man, &b, 1.0, 10.0, &euclid_tail_opts()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_integrable_coefficient_is_rejected() {
        // V ≡ 1 in ℝ³: B γ² ~ 1/(4π), not integrable.
        let man = euclid(3);
        let b = man.tail_coefficient(&RadialMap::constant(1.0));
        assert!(matches!(
            solve_tail(&man, &b, 2.0, 10.0, &euclid_tail_opts()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn parabolic_plane_has_no_tail() {
        let man = euclid(2);
        let b = man.tail_coefficient(&RadialMap::constant(0.0));
        assert!(matches!(
            solve_tail(&man, &b, 2.0, 10.0, &euclid_tail_opts()),
            Err(Error::Nonparabolicity(_))
        ));
    }
}
