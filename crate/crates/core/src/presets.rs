//! Named manifolds and the three counterexample data sets.

use crate::error::{Error, Result};
use crate::growth::{critical_exponents, ExponentSet};
use crate::manifold::{ModelManifold, ProfilePiece, WarpingProfile};
use crate::radial::RadialMap;

/// Where the bridge between the inner and outer profile sits.
pub const BRIDGE: (f64, f64) = (1.0, 2.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExampleId {
    Ex51,
    Ex52,
    Ex53,
    Custom,
}

impl ExampleId {
    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Ex51 => "example51",
            ExampleId::Ex52 => "example52",
            ExampleId::Ex53 => "example53",
            ExampleId::Custom => "custom",
        }
    }
}

/// Data of one counterexample: the manifold, the potential and the
/// parameters they were built from.
#[derive(Clone, Debug)]
pub struct ExamplePreset {
    pub id: ExampleId,
    pub m: usize,
    pub sigma: f64,
    pub beta0: f64,
    pub delta_small: f64,
    pub eta: f64,
    pub theta: f64,
    pub exps: ExponentSet,
    manifold: ModelManifold,
    potential: RadialMap,
}

fn bridged(outer: ProfilePiece) -> Result<WarpingProfile> {
    WarpingProfile::bridged(ProfilePiece::Linear, BRIDGE.0, BRIDGE.1, outer)
}

fn log_potential(power: f64) -> RadialMap {
    RadialMap::new(format!("(log(2+r))^{power}"), move |r: f64| (2.0 + r).ln().powf(power))
        .with_ln(move |r: f64| power * (2.0 + r).ln().ln())
        .with_derivative(move |r: f64| power * (2.0 + r).ln().powf(power - 1.0) / (2.0 + r))
}

impl ExamplePreset {
    /// `m = 3`, `σ = 3`, `β₀ = 1`, `δ = 1/4`.
    pub fn example51() -> Self {
        Self::example51_with(3, 3.0, 1.0, 0.25).expect("default parameters are admissible")
    }

    /// `ψ = [r^{α−1}(log r)^{β₀}]^{1/(m−1)}` for `r > 2` and
    /// `V = (log(2+r))^{δ/β}`, with `β₀ > β` and `0 < δ < β₀ − β`.
    pub fn example51_with(m: usize, sigma: f64, beta0: f64, delta: f64) -> Result<Self> {
        let exps = critical_exponents(2.0, sigma)?;
        if !(beta0 > exps.beta) {
            return Err(Error::Domain(format!("need β₀ > β = {}, got {beta0}", exps.beta)));
        }
        if !(delta > 0.0 && delta < beta0 - exps.beta) {
            return Err(Error::Domain(format!(
                "need 0 < δ < β₀ − β = {}, got {delta}",
                beta0 - exps.beta
            )));
        }
        let m1 = (m.max(2) - 1) as f64;
        let psi = bridged(ProfilePiece::PowerLog {
            power: (exps.alpha - 1.0) / m1,
            log_power: beta0 / m1,
        })?;
        Ok(Self {
            id: ExampleId::Ex51,
            m,
            sigma,
            beta0,
            delta_small: delta,
            eta: f64::NAN,
            theta: f64::NAN,
            exps,
            manifold: ModelManifold::new(m, psi)?,
            potential: log_potential(delta / exps.beta),
        })
    }

    /// `m = 3`, `σ = 3`, `δ = 1/4`.
    pub fn example52() -> Self {
        Self::example52_with(3, 3.0, 0.25).expect("default parameters are admissible")
    }

    /// `ψ = [r^{α−1}(log r)^{β}]^{1/(m−1)}` for `r > 2` and
    /// `V = (log(2+r))^{−δ/β}`, `δ > 0`.
    pub fn example52_with(m: usize, sigma: f64, delta: f64) -> Result<Self> {
        let exps = critical_exponents(2.0, sigma)?;
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("need δ > 0, got {delta}")));
        }
        let m1 = (m.max(2) - 1) as f64;
        let psi = bridged(ProfilePiece::PowerLog {
            power: (exps.alpha - 1.0) / m1,
            log_power: exps.beta / m1,
        })?;
        Ok(Self {
            id: ExampleId::Ex52,
            m,
            sigma,
            beta0: exps.beta,
            delta_small: delta,
            eta: f64::NAN,
            theta: f64::NAN,
            exps,
            manifold: ModelManifold::new(m, psi)?,
            potential: log_potential(-delta / exps.beta),
        })
    }

    /// `m = 3`, `σ = 2`.
    pub fn example53() -> Self {
        Self::example53_with(3, 2.0).expect("default parameters are admissible")
    }

    /// `ψ = e^{√r}` for `r > 2` and `V = e^{η√r}(1+r)^{−θ/β}` with
    /// `η = (m−1)/β` and `θ = (σ+1)/(σ−1)`.
    pub fn example53_with(m: usize, sigma: f64) -> Result<Self> {
        let exps = critical_exponents(2.0, sigma)?;
        let eta = (m as f64 - 1.0) / exps.beta;
        let theta = (sigma + 1.0) / (sigma - 1.0);
        let q = theta / exps.beta;
        let potential = RadialMap::new(format!("e^({eta}√r)(1+r)^(-{q})"), move |r: f64| {
            (eta * r.sqrt() - q * r.ln_1p()).exp()
        })
        .with_ln(move |r: f64| eta * r.sqrt() - q * r.ln_1p())
        .with_derivative(move |r: f64| {
            (eta * r.sqrt() - q * r.ln_1p()).exp() * (0.5 * eta / r.sqrt() - q / (1.0 + r))
        });
        Ok(Self {
            id: ExampleId::Ex53,
            m,
            sigma,
            beta0: f64::NAN,
            delta_small: f64::NAN,
            eta,
            theta,
            exps,
            manifold: ModelManifold::new(m, bridged(ProfilePiece::ExpSqrt)?)?,
            potential,
        })
    }

    /// Arbitrary manifold and potential; has no failure pattern to certify.
    pub fn custom(manifold: ModelManifold, potential: RadialMap, sigma: f64) -> Result<Self> {
        Ok(Self {
            id: ExampleId::Custom,
            m: manifold.dimension(),
            sigma,
            beta0: f64::NAN,
            delta_small: f64::NAN,
            eta: f64::NAN,
            theta: f64::NAN,
            exps: critical_exponents(2.0, sigma)?,
            manifold,
            potential,
        })
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "example51" => Some(Self::example51()),
            "example52" => Some(Self::example52()),
            "example53" => Some(Self::example53()),
            _ => None,
        }
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn potential(&self) -> &RadialMap {
        &self.potential
    }

    /// Outer radius of reported solutions: `10⁷`, or `10⁴` for
    /// [`ExampleId::Ex53`], where `γ(r) ≈ e^{−(m−1)√r}` leaves the `f64`
    /// range soon after.
    pub fn r_report(&self) -> f64 {
        match self.id {
            ExampleId::Ex53 => 1e4,
            _ => 1e7,
        }
    }

    /// One-line summary of the parameters.
    pub fn describe(&self) -> String {
        let base = format!(
            "{}: m = {}, σ = {}, α = {}, β = {}",
            self.id.name(),
            self.m,
            self.sigma,
            self.exps.alpha,
            self.exps.beta
        );
        match self.id {
            ExampleId::Ex51 => format!("{base}, β₀ = {}, δ = {}", self.beta0, self.delta_small),
            ExampleId::Ex52 => format!("{base}, δ = {}", self.delta_small),
            ExampleId::Ex53 => format!("{base}, η = {}, θ = {}", self.eta, self.theta),
            ExampleId::Custom => base,
        }
    }
}

/// Manifold presets by name, in dimension `m`; the example manifolds use
/// their default `σ`.
pub fn manifold_by_name(name: &str, m: usize) -> Result<ModelManifold> {
    match name {
        "euclidean" => ModelManifold::new(m, WarpingProfile::euclidean()),
        "hyperbolic" => ModelManifold::new(m, WarpingProfile::hyperbolic()),
        "example51" => Ok(ExamplePreset::example51_with(m, 3.0, 1.0, 0.25)?.manifold),
        "example52" => Ok(ExamplePreset::example52_with(m, 3.0, 0.25)?.manifold),
        "example53" => Ok(ExamplePreset::example53_with(m, 2.0)?.manifold),
        _ => Err(Error::Domain(format!("unknown preset '{name}'"))),
    }
}

pub const PRESET_NAMES: [&str; 5] = ["euclidean", "hyperbolic", "example51", "example52", "example53"];

/// Catalog lines `name: formula`, several per preset.
pub fn catalog() -> Vec<String> {
    let bridge = "quintic Hermite bridge on [1, 2]";
    vec![
        "euclidean: ψ = r".into(),
        "euclidean: V = 1 unless given".into(),
        "hyperbolic: ψ = sinh r".into(),
        "example51: ψ = r (0 ≤ r < 1)".into(),
        format!("example51: ψ = {bridge}"),
        "example51: ψ = [r^{α−1}(log r)^{β₀}]^{1/(m−1)} (r > 2)".into(),
        "example51: V = (log(2+r))^{δ/β}".into(),
        "example51: defaults m = 3, σ = 3, β₀ = 1, δ = 1/4".into(),
        "example52: ψ = r (0 ≤ r < 1)".into(),
        format!("example52: ψ = {bridge}"),
        "example52: ψ = [r^{α−1}(log r)^{β}]^{1/(m−1)} (r > 2)".into(),
        "example52: V = (log(2+r))^{−δ/β}".into(),
        "example52: defaults m = 3, σ = 3, δ = 1/4".into(),
        "example53: ψ = r (0 ≤ r < 1)".into(),
        format!("example53: ψ = {bridge}"),
        "example53: ψ = e^{√r} (r > 2)".into(),
        "example53: V = e^{η√r}(1+r)^{−θ/β}, η = (m−1)/β, θ = (σ+1)/(σ−1)".into(),
        "example53: defaults m = 3, σ = 2".into(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters() {
        let p = ExamplePreset::example51();
        assert_eq!((p.exps.alpha, p.exps.beta), (3.0, 0.5));
        assert!((p.potential().eval(10.0) - 12f64.ln().powf(0.5)).abs() < 1e-14);
        let q = ExamplePreset::example53();
        assert_eq!((q.eta, q.theta), (2.0, 3.0));
        assert_eq!(q.eta, (q.m as f64 - 1.0) * (q.sigma - 1.0));
    }

    #[test]
    fn example51_constraints() {
        assert!(ExamplePreset::example51_with(3, 3.0, 0.4, 0.1).is_err());
        assert!(ExamplePreset::example51_with(3, 3.0, 1.0, 0.5).is_err());
        assert!(ExamplePreset::example51_with(3, 3.0, 1.0, 0.49).is_ok());
        assert!(ExamplePreset::example52_with(3, 3.0, 0.0).is_err());
    }

    #[test]
    fn example_surfaces_follow_closed_forms() {
        use std::f64::consts::PI;
        let r: f64 = 1e5;
        let s51 = ExamplePreset::example51().manifold().surface_area(r).unwrap();
        assert!((s51 / (4.0 * PI * r * r * r.ln()) - 1.0).abs() < 1e-12);
        let s52 = ExamplePreset::example52().manifold().surface_area(r).unwrap();
        assert!((s52 / (4.0 * PI * r * r * r.ln().sqrt()) - 1.0).abs() < 1e-12);
        let l53 = ExamplePreset::example53().manifold().ln_surface_area(r).unwrap();
        assert!((l53 - (4.0 * PI).ln() - 2.0 * r.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn example53_potential_is_finite_in_log_space() {
        let v = ExamplePreset::example53().potential().clone();
        let l = v.ln_eval(1e7);
        assert!(l.is_finite());
        assert!((l - (2.0 * 1e7f64.sqrt() - 3.0 * 1e7f64.ln_1p())).abs() < 1e-9);
    }

    #[test]
    fn catalog_names_formulas() {
        let c = catalog();
        assert!(c.iter().any(|l| l == "example53: ψ = e^{√r} (r > 2)"));
        assert!(c.iter().any(|l| l == "example51: V = (log(2+r))^{δ/β}"));
        for name in PRESET_NAMES {
            assert!(c.iter().any(|l| l.starts_with(name)));
            assert!(manifold_by_name(name, 3).is_ok());
        }
        assert!(manifold_by_name("torus", 3).is_err());
    }
}
