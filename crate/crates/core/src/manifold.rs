//! Rotationally symmetric model manifolds `M_ψ` with metric `dr² + ψ(r)² dθ²`
//! and a radial measure density `a`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::hermite;
use crate::quadrature::integrate_ln;
use crate::radial::{RadialFunction, RadialMap, ScalarFn, Side};

/// `ln ψ`, `ψ'/ψ` and `(ψ'/ψ)'` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogJet {
    pub ln: f64,
    pub d1: f64,
    pub d2: f64,
}

impl LogJet {
    fn from_values(f: f64, df: f64, ddf: f64) -> Self {
        let l = df / f;
        Self {
            ln: f.ln(),
            d1: l,
            d2: ddf / f - l * l,
        }
    }

    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    /// `ψ''/ψ`.
    pub fn curvature_ratio(&self) -> f64 {
        self.d1 * self.d1 + self.d2
    }
}

/// Quintic polynomial matching value, slope and curvature at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuinticBridge {
    pub a: f64,
    pub b: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
}

impl QuinticBridge {
    fn eval(&self, r: f64) -> [f64; 3] {
        let j = hermite::quintic(
            self.a,
            self.b,
            self.left[0],
            self.left[1],
            self.left[2],
            self.right[0],
            self.right[1],
            self.right[2],
            r,
        );
        [j.value, j.d1, j.d2]
    }
}

/// A closed-form piece of a warping profile.
#[derive(Clone)]
pub enum ProfilePiece {
    /// `ψ = r`.
    Linear,
    /// `ψ = sinh r`.
    Sinh,
    /// `ψ = r^power (ln r)^log_power`, for `r > 1`.
    PowerLog { power: f64, log_power: f64 },
    /// `ψ = e^{√r}`.
    ExpSqrt,
    Bridge(QuinticBridge),
    /// User-supplied `ψ, ψ', ψ''`.
    Custom {
        label: String,
        f: ScalarFn,
        df: ScalarFn,
        ddf: ScalarFn,
    },
}

impl fmt::Debug for ProfilePiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl ProfilePiece {
    pub fn log_jet(&self, r: f64) -> LogJet {
        match self {
            ProfilePiece::Linear => LogJet {
                ln: r.ln(),
                d1: 1.0 / r,
                d2: -1.0 / (r * r),
            },
            ProfilePiece::Sinh => {
                let csch = 1.0 / r.sinh();
                LogJet {
                    ln: r + (-(-2.0 * r).exp_m1()).ln() - std::f64::consts::LN_2,
                    d1: 1.0 / r.tanh(),
                    d2: -csch * csch,
                }
            }
            ProfilePiece::PowerLog { power, log_power } => {
                let l = r.ln();
                LogJet {
                    ln: power * l + log_power * l.ln(),
                    d1: power / r + log_power / (r * l),
                    d2: -power / (r * r) - log_power * (l + 1.0) / (r * l) / (r * l),
                }
            }
            ProfilePiece::ExpSqrt => {
                let s = r.sqrt();
                LogJet {
                    ln: s,
                    d1: 0.5 / s,
                    d2: -0.25 / (r * s),
                }
            }
            ProfilePiece::Bridge(b) => {
                let [f, df, ddf] = b.eval(r);
                LogJet::from_values(f, df, ddf)
            }
            ProfilePiece::Custom { f, df, ddf, .. } => LogJet::from_values(f(r), df(r), ddf(r)),
        }
    }

    /// `(ψ, ψ', ψ'')`.
    pub fn values(&self, r: f64) -> [f64; 3] {
        match self {
            ProfilePiece::Bridge(b) => b.eval(r),
            ProfilePiece::Custom { f, df, ddf, .. } => [f(r), df(r), ddf(r)],
            _ => {
                let j = self.log_jet(r);
                let v = j.value();
                [v, v * j.d1, v * j.curvature_ratio()]
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ProfilePiece::Linear => "r".into(),
            ProfilePiece::Sinh => "sinh r".into(),
            ProfilePiece::PowerLog { power, log_power } => format!("r^{power} (log r)^{log_power}"),
            ProfilePiece::ExpSqrt => "e^{√r}".into(),
            ProfilePiece::Bridge(b) => format!(
                "quintic Hermite bridge on [{}, {}] matching ψ, ψ', ψ'' at both ends",
                b.a, b.b
            ),
            ProfilePiece::Custom { label, .. } => label.clone(),
        }
    }
}

/// One piece of a profile on `[start, end)`.
#[derive(Clone, Debug)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub kind: ProfilePiece,
}

/// Warping profile `ψ` of class 𝒜: `ψ(0) = 0`, `ψ'(0) = 1`, `ψ > 0`.
#[derive(Clone, Debug)]
pub struct WarpingProfile {
    pieces: Vec<Piece>,
    bridges: Vec<(f64, f64)>,
}

const SEAM_TOL: f64 = 1e-9;

impl WarpingProfile {
    pub fn euclidean() -> Self {
        Self::single(ProfilePiece::Linear)
    }

    pub fn hyperbolic() -> Self {
        Self::single(ProfilePiece::Sinh)
    }

    fn single(kind: ProfilePiece) -> Self {
        Self {
            pieces: vec![Piece {
                start: 0.0,
                end: f64::INFINITY,
                kind,
            }],
            bridges: Vec::new(),
        }
    }

    /// Builds a profile from contiguous pieces covering `[0, ∞)` and checks
    /// the class 𝒜 conditions, positivity and C² agreement at every seam.
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self> {
        let profile = Self {
            pieces,
            bridges: Vec::new(),
        };
        profile.validate()?;
        Ok(profile)
    }

    /// `inner` on `[0, a)`, a synthesized quintic bridge on `[a, b]`, and
    /// `outer` on `(b, ∞)`.
    pub fn bridged(inner: ProfilePiece, a: f64, b: f64, outer: ProfilePiece) -> Result<Self> {
        if !(a > 0.0 && b > a) {
            return Err(Error::Profile(format!("bridge interval [{a}, {b}] is empty")));
        }
        let bridge = QuinticBridge {
            a,
            b,
            left: inner.values(a),
            right: outer.values(b),
        };
        let profile = Self {
            pieces: vec![
                Piece {
                    start: 0.0,
                    end: a,
                    kind: inner,
                },
                Piece {
                    start: a,
                    end: b,
                    kind: ProfilePiece::Bridge(bridge),
                },
                Piece {
                    start: b,
                    end: f64::INFINITY,
                    kind: outer,
                },
            ],
            bridges: vec![(a, b)],
        };
        profile.validate()?;
        Ok(profile)
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .pieces
            .first()
            .ok_or_else(|| Error::Profile("no pieces".into()))?;
        if first.start != 0.0 {
            return Err(Error::Profile("first piece must start at r = 0".into()));
        }
        if self.pieces.last().expect("non-empty").end != f64::INFINITY {
            return Err(Error::Profile("last piece must extend to infinity".into()));
        }
        for w in self.pieces.windows(2) {
            if w[0].end != w[1].start || !(w[0].end > w[0].start) {
                return Err(Error::Profile(format!(
                    "pieces are not contiguous at r = {}",
                    w[0].end
                )));
            }
            let r = w[0].end;
            let left = w[0].kind.values(r);
            let right = w[1].kind.values(r);
            for k in 0..3 {
                let scale = left[k].abs().max(right[k].abs()).max(1e-3 * left[0].abs());
                if (left[k] - right[k]).abs() > SEAM_TOL * scale {
                    return Err(Error::Profile(format!(
                        "derivative {k} of ψ jumps at r = {r}: {} vs {}",
                        left[k], right[k]
                    )));
                }
            }
        }
        let r0 = 1e-9f64.min(0.5 * first.end);
        let j = first.kind.log_jet(r0);
        if (j.ln - r0.ln()).abs() > 1e-6 || (j.d1 * r0 - 1.0).abs() > 1e-6 {
            return Err(Error::Profile(
                "ψ must satisfy ψ(0) = 0 and ψ'(0) = 1".into(),
            ));
        }
        for p in &self.pieces {
            let (lo, hi) = (p.start.max(1e-9), p.end.min(1e8));
            for k in 0..=256 {
                let r = if p.end.is_finite() {
                    lo + (hi - lo) * k as f64 / 256.0
                } else {
                    lo * (hi / lo).powf(k as f64 / 256.0)
                };
                let j = p.kind.log_jet(r);
                if !(j.ln.is_finite() && j.d1.is_finite() && j.d2.is_finite()) || p.kind.values(r)[0] <= 0.0 && j.ln < 700.0 {
                    return Err(Error::Profile(format!(
                        "ψ is not positive and finite at r = {r} ({})",
                        p.kind.describe()
                    )));
                }
            }
        }
        Ok(())
    }

    fn piece_at(&self, r: f64) -> &Piece {
        self.pieces
            .iter()
            .find(|p| r < p.end)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty"))
    }

    pub fn log_jet(&self, r: f64) -> LogJet {
        self.piece_at(r).kind.log_jet(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            self.log_jet(r).value()
        }
    }

    /// Interior piece boundaries.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.start).collect()
    }

    pub fn bridge_intervals(&self) -> &[(f64, f64)] {
        &self.bridges
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// True within a relative `1e-12` of a piece boundary.
    pub fn at_seam(&self, r: f64) -> bool {
        self.breakpoints()
            .iter()
            .any(|b| (r - b).abs() <= 1e-12 * b.abs())
    }

    pub fn describe(&self) -> String {
        self.pieces
            .iter()
            .map(|p| {
                let end = if p.end.is_finite() {
                    format!("{})", p.end)
                } else {
                    "∞)".into()
                };
                format!("[{}, {end}: ψ = {}", p.start, p.kind.describe())
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Area of the unit sphere `S^{m-1} ⊂ ℝ^m`.
pub fn unit_sphere_area(m: usize) -> f64 {
    use std::f64::consts::PI;
    let mut w = if m.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
    let mut k = if m.is_multiple_of(2) { 2 } else { 3 };
    while k < m {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Sectional and radial Ricci curvature at a radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvatures {
    pub sectional: f64,
    pub ricci_radial: f64,
    /// Set when the radius sits on a seam between profile pieces, where ψ''
    /// is only one-sidedly defined.
    pub at_seam: bool,
}

#[derive(Clone, Debug)]
pub struct ModelManifold {
    m: usize,
    psi: WarpingProfile,
    weight: RadialMap,
    omega: f64,
    weighted: bool,
}

impl ModelManifold {
    pub fn new(m: usize, psi: WarpingProfile) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {m}")));
        }
        Ok(Self {
            m,
            psi,
            weight: RadialMap::constant(1.0),
            omega: unit_sphere_area(m),
            weighted: false,
        })
    }

    /// Replaces the measure density `a`.
    pub fn with_weight(mut self, a: RadialMap) -> Result<Self> {
        for k in 0..=64 {
            let r = 1e-3 * 1e11f64.powf(k as f64 / 64.0);
            let l = a.ln_eval(r);
            if l.is_nan() || l == f64::NEG_INFINITY {
                return Err(Error::Domain(format!("weight a must be positive, fails at r = {r:e}")));
            }
        }
        self.weight = a;
        self.weighted = true;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.m
    }
    pub fn psi(&self) -> &WarpingProfile {
        &self.psi
    }
    pub fn weight(&self) -> &RadialMap {
        &self.weight
    }
    pub fn is_weighted(&self) -> bool {
        self.weighted
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn check_radius(r: f64) -> Result<()> {
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("radius must be positive, got {r}")))
        }
    }

    /// `ln S(r)` with `S = ω_m ψ^{m-1}`.
    pub fn ln_surface_area(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.omega.ln() + (self.m - 1) as f64 * self.psi.log_jet(r).ln)
    }

    pub fn surface_area(&self, r: f64) -> Result<f64> {
        self.ln_surface_area(r).map(f64::exp)
    }

    /// `ln(a S)`; `-inf` at the origin.
    pub fn ln_density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let w = if self.weighted { self.weight.ln_eval(r) } else { 0.0 };
        w + self.omega.ln() + (self.m - 1) as f64 * self.psi.log_jet(r).ln
    }

    /// `(ln(a S))' = a'/a + (m−1) ψ'/ψ`.
    pub fn drift(&self, r: f64) -> f64 {
        let w = if self.weighted {
            self.weight.derivative(r) / self.weight.eval(r)
        } else {
            0.0
        };
        w + (self.m - 1) as f64 * self.psi.log_jet(r).d1
    }

    /// `ln μ₀(B_R)`.
    pub fn ln_ball_volume(&self, radius: f64) -> Result<f64> {
        Self::check_radius(radius)?;
        let m1 = (self.m - 1) as f64;
        let lw = self.omega.ln();
        let res = integrate_ln(
            |r| if r > 0.0 { lw + m1 * self.psi.log_jet(r).ln } else { f64::NEG_INFINITY },
            0.0,
            radius,
            &self.psi.breakpoints(),
            1e-12,
        )?;
        Ok(res.ln_value)
    }

    pub fn ball_volume(&self, radius: f64) -> Result<f64> {
        self.ln_ball_volume(radius).map(f64::exp)
    }

    /// `ln μ(B_R)` for the weighted measure `a dμ₀`.
    pub fn ln_weighted_ball_volume(&self, radius: f64) -> Result<f64> {
        Self::check_radius(radius)?;
        let res = integrate_ln(|r| self.ln_density(r), 0.0, radius, &self.psi.breakpoints(), 1e-12)?;
        Ok(res.ln_value)
    }

    pub fn radial_curvatures(&self, r: f64) -> Result<Curvatures> {
        Self::check_radius(r)?;
        let k = -self.psi.log_jet(r).curvature_ratio();
        Ok(Curvatures {
            sectional: k,
            ricci_radial: (self.m - 1) as f64 * k,
            at_seam: self.psi.at_seam(r),
        })
    }

    /// `u'' + (ln aS)' u' + V u^σ` at `r`; nonpositive means supersolution.
    pub fn radial_laplacian_residual(&self, u: &RadialFunction, v: &RadialMap, sigma: f64, r: f64) -> Result<f64> {
        self.radial_laplacian_residual_side(u, v, sigma, r, Side::Right)
    }

    pub fn radial_laplacian_residual_side(
        &self,
        u: &RadialFunction,
        v: &RadialMap,
        sigma: f64,
        r: f64,
        side: Side,
    ) -> Result<f64> {
        Self::check_radius(r)?;
        let j = u.jet_side(r, side)?;
        Ok(j.d2 + self.drift(r) * j.d1 + potential_term(v, sigma, r, j.value))
    }

    /// `B = aSV`, the coefficient of the radial equation `(aS y')' + B y^σ = 0`.
    pub fn tail_coefficient(&self, v: &RadialMap) -> RadialMap {
        let (man, v1) = (self.clone(), v.clone());
        let (man2, v2) = (self.clone(), v.clone());
        RadialMap::new(format!("aS·({})", v.label()), move |r| {
            (man.ln_density(r) + v1.ln_eval(r)).exp()
        })
        .with_ln(move |r| man2.ln_density(r) + v2.ln_eval(r))
    }

    /// Upper estimate `¼ [max ln μ(B_R)/R]²` of the bottom of the spectrum,
    /// the maximum taken over the largest decade of `grid`.
    pub fn brooks_bound(&self, grid: &[f64]) -> Result<f64> {
        if grid.len() < 8 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
            return Err(Error::Domain(
                "brooks_bound needs at least 8 increasing positive radii".into(),
            ));
        }
        let top = *grid.last().expect("non-empty");
        if top / grid[0] < 1e3 * (1.0 - 1e-12) {
            return Err(Error::Domain("brooks_bound grid must span at least 3 decades".into()));
        }
        let mut best = f64::NEG_INFINITY;
        for &r in grid.iter().filter(|&&r| r >= top / 10.0 * (1.0 - 1e-12)) {
            best = best.max(self.ln_weighted_ball_volume(r)? / r);
        }
        Ok(0.25 * best.max(0.0).powi(2))
    }
}

/// `V u^σ`, formed in log space; sign-preserving for negative `u`.
pub fn potential_term(v: &RadialMap, sigma: f64, r: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let lv = v.ln_eval(r);
    if lv == f64::NEG_INFINITY {
        return 0.0;
    }
    u.signum() * (lv + sigma * u.abs().ln()).exp()
}

/// Convenience for building custom profile pieces from closures.
pub fn custom_piece(
    label: impl Into<String>,
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ddf: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> ProfilePiece {
    ProfilePiece::Custom {
        label: label.into(),
        f: Arc::new(f),
        df: Arc::new(df),
        ddf: Arc::new(ddf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lattice::log_mesh;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn euclid(m: usize) -> ModelManifold {
        ModelManifold::new(m, WarpingProfile::euclidean()).unwrap()
    }

    fn example51() -> ModelManifold {
        let outer = ProfilePiece::PowerLog { power: 1.0, log_power: 0.5 };
        ModelManifold::new(3, WarpingProfile::bridged(ProfilePiece::Linear, 1.0, 2.0, outer).unwrap()).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn unit_sphere_in_three_space() {
        assert!((euclid(3).surface_area(1.0).unwrap() - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_plane_circle() {
        let man = ModelManifold::new(2, WarpingProfile::hyperbolic()).unwrap();
        // 2π sinh 1 = 7.3840068728826453475...
        let s = man.surface_area(1.0).unwrap();
        assert!((s - 7.384_006_872_882_645).abs() < 1e-13, "{s}");
        let v = man.ball_volume(1.0).unwrap();
        assert!((v - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn euclidean_ball() {
        let v = euclid(3).ball_volume(2.0).unwrap();
        assert!((v - 32.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn example51_area_matches_closed_form() {
        let man = example51();
        for r in [3.0, 10.0, 1e4, 1e7] {
            let s = man.surface_area(r).unwrap();
            let exact = 4.0 * PI * r * r * r.ln();
            assert!(((s - exact) / exact).abs() < 1e-13);
        }
    }

    #[test]
    fn example51_curvature_matches_symbolic_derivative() {
        // ψ = r (ln r)^{1/2}; ψ'' = 1/(2 r √ln r) − 1/(4 r (ln r)^{3/2}).
        let man = example51();
        let r: f64 = 10.0;
        let l = r.ln();
        let psi = r * l.sqrt();
        let dd = 0.5 / (r * l.sqrt()) - 0.25 / (r * l.powf(1.5));
        let c = man.radial_curvatures(r).unwrap();
        assert!((c.sectional + dd / psi).abs() < 1e-14);
        assert_eq!(c.ricci_radial, 2.0 * c.sectional);
        assert!(!c.at_seam);
        assert!(man.radial_curvatures(2.0).unwrap().at_seam);
    }

    #[test]
    fn flat_and_hyperbolic_curvatures() {
        let c = euclid(4).radial_curvatures(3.0).unwrap();
        assert_eq!((c.sectional, c.ricci_radial), (0.0, 0.0));
        let h = ModelManifold::new(4, WarpingProfile::hyperbolic()).unwrap();
        for r in [0.1, 1.0, 10.0, 300.0] {
            let c = h.radial_curvatures(r).unwrap();
            assert!((c.sectional + 1.0).abs() < 1e-12, "{r}: {}", c.sectional);
            assert!((c.ricci_radial + 3.0).abs() < 3e-12);
        }
    }

    #[test]
    fn domain_errors() {
        let man = euclid(3);
        assert!(matches!(man.surface_area(0.0), Err(Error::Domain(_))));
        assert!(matches!(man.ball_volume(-1.0), Err(Error::Domain(_))));
        assert!(ModelManifold::new(1, WarpingProfile::euclidean()).is_err());
    }

    #[test]
    fn bridge_is_c2_and_recorded() {
        let p = WarpingProfile::bridged(ProfilePiece::Linear, 1.0, 2.0, ProfilePiece::ExpSqrt).unwrap();
        assert_eq!(p.bridge_intervals(), &[(1.0, 2.0)]);
        assert!(p.describe().contains("bridge"));
        let right = ProfilePiece::ExpSqrt.values(2.0);
        let left = p.pieces()[1].kind.values(2.0);
        for k in 0..3 {
            assert!((left[k] - right[k]).abs() < 1e-12 * right[k].abs());
        }
    }

    #[test]
    fn bad_profiles_are_rejected() {
        let p = WarpingProfile::from_pieces(vec![Piece {
            start: 0.0,
            end: f64::INFINITY,
            kind: custom_piece("2r", |r| 2.0 * r, |_| 2.0, |_| 0.0),
        }]);
        assert!(matches!(p, Err(Error::Profile(_))));
        let q = WarpingProfile::from_pieces(vec![
            Piece { start: 0.0, end: 1.0, kind: ProfilePiece::Linear },
            Piece { start: 1.0, end: f64::INFINITY, kind: ProfilePiece::Sinh },
        ]);
        assert!(matches!(q, Err(Error::Profile(_))));
    }

    #[test]
    fn harmonic_green_tail_has_zero_residual() {
        let man = euclid(3);
        let mesh = log_mesh(1.0, 100.0, 512);
        let u = RadialFunction::from_fn(mesh, |r| (1.0 / (4.0 * PI * r), -1.0 / (4.0 * PI * r * r))).unwrap();
        let zero = RadialMap::constant(0.0);
        for r in [1.0, 1.7, 10.0, 55.5, 100.0] {
            let res = man.radial_laplacian_residual(&u, &zero, 2.0, r).unwrap();
            assert!(res.abs() < 1e-6, "{r}: {res}");
        }
        assert!(matches!(
            man.radial_laplacian_residual(&u, &zero, 2.0, 0.5),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn constants_are_not_supersolutions() {
        let man = euclid(3);
        let u = RadialFunction::from_fn(log_mesh(1.0, 10.0, 64), |_| (2.0, 0.0)).unwrap();
        let v = RadialMap::new("1+r", |r| 1.0 + r);
        let res = man.radial_laplacian_residual(&u, &v, 3.0, 4.0).unwrap();
        assert!((res - 5.0 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn brooks_bound_for_hyperbolic_plane() {
        let man = ModelManifold::new(2, WarpingProfile::hyperbolic()).unwrap();
        let grid: Vec<f64> = (0..=12).map(|k| 10f64.powf(2.0 + 0.25 * k as f64)).collect();
        let b = man.brooks_bound(&grid).unwrap();
        assert!((b - 0.25).abs() < 1e-3, "{b}");
        assert!(euclid(3).brooks_bound(&grid).unwrap() < 1e-3);
    }

    #[test]
    fn small_balls_are_euclidean() {
        for man in [example51(), ModelManifold::new(4, WarpingProfile::hyperbolic()).unwrap()] {
            let m = man.dimension() as f64;
            let r: f64 = 1e-3;
            let ratio = man.ball_volume(r).unwrap() / r.powf(m);
            assert!((ratio / (man.omega() / m) - 1.0).abs() < 1e-2);
        }
    }

    proptest! {
        #[test]
        fn area_is_derivative_of_volume(r in 0.05f64..40.0) {
            let man = example51();
            let h = 1e-4 * r;
            let dv = (man.ball_volume(r + h).unwrap() - man.ball_volume(r - h).unwrap()) / (2.0 * h);
            let s = man.surface_area(r).unwrap();
            prop_assert!(((dv - s) / s).abs() < 1e-6);
        }

        #[test]
        fn residual_is_linear_without_potential(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, r in 1.0f64..9.0) {
            let man = ModelManifold::new(3, WarpingProfile::hyperbolic()).unwrap();
            let mesh = log_mesh(1.0, 9.0, 256);
            let u1 = RadialFunction::from_fn(mesh.clone(), |r| (c1 * r.sin(), c1 * r.cos())).unwrap();
            let u2 = RadialFunction::from_fn(mesh.clone(), |r| (c2 / r, -c2 / (r * r))).unwrap();
            let u12 = RadialFunction::from_fn(mesh, |r| (c1 * r.sin() + c2 / r, c1 * r.cos() - c2 / (r * r))).unwrap();
            let zero = RadialMap::constant(0.0);
            let a = man.radial_laplacian_residual(&u1, &zero, 2.0, r).unwrap();
            let b = man.radial_laplacian_residual(&u2, &zero, 2.0, r).unwrap();
            let ab = man.radial_laplacian_residual(&u12, &zero, 2.0, r).unwrap();
            prop_assert!((ab - a - b).abs() < 1e-10);
        }

        #[test]
        fn ricci_is_m_minus_one_times_sectional(r in 0.01f64..1e6) {
            let man = example51();
            let c = man.radial_curvatures(r).unwrap();
            prop_assert_eq!(c.ricci_radial, 2.0 * c.sectional);
        }
    }
}
