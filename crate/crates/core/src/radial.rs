//! Radial scalar data: closed-form maps `r ↦ f(r)` and sampled functions
//! carrying values and derivatives on a mesh.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::hermite::{self, Jet};
use crate::numerics::stencil::{fornberg, MeshStencils, DIFF_POINTS};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closed-form radial map, optionally with its logarithm and derivative
/// supplied separately so that huge or tiny magnitudes stay representable.
#[derive(Clone)]
pub struct RadialMap {
    label: String,
    value: ScalarFn,
    ln: Option<ScalarFn>,
    derivative: Option<ScalarFn>,
}

impl fmt::Debug for RadialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialMap").field("label", &self.label).finish()
    }
}

impl RadialMap {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(f),
            ln: None,
            derivative: None,
        }
    }

    /// Supplies `ln f` directly.
    pub fn with_ln(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.ln = Some(Arc::new(g));
        self
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn constant(c: f64) -> Self {
        let lc = c.ln();
        Self::new(format!("{c}"), move |_| c)
            .with_ln(move |_| lc)
            .with_derivative(|_| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, r: f64) -> f64 {
        let v = (self.value)(r);
        match &self.ln {
            Some(g) if !v.is_finite() => g(r).exp(),
            _ => v,
        }
    }

    /// `ln f(r)`; `-inf` where `f` vanishes.
    pub fn ln_eval(&self, r: f64) -> f64 {
        match &self.ln {
            Some(g) => g(r),
            None => (self.value)(r).ln(),
        }
    }

    /// `f'(r)`, from the supplied derivative or a centred difference.
    pub fn derivative(&self, r: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(r),
            None => {
                let h = 1e-5 * r.abs().max(1e-3);
                let lo = (r - h).max(0.0);
                ((self.value)(r + h) - (self.value)(lo)) / (r + h - lo)
            }
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `c·f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let (v, l, d) = (self.value.clone(), self.ln.clone(), self.derivative.clone());
        let lc = c.ln();
        let mut out = Self::new(format!("{c}*({})", self.label), move |r| c * v(r));
        out.ln = Some(match l {
            Some(l) => Arc::new(move |r| lc + l(r)),
            None => {
                let v = self.value.clone();
                Arc::new(move |r| lc + v(r).ln())
            }
        });
        out.derivative = d.map(|d| Arc::new(move |r| c * d(r)) as ScalarFn);
        out
    }

    /// Pointwise product of two positive maps.
    pub fn product(&self, other: &RadialMap) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let (lf, lg) = (self.clone(), other.clone());
        let mut out = Self::new(format!("({})*({})", self.label, other.label), move |r| {
            f.eval(r) * g.eval(r)
        })
        .with_ln(move |r| lf.ln_eval(r) + lg.ln_eval(r));
        if self.has_derivative() && other.has_derivative() {
            let (f, g) = (self.clone(), other.clone());
            out = out.with_derivative(move |r| f.derivative(r) * g.eval(r) + f.eval(r) * g.derivative(r));
        }
        out
    }

    /// Wraps a sampled function; evaluation outside its range yields NaN.
    pub fn from_sampled(label: impl Into<String>, u: RadialFunction) -> Self {
        let (a, b, c) = (u.clone(), u.clone(), u);
        Self::new(label, move |r| a.value(r).unwrap_or(f64::NAN))
            .with_ln(move |r| b.value(r).map(f64::ln).unwrap_or(f64::NAN))
            .with_derivative(move |r| c.derivative(r).unwrap_or(f64::NAN))
    }
}

/// How a [`RadialFunction`] interpolates between mesh nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    /// Quintic Hermite through values, slopes and nodal second derivatives,
    /// the latter from high-order differences of the stored slopes.
    #[default]
    Hermite,
    /// Cubic Hermite through values and slopes; second derivatives from the
    /// Fritsch–Carlson interpolant of the stored slopes.
    MonotoneCubic,
}

/// Which one-sided limit to take at a seam between segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One smooth piece of a [`RadialFunction`].
#[derive(Clone, Debug)]
pub struct Segment {
    mesh: Vec<f64>,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Segment {
    fn new(mesh: Vec<f64>, values: Vec<f64>, d1: Vec<f64>, interp: Interpolation) -> Result<Self> {
        let n = mesh.len();
        if n < 2 || values.len() != n || d1.len() != n {
            return Err(Error::Mesh(format!(
                "segment needs at least two nodes and matching arrays (mesh {n}, values {}, derivatives {})",
                values.len(),
                d1.len()
            )));
        }
        if let Some(w) = mesh.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh(format!(
                "mesh is not strictly increasing near r = {}",
                w[0]
            )));
        }
        if values.iter().chain(&d1).any(|v| !v.is_finite()) {
            return Err(Error::Mesh("non-finite sample".into()));
        }
        let d2 = match interp {
            Interpolation::Hermite => nodal_derivative(&mesh, &d1),
            Interpolation::MonotoneCubic => hermite::pchip_slopes(&mesh, &d1),
        };
        Ok(Self { mesh, values, d1, d2 })
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn derivatives(&self) -> &[f64] {
        &self.d1
    }
    pub fn second_derivatives(&self) -> &[f64] {
        &self.d2
    }
    pub fn start(&self) -> f64 {
        self.mesh[0]
    }
    pub fn end(&self) -> f64 {
        *self.mesh.last().expect("segment has nodes")
    }

    fn jet(&self, r: f64, interp: Interpolation) -> Jet {
        let n = self.mesh.len();
        let i = self.mesh.partition_point(|&x| x <= r).saturating_sub(1).min(n - 2);
        if self.mesh[i] == r {
            return self.node_jet(i);
        }
        if self.mesh[i + 1] == r {
            return self.node_jet(i + 1);
        }
        let (x0, x1) = (self.mesh[i], self.mesh[i + 1]);
        match interp {
            Interpolation::Hermite => hermite::quintic(
                x0,
                x1,
                self.values[i],
                self.d1[i],
                self.d2[i],
                self.values[i + 1],
                self.d1[i + 1],
                self.d2[i + 1],
                r,
            ),
            Interpolation::MonotoneCubic => {
                let v = hermite::cubic(x0, x1, self.values[i], self.d1[i], self.values[i + 1], self.d1[i + 1], r);
                let d = hermite::cubic(x0, x1, self.d1[i], self.d2[i], self.d1[i + 1], self.d2[i + 1], r);
                Jet {
                    value: v.value,
                    d1: v.d1,
                    d2: d.d1,
                }
            }
        }
    }

    fn node_jet(&self, i: usize) -> Jet {
        Jet {
            value: self.values[i],
            d1: self.d1[i],
            d2: self.d2[i],
        }
    }
}

/// Nodal derivative of `f` sampled on `mesh`, sixth order where the mesh
/// allows it.
pub fn nodal_derivative(mesh: &[f64], f: &[f64]) -> Vec<f64> {
    if mesh.len() >= DIFF_POINTS {
        MeshStencils::new(mesh).differentiate(f)
    } else {
        mesh.iter()
            .map(|&x| {
                let w = fornberg(x, mesh, 1);
                w.iter().zip(f).map(|(w, v)| w * v).sum()
            })
            .collect()
    }
}

/// A node of a [`RadialFunction`] together with its stored jet.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub segment: usize,
    pub index: usize,
    pub r: f64,
    pub jet: Jet,
}

/// Sampled radial function, possibly made of several C¹-matched segments.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    segments: Vec<Segment>,
    interpolation: Interpolation,
}

impl RadialFunction {
    pub fn new(mesh: Vec<f64>, values: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        Self::with_interpolation(mesh, values, derivatives, Interpolation::Hermite)
    }

    pub fn with_interpolation(
        mesh: Vec<f64>,
        values: Vec<f64>,
        derivatives: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        Ok(Self {
            segments: vec![Segment::new(mesh, values, derivatives, interpolation)?],
            interpolation,
        })
    }

    /// Samples `f(r) = (value, derivative)` on `mesh`.
    pub fn from_fn(mesh: Vec<f64>, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (values, d1): (Vec<f64>, Vec<f64>) = mesh.iter().map(|&r| f(r)).unzip();
        Self::new(mesh, values, d1)
    }

    /// Joins segments given as `(mesh, values, derivatives)`; each segment
    /// must start where the previous one ends.
    pub fn piecewise(pieces: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>, interpolation: Interpolation) -> Result<Self> {
        let mut segments = Vec::with_capacity(pieces.len());
        for (mesh, values, d1) in pieces {
            let seg = Segment::new(mesh, values, d1, interpolation)?;
            if let Some(prev) = segments.last() {
                let prev: &Segment = prev;
                if prev.end() != seg.start() {
                    return Err(Error::Mesh(format!(
                        "segments do not share a seam: {} vs {}",
                        prev.end(),
                        seg.start()
                    )));
                }
            }
            segments.push(seg);
        }
        if segments.is_empty() {
            return Err(Error::Mesh("no segments".into()));
        }
        Ok(Self {
            segments,
            interpolation,
        })
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Radii where two segments meet.
    pub fn seams(&self) -> Vec<f64> {
        self.segments[1..].iter().map(Segment::start).collect()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.segments[0].start(), self.segments.last().expect("non-empty").end())
    }

    fn locate(&self, r: f64, side: Side) -> Result<&Segment> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return Err(Error::Extrapolation { r, lo, hi });
        }
        let seg = match side {
            Side::Right => self
                .segments
                .iter()
                .find(|s| r < s.end())
                .unwrap_or_else(|| self.segments.last().expect("non-empty")),
            Side::Left => self
                .segments
                .iter()
                .find(|s| r <= s.end() && r > s.start())
                .unwrap_or(&self.segments[0]),
        };
        Ok(seg)
    }

    /// Value and derivatives at `r`; at a seam the right-hand limit.
    pub fn jet(&self, r: f64) -> Result<Jet> {
        self.jet_side(r, Side::Right)
    }

    pub fn jet_side(&self, r: f64, side: Side) -> Result<Jet> {
        Ok(self.locate(r, side)?.jet(r, self.interpolation))
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(self.jet(r)?.value)
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        Ok(self.jet(r)?.d1)
    }

    /// All stored nodes, segment by segment; seam radii appear once per side.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.segments.iter().enumerate().flat_map(|(s, seg)| {
            (0..seg.mesh.len()).map(move |i| Node {
                segment: s,
                index: i,
                r: seg.mesh[i],
                jet: seg.node_jet(i),
            })
        })
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.mesh.len()).sum()
    }

    /// `c·u`.
    pub fn scaled(&self, c: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                mesh: s.mesh.clone(),
                values: s.values.iter().map(|v| c * v).collect(),
                d1: s.d1.iter().map(|v| c * v).collect(),
                d2: s.d2.iter().map(|v| c * v).collect(),
            })
            .collect();
        Self {
            segments,
            interpolation: self.interpolation,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}
