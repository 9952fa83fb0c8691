//! Turns a parsed [`Config`] into a fully resolved [`Scenario`].

use std::collections::BTreeSet;
use std::str::FromStr;

use liouville_core::counterexample::GlueOptions;
use liouville_core::growth::{critical_exponents, default_eps_grid, Condition, ExponentSet, RegionKind, Variant};
use liouville_core::manifold::{custom_piece, ModelManifold, Piece, WarpingProfile};
use liouville_core::numerics::lattice::log_mesh;
use liouville_core::presets::{manifold_by_name, ExampleId, ExamplePreset, PRESET_NAMES};
use liouville_core::radial::RadialMap;

use crate::config::{Config, Entry, Section};
use crate::error::{CliError, Context};
use crate::expr::{finite_difference, Expr};

pub const DEFAULT_SEED: u64 = 0x5eed;
const DERIVATIVE_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    CheckGrowth,
    Counterexample,
    Eigen,
    CapacityProbe,
    LowerOrder,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::CheckGrowth,
        TaskKind::Counterexample,
        TaskKind::Eigen,
        TaskKind::CapacityProbe,
        TaskKind::LowerOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::CheckGrowth => "check-growth",
            TaskKind::Counterexample => "counterexample",
            TaskKind::Eigen => "eigen",
            TaskKind::CapacityProbe => "capacity-probe",
            TaskKind::LowerOrder => "lower-order",
        }
    }
}

/// What `check-growth` evaluates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GrowthCheck {
    Hp(Condition),
    Sufficient(Variant),
    /// The failure pattern of one of the three examples.
    Certificates,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthTask {
    pub check: GrowthCheck,
    pub c0: f64,
    pub k: f64,
    pub theta: f64,
    pub tau: f64,
    pub region: RegionKind,
    pub slack: f64,
    pub r_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// `Some(true)` for "holds", `Some(false)` for "fails".
    pub expect: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlueTask {
    pub opts: GlueOptions,
    /// Whether the glued function is expected to verify.
    pub expect_pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenTask {
    pub rho: f64,
    pub tol: f64,
    pub per_decade: usize,
    pub expect_lambda: Option<f64>,
    pub expect_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityTask {
    pub glue: GlueOptions,
    pub radii: Vec<f64>,
    pub c0: f64,
    pub n: u32,
    pub s_energy: Option<f64>,
    pub s_potential: Option<f64>,
    pub max_spread: f64,
    pub expect_bounded: Option<bool>,
}

#[derive(Clone, Debug)]
pub enum LowerOrderTask {
    Suite {
        cases: usize,
        expect_agree: bool,
    },
    Auxiliary {
        b: Expr,
        b0: Option<Expr>,
        z0: f64,
        z0prime: f64,
        r_max: f64,
        /// Comparison condition the solution must admit.
        expect: Option<char>,
    },
}

#[derive(Clone, Debug)]
pub enum Task {
    CheckGrowth(GrowthTask),
    Counterexample(GlueTask),
    Eigen(EigenTask),
    CapacityProbe(CapacityTask),
    LowerOrder(LowerOrderTask),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: TaskKind,
    pub task: Task,
    /// Manifold, potential and `σ`; a custom preset when anything was overridden.
    pub preset: ExamplePreset,
    pub exps: ExponentSet,
    pub seed: u64,
    pub out: String,
    /// Every key actually used, defaults included.
    pub resolved: Config,
}

/// Overrides that come from the command line rather than the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
}

/// Reads keys from one section, recording the value used for each.
struct Reader<'a> {
    section: Option<&'a Section>,
    used: BTreeSet<String>,
    out: Section,
}

impl<'a> Reader<'a> {
    fn new(name: &str, section: Option<&'a Section>) -> Self {
        Self {
            section,
            used: BTreeSet::new(),
            out: Section {
                name: name.to_string(),
                line: section.map_or(0, |s| s.line),
                entries: Vec::new(),
            },
        }
    }

    fn entry(&mut self, key: &str) -> Option<&'a Entry> {
        self.used.insert(key.to_string());
        self.section.and_then(|s| s.get(key))
    }

    fn record(&mut self, key: &str, value: String) {
        self.out.entries.push(Entry {
            key: key.to_string(),
            value,
            line: 0,
            column: 0,
        });
    }

    fn missing(&self, key: &str) -> CliError {
        let line = self.section.map_or(1, |s| s.line.max(1));
        let where_ = if self.out.name.is_empty() {
            String::new()
        } else {
            format!(" in [{}]", self.out.name)
        };
        CliError::parse(line, 1, format!("missing required key '{key}'{where_}"))
    }

    fn string(&mut self, key: &str) -> Option<(String, &'a Entry)> {
        let e = self.entry(key)?;
        self.record(key, e.value.clone());
        Some((e.value.clone(), e))
    }

    fn parsed<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let v = e
            .value
            .parse::<T>()
            .map_err(|_| CliError::parse(e.line, e.column, format!("'{key}' must be {what}, got '{}'", e.value)))?;
        self.record(key, e.value.clone());
        Ok(Some(v))
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let v = parse_number(e)?;
        self.record(key, e.value.clone());
        Ok(Some(v))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.f64_opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, fmt_number(default));
                Ok(default)
            }
        }
    }

    /// A value checked against `lo < v < hi`.
    fn f64_in(&mut self, key: &str, default: f64, lo: f64, hi: f64) -> Result<f64, CliError> {
        let e = self.section.and_then(|s| s.get(key)).cloned();
        let v = self.f64_or(key, default)?;
        if !(v > lo && v < hi) {
            let (line, col) = e.map_or((0, 0), |e| (e.line, e.column));
            return Err(CliError::parse(line, col, format!("'{key}' = {v} lies outside ({lo}, {hi})")));
        }
        Ok(v)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.parsed::<usize>(key, "a nonnegative integer")? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let Some(e) = self.entry(key) else {
            self.record(key, default.iter().map(|&x| fmt_number(x)).collect::<Vec<_>>().join(", "));
            return Ok(default.to_vec());
        };
        let mut out = Vec::new();
        let mut offset = 0;
        for part in e.value.split(',') {
            let t = part.trim();
            let lead = part.len() - part.trim_start().len();
            let x = t.parse::<f64>().map_err(|_| {
                CliError::parse(e.line, e.column + e.value[..offset + lead].chars().count(), format!("'{t}' is not a number"))
            })?;
            out.push(x);
            offset += part.len() + 1;
        }
        self.record(key, e.value.clone());
        Ok(out)
    }

    fn expr_opt(&mut self, key: &str) -> Result<Option<Expr>, CliError> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let x = parse_expr(e)?;
        self.record(key, e.value.clone());
        Ok(Some(x))
    }

    /// Rejects keys that were never asked for.
    fn finish(self) -> Result<Section, CliError> {
        if let Some(s) = self.section {
            if let Some(e) = s.entries.iter().find(|e| !self.used.contains(&e.key)) {
                let col = e.column.saturating_sub(e.key.len() + 3).max(1);
                let where_ = if s.name.is_empty() {
                    String::new()
                } else {
                    format!(" in [{}]", s.name)
                };
                return Err(CliError::parse(e.line, col, format!("unknown key '{}'{where_}", e.key)));
            }
        }
        Ok(self.out)
    }
}

fn parse_number(e: &Entry) -> Result<f64, CliError> {
    let x = match e.value.as_str() {
        "inf" | "infinity" => f64::INFINITY,
        v => Expr::parse(v)
            .ok()
            .filter(Expr::is_constant)
            .map(|x| x.eval(f64::NAN))
            .ok_or_else(|| CliError::parse(e.line, e.column, format!("'{}' must be a number, got '{}'", e.key, e.value)))?,
    };
    if x.is_nan() {
        return Err(CliError::parse(e.line, e.column, format!("'{}' evaluates to NaN", e.key)));
    }
    Ok(x)
}

fn parse_expr(e: &Entry) -> Result<Expr, CliError> {
    Expr::parse(&e.value).map_err(|x| CliError::parse(e.line, e.column + x.column - 1, format!("in '{}': {}", e.key, x.message)))
}

pub fn fmt_number(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x != 0.0 && !(1e-3..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Points inside `[a, b)` for derivative and positivity checks.
fn sample_points(a: f64, b: f64) -> Vec<f64> {
    if b.is_finite() {
        (0..12).map(|k| a + (b - a) * (k as f64 + 0.5) / 12.0).collect()
    } else {
        let lo = a.max(1e-2) * 1.01;
        let hi = (100.0f64).max(10.0 * lo);
        (0..12).map(|k| lo * (hi / lo).powf(k as f64 / 11.0)).collect()
    }
}

/// Compares `d` with a difference quotient of `f` at every sample point.
fn check_derivative(f: &Expr, d: &Expr, pts: &[f64], at: &Entry) -> Result<(), CliError> {
    for &r in pts {
        let h = 1e-3 * r.max(1e-3);
        let fd = finite_difference(|x| f.eval(x), r, h.min(0.2 * r));
        let given = d.eval(r);
        let scale = given.abs().max(fd.abs()).max(1e-8 * f.eval(r).abs() / r.max(1.0));
        if !given.is_finite() || (given - fd).abs() > DERIVATIVE_TOL * scale {
            return Err(CliError::parse(
                at.line,
                at.column,
                format!(
                    "'{}' = {} disagrees with the derivative of '{}' at r = {r}: {given:e} vs difference quotient {fd:e}",
                    at.key,
                    d.source(),
                    f.source()
                ),
            ));
        }
    }
    Ok(())
}

fn expr_map(label: &str, f: Expr, d: Option<Expr>) -> RadialMap {
    let g = f.clone();
    let map = RadialMap::new(format!("{label} = {}", f.source()), move |r| g.eval(r));
    match d {
        Some(d) => map.with_derivative(move |r| d.eval(r)),
        None => map,
    }
}

/// A value and its optional derivative, checked against each other and for
/// positivity on a log grid.
fn positive_map(top: &mut Reader<'_>, key: &str, dkey: &str, require_derivative: bool) -> Result<Option<RadialMap>, CliError> {
    let entry = top.section.and_then(|s| s.get(key)).cloned();
    let Some(f) = top.expr_opt(key)? else {
        if let Some(e) = top.section.and_then(|s| s.get(dkey)) {
            return Err(CliError::parse(e.line, e.column, format!("'{dkey}' given without '{key}'")));
        }
        return Ok(None);
    };
    let entry = entry.expect("present");
    let dentry = top.section.and_then(|s| s.get(dkey)).cloned();
    let d = top.expr_opt(dkey)?;
    if d.is_none() && require_derivative && !f.is_constant() {
        return Err(CliError::parse(entry.line, entry.column, format!("'{key}' needs its derivative '{dkey}'")));
    }
    if let (Some(d), Some(de)) = (&d, &dentry) {
        check_derivative(&f, d, &sample_points(0.0, f64::INFINITY), de)?;
    }
    for r in log_mesh(1e-3, 1e7, 4) {
        let v = f.eval(r);
        if !(v >= 0.0) || v.is_infinite() {
            return Err(CliError::parse(entry.line, entry.column, format!("'{key}' = {} is not finite and nonnegative at r = {r:e}", f.source())));
        }
    }
    let d = d.or_else(|| f.is_constant().then(|| Expr::parse("0").expect("literal")));
    Ok(Some(expr_map(key, f, d)))
}

fn custom_profile(config: &Config, sections: &mut Vec<Section>) -> Result<WarpingProfile, CliError> {
    let mut pieces = Vec::new();
    let mut next_start = 0.0;
    for s in config.sections_named("piece") {
        let mut rd = Reader::new("piece", Some(s));
        let start = rd.f64_or("start", next_start)?;
        let end = rd.f64_or("end", f64::INFINITY)?;
        let mut need = |key: &str| -> Result<(Expr, Entry), CliError> {
            let e = rd.section.and_then(|s| s.get(key)).cloned().ok_or_else(|| rd.missing(key))?;
            Ok((rd.expr_opt(key)?.expect("present"), e))
        };
        let (f, _) = need("psi")?;
        let (df, de) = need("dpsi")?;
        let (ddf, dde) = need("ddpsi")?;
        let pts = sample_points(start, end);
        check_derivative(&f, &df, &pts, &de)?;
        check_derivative(&df, &ddf, &pts, &dde)?;
        let label = f.source().to_string();
        let (a, b, c) = (f.clone(), df.clone(), ddf.clone());
        pieces.push(Piece {
            start,
            end,
            kind: custom_piece(label, move |r| a.eval(r), move |r| b.eval(r), move |r| c.eval(r)),
        });
        next_start = end;
        sections.push(rd.finish()?);
    }
    WarpingProfile::from_pieces(pieces).context("custom profile")
}

fn expect_word(top: &mut Reader<'_>, allowed: &[(&str, bool)]) -> Result<Option<bool>, CliError> {
    let Some((v, e)) = top.string("expect") else {
        return Ok(None);
    };
    allowed.iter().find(|(w, _)| *w == v).map(|&(_, b)| Some(b)).ok_or_else(|| {
        let words: Vec<&str> = allowed.iter().map(|w| w.0).collect();
        CliError::parse(e.line, e.column, format!("'expect' must be one of {}, got '{v}'", words.join(", ")))
    })
}

fn r_grid(rd: &mut Reader<'_>) -> Result<Vec<f64>, CliError> {
    let lo = rd.f64_in("r_min", 1e2, 1.0, f64::INFINITY)?;
    let hi = rd.f64_in("r_max", 1e7, lo, f64::INFINITY)?;
    let per = rd.usize_or("points_per_decade", 2)?.max(1);
    Ok(log_mesh(lo, hi, per))
}

fn glue_options(rd: &mut Reader<'_>, preset: &ExamplePreset) -> Result<GlueOptions, CliError> {
    let base = GlueOptions::for_preset(preset);
    let rho = rd.f64_in("rho", base.rho, 0.0, f64::INFINITY)?;
    let r0_hint = rd.f64_in("r0", base.r0_hint, 0.0, f64::INFINITY)?;
    let r_report = rd.f64_in("r_report", base.r_report, r0_hint, f64::INFINITY)?;
    let per_decade = rd.usize_or("per_decade", base.per_decade)?;
    let tol = rd.f64_in("tol", base.tol, 1e-14, 1e-2)?;
    let max_rho_doublings = rd.usize_or("max_rho_doublings", base.max_rho_doublings)?;
    Ok(GlueOptions {
        rho,
        r0_hint,
        r_report,
        per_decade,
        tol,
        max_rho_doublings,
    })
}

fn growth_task(rd: &mut Reader<'_>, top: &mut Reader<'_>, preset: &ExamplePreset, exps: &ExponentSet) -> Result<GrowthTask, CliError> {
    let (name, e) = match rd.string("condition") {
        Some((v, e)) => (v, e.clone()),
        None => {
            rd.record("condition", "HP1".into());
            ("HP1".to_string(), DEFAULT_ENTRY.clone())
        }
    };
    let check = match name.as_str() {
        "HP1" => GrowthCheck::Hp(Condition::Hp1),
        "HP2" => GrowthCheck::Hp(Condition::Hp2),
        "HP3" => GrowthCheck::Hp(Condition::Hp3),
        "i" => GrowthCheck::Sufficient(Variant::I),
        "ii" => GrowthCheck::Sufficient(Variant::II),
        "iii" => GrowthCheck::Sufficient(Variant::III),
        "certificates" => GrowthCheck::Certificates,
        _ => {
            return Err(CliError::parse(
                e.line,
                e.column,
                format!("unknown condition '{name}', expected HP1, HP2, HP3, i, ii, iii or certificates"),
            ))
        }
    };
    if check == GrowthCheck::Certificates {
        if preset.id == ExampleId::Custom {
            return Err(CliError::parse(e.line, e.column, "certificates need preset example51, example52 or example53 without overrides"));
        }
        return Ok(GrowthTask {
            check,
            c0: f64::NAN,
            k: f64::NAN,
            theta: f64::NAN,
            tau: f64::NAN,
            region: RegionKind::HalfAnnulus,
            slack: f64::NAN,
            r_grid: Vec::new(),
            eps_grid: Vec::new(),
            expect: expect_word(top, &[("match", true)])?.or(Some(true)),
        });
    }
    let default_k = match check {
        GrowthCheck::Hp(Condition::Hp2) | GrowthCheck::Sufficient(Variant::II) => exps.beta,
        _ => 0.0,
    };
    let c0 = rd.f64_or("c0", 1.0)?;
    let k = rd.f64_or("k", default_k)?;
    let theta = rd.f64_or("theta", 1.0)?;
    let tau = rd.f64_or("tau", 2.0)?;
    let region = match rd.string("region") {
        None => {
            rd.record("region", "half-annulus".into());
            RegionKind::HalfAnnulus
        }
        Some((v, e)) => match v.as_str() {
            "half-annulus" => RegionKind::HalfAnnulus,
            "ball" => RegionKind::Ball,
            "outer-annulus" => RegionKind::OuterAnnulus,
            _ => return Err(CliError::parse(e.line, e.column, format!("unknown region '{v}', expected half-annulus, ball or outer-annulus"))),
        },
    };
    let slack = rd.f64_in("slack", 0.05, -1.0, 10.0)?;
    let r_grid = r_grid(rd)?;
    let eps_grid = rd.list_or("eps", &default_eps_grid())?;
    let expect = expect_word(top, &[("hold", true), ("holds", true), ("fail", false), ("fails", false)])?;
    Ok(GrowthTask {
        check,
        c0,
        k,
        theta,
        tau,
        region,
        slack,
        r_grid,
        eps_grid,
        expect,
    })
}

static DEFAULT_ENTRY: Entry = Entry {
    key: String::new(),
    value: String::new(),
    line: 0,
    column: 0,
};

impl Scenario {
    pub fn from_text(text: &str, over: &Overrides) -> Result<Self, CliError> {
        Self::from_config(&Config::parse(text)?, over)
    }

    pub fn from_config(config: &Config, over: &Overrides) -> Result<Self, CliError> {
        for s in &config.sections {
            let known = s.name.is_empty() || s.name == "piece" || TaskKind::ALL.iter().any(|t| t.name() == s.name);
            if !known {
                return Err(CliError::parse(s.line, 2, format!("unknown section [{}]", s.name)));
            }
        }
        let mut top = Reader::new("", Some(config.top()));
        let (task_name, task_entry) = top.string("task").ok_or_else(|| top.missing("task"))?;
        let kind = TaskKind::ALL.iter().copied().find(|t| t.name() == task_name).ok_or_else(|| {
            let names: Vec<&str> = TaskKind::ALL.iter().map(|t| t.name()).collect();
            CliError::parse(task_entry.line, task_entry.column, format!("unknown task '{task_name}', expected one of {}", names.join(", ")))
        })?;
        for s in &config.sections {
            if !s.name.is_empty() && s.name != "piece" && s.name != kind.name() && !(kind == TaskKind::CapacityProbe && s.name == "counterexample") {
                return Err(CliError::parse(s.line, 2, format!("section [{}] does not apply to task {}", s.name, kind.name())));
            }
        }

        let has_pieces = config.sections_named("piece").next().is_some();
        let preset_entry = config.top().get("preset").cloned();
        let preset_name = match top.string("preset") {
            Some((v, _)) => v,
            None if has_pieces => {
                top.record("preset", "custom".into());
                "custom".into()
            }
            None => return Err(top.missing("preset")),
        };
        let preset_at = preset_entry.unwrap_or_else(|| DEFAULT_ENTRY.clone());
        if preset_name != "custom" && !PRESET_NAMES.contains(&preset_name.as_str()) {
            return Err(CliError::parse(
                preset_at.line,
                preset_at.column,
                format!("unknown preset '{preset_name}', expected custom or one of {}", PRESET_NAMES.join(", ")),
            ));
        }
        if has_pieces != (preset_name == "custom") {
            let line = config.sections_named("piece").next().map_or(preset_at.line, |s| s.line);
            return Err(CliError::parse(line, 1, "[piece] sections go with preset = custom and only with it"));
        }
        let example = ExamplePreset::by_name(&preset_name);

        let m_entry = config.top().get("m").cloned();
        let m = top.usize_or("m", example.as_ref().map_or(3, |e| e.m))?;
        if m < 2 {
            let e = m_entry.expect("default is admissible");
            return Err(CliError::parse(e.line, e.column, format!("dimension m must be at least 2, got {m}")));
        }
        let p = top.f64_in("p", 2.0, 1.0, f64::INFINITY)?;
        let sigma = match (top.f64_opt("sigma")?, &example) {
            (Some(s), _) => s,
            (None, Some(e)) => {
                top.record("sigma", fmt_number(e.sigma));
                e.sigma
            }
            (None, None) => return Err(top.missing("sigma")),
        };
        let beta0 = match example.as_ref().map(|e| e.id) {
            Some(ExampleId::Ex51) => Some(top.f64_or("beta0", 1.0)?),
            _ => None,
        };
        let delta = match example.as_ref().map(|e| e.id) {
            Some(ExampleId::Ex51 | ExampleId::Ex52) => Some(top.f64_or("delta", 0.25)?),
            _ => None,
        };
        let exps = critical_exponents(p, sigma).context("exponents")?;

        let mut extra = Vec::new();
        let built = match example.as_ref().map(|e| e.id) {
            Some(ExampleId::Ex51) => Some(ExamplePreset::example51_with(m, sigma, beta0.unwrap(), delta.unwrap()).context("preset example51")?),
            Some(ExampleId::Ex52) => Some(ExamplePreset::example52_with(m, sigma, delta.unwrap()).context("preset example52")?),
            Some(ExampleId::Ex53) => Some(ExamplePreset::example53_with(m, sigma).context("preset example53")?),
            _ => None,
        };
        let manifold = match (&built, preset_name.as_str()) {
            (Some(b), _) => b.manifold().clone(),
            (None, "custom") => ModelManifold::new(m, custom_profile(config, &mut extra)?).context("custom manifold")?,
            (None, name) => manifold_by_name(name, m).context("manifold")?,
        };
        let weight = positive_map(&mut top, "weight", "dweight", true)?;
        let potential = positive_map(&mut top, "V", "dV", false)?;
        let overridden = weight.is_some() || potential.is_some();
        let manifold = match weight {
            Some(a) => manifold.with_weight(a).context("weight")?,
            None => manifold,
        };
        let preset = match built {
            Some(b) if !overridden => b,
            b => {
                let v = match (potential, b) {
                    (Some(v), _) => v,
                    (None, Some(b)) => b.potential().clone(),
                    (None, None) => {
                        top.record("V", "1".into());
                        RadialMap::constant(1.0)
                    }
                };
                ExamplePreset::custom(manifold, v, sigma).context("scenario")?
            }
        };

        let seed = match top.parsed::<u64>("seed", "an unsigned integer")? {
            Some(s) => over.seed.unwrap_or(s),
            None => over.seed.unwrap_or(DEFAULT_SEED),
        };
        let out = match (&over.out, top.string("out")) {
            (Some(o), _) => o.clone(),
            (None, Some((o, _))) => o,
            (None, None) => "out".into(),
        };

        let mut rd = Reader::new(kind.name(), config.section(kind.name())?);
        let task = match kind {
            TaskKind::CheckGrowth => Task::CheckGrowth(growth_task(&mut rd, &mut top, &preset, &exps)?),
            TaskKind::Counterexample => {
                require_p2(&exps, config)?;
                let opts = glue_options(&mut rd, &preset)?;
                let expect_pass = expect_word(&mut top, &[("pass", true), ("fail", false)])?.unwrap_or(true);
                Task::Counterexample(GlueTask { opts, expect_pass })
            }
            TaskKind::Eigen => {
                let rho = rd.f64_in("rho", 1.0, 0.0, f64::INFINITY)?;
                let tol = rd.f64_in("tol", 1e-10, 1e-15, 1e-2)?;
                let per_decade = rd.usize_or("per_decade", liouville_core::numerics::lattice::DEFAULT_PER_DECADE)?;
                let expect_lambda = rd.f64_opt("expect_lambda")?;
                let expect_tol = rd.f64_in("expect_tol", 1e-6, 0.0, f64::INFINITY)?;
                Task::Eigen(EigenTask {
                    rho,
                    tol,
                    per_decade,
                    expect_lambda,
                    expect_tol,
                })
            }
            TaskKind::CapacityProbe => {
                require_p2(&exps, config)?;
                let mut g = Reader::new("counterexample", config.section("counterexample")?);
                let glue = glue_options(&mut g, &preset)?;
                let glue_section = g.finish()?;
                let radii = rd.list_or("radii", &[1e3, 1e4, 1e5, 1e6])?;
                let c0 = rd.f64_or("c0", 1.0)?;
                let n = rd.usize_or("n", 1)? as u32;
                let s_energy = rd.f64_opt("s_energy")?;
                let s_potential = rd.f64_opt("s_potential")?;
                let max_spread = rd.f64_in("max_spread", 1e3, 1.0, f64::INFINITY)?;
                let expect_bounded = expect_word(&mut top, &[("bounded", true), ("unbounded", false)])?;
                extra.push(glue_section);
                Task::CapacityProbe(CapacityTask {
                    glue,
                    radii,
                    c0,
                    n,
                    s_energy,
                    s_potential,
                    max_spread,
                    expect_bounded,
                })
            }
            TaskKind::LowerOrder => {
                let mode = match rd.string("mode") {
                    None => {
                        rd.record("mode", "suite".into());
                        "suite".to_string()
                    }
                    Some((v, _)) if v == "suite" || v == "auxiliary" => v,
                    Some((v, e)) => return Err(CliError::parse(e.line, e.column, format!("unknown mode '{v}', expected suite or auxiliary"))),
                };
                if mode == "suite" {
                    let cases = rd.usize_or("cases", 50)?;
                    let expect_agree = expect_word(&mut top, &[("agree", true), ("disagree", false)])?.unwrap_or(true);
                    Task::LowerOrder(LowerOrderTask::Suite { cases, expect_agree })
                } else {
                    let b = match rd.expr_opt("b")? {
                        Some(b) => b,
                        None => {
                            rd.record("b", "0".into());
                            Expr::parse("0").expect("literal")
                        }
                    };
                    let b0 = rd.expr_opt("b0")?;
                    let z0 = rd.f64_in("z0", 1.0, 0.0, f64::INFINITY)?;
                    let z0prime = rd.f64_or("z0prime", 0.0)?;
                    let r_max = rd.f64_in("r_max", 1e3, 0.0, f64::INFINITY)?;
                    let expect = match top.string("expect") {
                        None => None,
                        Some((v, _)) if v == "A" || v == "B" => v.chars().next(),
                        Some((v, e)) => return Err(CliError::parse(e.line, e.column, format!("'expect' must be A or B, got '{v}'"))),
                    };
                    Task::LowerOrder(LowerOrderTask::Auxiliary {
                        b,
                        b0,
                        z0,
                        z0prime,
                        r_max,
                        expect,
                    })
                }
            }
        };
        top.out.entries.retain(|e| e.key != "seed" && e.key != "out");
        top.record("seed", seed.to_string());
        top.record("out", out.clone());
        let task_section = rd.finish()?;
        let mut top_section = top.finish()?;
        top_section.entries.sort_by_key(|e| top_order(&e.key));
        let mut sections = vec![top_section];
        sections.extend(extra);
        sections.push(task_section);
        Ok(Self {
            kind,
            task,
            preset,
            exps,
            seed,
            out,
            resolved: Config { sections },
        })
    }
}

fn top_order(key: &str) -> usize {
    const ORDER: [&str; 14] = ["task", "preset", "m", "p", "sigma", "beta0", "delta", "V", "dV", "weight", "dweight", "expect", "seed", "out"];
    ORDER.iter().position(|k| *k == key).unwrap_or(ORDER.len())
}

fn require_p2(exps: &ExponentSet, config: &Config) -> Result<(), CliError> {
    if exps.p != 2.0 {
        let e = config.top().get("p").expect("p differs from its default");
        return Err(CliError::parse(e.line, e.column, "this task needs p = 2"));
    }
    Ok(())
}
