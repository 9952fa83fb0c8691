//! One runner per task kind.

use serde_json::{json, Map, Value};

use liouville_core::capacity::{probe_corollary, probe_lemma22, probe_lemma23, CutoffFamily, InequalityProbe, Lemma};
use liouville_core::counterexample::{build_glued, failure_certificates, GluedSolution};
use liouville_core::growth::{check_condition, check_sufficient, GrowthVerdict, HpParameters, SufficientParameters};
use liouville_core::lower_order::{quotient_suite, solve_auxiliary, ComparisonCondition, LowerOrderProblem};
use liouville_core::radial::{RadialFunction, RadialMap};
use liouville_core::radial_ode::dirichlet_eigen_with;
use liouville_core::Error;

use crate::error::{CliError, Context};
use crate::output::{Csv, Report};
use crate::scenario::{CapacityTask, EigenTask, GlueTask, GrowthCheck, GrowthTask, LowerOrderTask, Scenario};

#[derive(Default)]
pub struct TaskOutput {
    pub report: Report,
    pub files: Vec<(String, String)>,
    pub results: Map<String, Value>,
    /// Why an expectation was not met.
    pub failure: Option<String>,
}

impl TaskOutput {
    fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }

    fn file(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn expect(&mut self, ok: bool, why: impl FnOnce() -> String) {
        if !ok && self.failure.is_none() {
            self.failure = Some(why());
        }
    }
}

fn word(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

fn function_csv(u: &RadialFunction, name: &str) -> String {
    let mut csv = Csv::new(&["r", "segment", name, &format!("d{name}"), &format!("d2{name}")]);
    for n in u.nodes() {
        csv.row(vec![n.r.into(), n.segment.into(), n.jet.value.into(), n.jet.d1.into(), n.jet.d2.into()]);
    }
    csv.finish()
}

fn verdicts_csv(verdicts: &[GrowthVerdict]) -> (String, String) {
    let mut branches = Csv::new(&[
        "condition",
        "branch",
        "eps",
        "exponent",
        "exponent_bound",
        "log_power",
        "log_power_bound",
        "fitted_c",
        "holds",
    ]);
    let mut residuals = Csv::new(&["condition", "branch", "r", "eps", "ln_integral", "slack"]);
    for v in verdicts {
        for b in &v.branches {
            branches.row(vec![
                v.condition.as_str().into(),
                b.name.as_str().into(),
                b.eps.into(),
                b.exponent.into(),
                b.exponent_bound.into(),
                b.log_power.into(),
                b.log_power_bound.into(),
                b.fitted_c.into(),
                b.holds.into(),
            ]);
        }
        for g in &v.residuals {
            residuals.row(vec![
                v.condition.as_str().into(),
                g.branch.as_str().into(),
                g.r.into(),
                g.eps.into(),
                g.ln_integral.into(),
                g.slack.into(),
            ]);
        }
    }
    (branches.finish(), residuals.finish())
}

fn report_verdict(out: &mut TaskOutput, v: &GrowthVerdict) {
    out.report.field(format!("{} verdict", v.condition), word(v.holds));
    out.report.num(format!("{} fitted alpha", v.condition), v.fitted_alpha);
    out.report.num(format!("{} fitted k", v.condition), v.fitted_k);
    out.report.num(format!("{} fitted C", v.condition), v.fitted_c);
    for n in &v.notes {
        out.report.field(format!("{} note", v.condition), n);
    }
}

pub fn check_growth(sc: &Scenario, t: &GrowthTask) -> Result<TaskOutput, CliError> {
    let mut out = TaskOutput::default();
    let (man, v) = (sc.preset.manifold(), sc.preset.potential());
    let verdicts = match t.check {
        GrowthCheck::Hp(which) => {
            let params = HpParameters {
                theta: t.theta,
                tau: t.tau,
                eps_grid: t.eps_grid.clone(),
                r_grid: t.r_grid.clone(),
                region: t.region,
                slack: t.slack,
                ..HpParameters::new(which, t.c0, t.k)
            };
            vec![check_condition(man, v, &sc.exps, &params).context("growth check")?]
        }
        GrowthCheck::Sufficient(variant) => {
            let params = SufficientParameters {
                theta: t.theta,
                tau: t.tau,
                r_grid: t.r_grid.clone(),
                slack: t.slack,
                ..SufficientParameters::new(variant, t.c0, t.k)
            };
            vec![check_sufficient(man, v, &sc.exps, &params).context("sufficient condition check")?]
        }
        GrowthCheck::Certificates => match failure_certificates(&sc.preset) {
            Ok(rep) => {
                let mut pattern = Csv::new(&["condition", "expected_hold", "observed_hold"]);
                for l in &rep.pattern {
                    pattern.row(vec![l.condition.as_str().into(), l.expected_hold.into(), l.observed_hold.into()]);
                    out.report.field(format!("pattern {}", l.condition), word(l.observed_hold));
                }
                let mut fits = Csv::new(&["label", "fitted", "target", "ok"]);
                for b in &rep.bound_fits {
                    fits.row(vec![b.label.as_str().into(), b.fitted.into(), b.target.into(), b.ok.into()]);
                    out.report.field(b.label.clone(), format!("{} (target {})", crate::output::num(b.fitted), crate::output::num(b.target)));
                }
                out.file("pattern.csv", pattern.finish());
                out.file("bounds.csv", fits.finish());
                out.set("certificates", "match");
                rep.verdicts
            }
            Err(Error::Certificate {
                condition,
                expected,
                observed,
            }) => {
                out.set("certificates", "mismatch");
                out.failure = Some(format!("{condition}: expected {expected}, observed {observed}"));
                return Ok(out);
            }
            Err(e) => return Err(e).context("failure certificates"),
        },
    };
    for v in &verdicts {
        report_verdict(&mut out, v);
    }
    let (branches, residuals) = verdicts_csv(&verdicts);
    out.file("branches.csv", branches);
    out.file("residuals.csv", residuals);
    if let GrowthCheck::Hp(_) | GrowthCheck::Sufficient(_) = t.check {
        let v = &verdicts[0];
        out.set("holds", v.holds);
        out.set("fitted_alpha", v.fitted_alpha);
        out.set("fitted_k", v.fitted_k);
        if let Some(e) = t.expect {
            out.expect(v.holds == e, || format!("{} was expected to {} but {}", v.condition, if e { "hold" } else { "fail" }, word(v.holds)));
        }
    }
    Ok(out)
}

fn report_glue(out: &mut TaskOutput, g: &GluedSolution) {
    let rep = &g.residual_report;
    let ratios = g.tail.last_decade_ratios();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
    let r = &mut out.report;
    r.num("xi", g.xi);
    r.num("m_inf", g.m_inf);
    r.num("delta", g.delta_scale);
    r.num("ln delta", g.ln_delta);
    r.num("lambda_rho", g.lambda_rho);
    r.num("m_rho", g.m_rho);
    r.num("rho", g.rho);
    r.field("rho doublings", g.rho_doublings);
    r.num("r0", g.r0);
    r.num("seam value mismatch", g.seam_value_mismatch);
    r.num("seam derivative mismatch", g.seam_derivative_mismatch);
    r.field("tail picard iterations", g.tail.picard_iterations);
    r.num("tail relative residual", g.tail.max_rel_residual);
    r.num("y/gamma last decade min", lo);
    r.num("y/gamma last decade max", hi);
    r.field("residual nodes", rep.nodes.len());
    r.field("residual failures", rep.failures());
    r.num("worst residual r", rep.worst_node().r);
    r.num("worst residual", rep.worst_node().residual);
    r.num("worst residual bound", rep.worst_node().bound);
    r.num("min u", rep.min_u);
    r.field("supersolution", if rep.pass { "verified" } else { "not verified" });
    let res = &mut out.results;
    for (k, v) in [
        ("xi", g.xi),
        ("m_inf", g.m_inf),
        ("ln_delta", g.ln_delta),
        ("lambda_rho", g.lambda_rho),
        ("rho", g.rho),
        ("seam_value_mismatch", g.seam_value_mismatch),
        ("seam_derivative_mismatch", g.seam_derivative_mismatch),
        ("y_over_gamma_min", lo),
        ("y_over_gamma_max", hi),
        ("min_u", rep.min_u),
    ] {
        res.insert(k.into(), json!(v));
    }
    res.insert("residual_pass".into(), json!(rep.pass));
}

pub fn counterexample(sc: &Scenario, t: &GlueTask) -> Result<TaskOutput, CliError> {
    let mut out = TaskOutput::default();
    let p = &sc.preset;
    match build_glued(p.manifold(), p.potential(), p.sigma, &t.opts) {
        Ok(g) => {
            report_glue(&mut out, &g);
            out.file("u.csv", function_csv(&g.u, "u"));
            let mut csv = Csv::new(&["r", "segment", "u", "du", "d2u", "potential", "residual", "bound", "pass"]);
            for n in &g.residual_report.nodes {
                csv.row(vec![
                    n.r.into(),
                    n.segment.into(),
                    n.u.into(),
                    n.du.into(),
                    n.d2u.into(),
                    n.potential.into(),
                    n.residual.into(),
                    n.bound.into(),
                    n.passes().into(),
                ]);
            }
            out.file("residual.csv", csv.finish());
            let pass = g.residual_report.pass;
            out.expect(pass == t.expect_pass, || format!("the glued function was expected to fail verification but passed at all {} nodes", g.residual_report.nodes.len()));
        }
        Err(Error::Verification { r, residual, bound }) => {
            out.set("residual_pass", false);
            out.report.field("supersolution", format!("not verified at r = {r:e}: residual {residual:e} > {bound:e}"));
            out.expect(!t.expect_pass, || format!("supersolution check fails at r = {r:e}: residual {residual:e} exceeds {bound:e}"));
        }
        Err(e) => return Err(e).context("gluing"),
    }
    Ok(out)
}

pub fn eigen(sc: &Scenario, t: &EigenTask) -> Result<TaskOutput, CliError> {
    let mut out = TaskOutput::default();
    let res = dirichlet_eigen_with(sc.preset.manifold(), t.rho, t.tol, t.per_decade).context("eigenvalue")?;
    out.report.num("rho", res.rho);
    out.report.num("lambda", res.lambda);
    out.set("lambda", res.lambda);
    out.file("eigenfunction.csv", function_csv(&res.v, "v"));
    if let Some(want) = t.expect_lambda {
        let err = (res.lambda - want).abs();
        out.report.num("lambda error", err);
        out.expect(err <= t.expect_tol, || format!("lambda = {} differs from {want} by {err:e} > {}", res.lambda, t.expect_tol));
    }
    Ok(out)
}

fn spread(xs: &[f64]) -> f64 {
    let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |a, &x| (a.0.min(x), a.1.max(x)));
    hi / lo
}

pub fn capacity_probe(sc: &Scenario, t: &CapacityTask) -> Result<TaskOutput, CliError> {
    let mut out = TaskOutput::default();
    let p = &sc.preset;
    let (man, v, exps) = (p.manifold(), p.potential(), &sc.exps);
    let g = build_glued(man, v, p.sigma, &t.glue).context("gluing the probed solution")?;
    let c1 = CutoffFamily::minimal_c1(t.c0, exps);
    let s_energy = t.s_energy.unwrap_or_else(|| CutoffFamily::minimal_s(exps, Lemma::Energy));
    let s_potential = t.s_potential.unwrap_or_else(|| CutoffFamily::minimal_s(exps, Lemma::Potential));
    out.report.num("C1", c1);
    out.report.num("s energy", s_energy);
    out.report.num("s potential", s_potential);
    out.report.field("n", t.n);
    let mut csv = Csv::new(&["R", "t", "probe", "lhs", "rhs_without_c", "ratio", "divergent", "omega"]);
    let mut ratios: [Vec<f64>; 3] = Default::default();
    let mut divergent = false;
    for &r in &t.radii {
        let fe = CutoffFamily::new(r, c1, t.n, s_energy).context("cutoff family")?;
        let fp = CutoffFamily::new(r, c1, t.n, s_potential).context("cutoff family")?;
        let probes: [(&str, InequalityProbe); 3] = [
            ("energy", probe_lemma22(man, v, exps, &g.u, &fe).context("energy probe")?),
            ("potential", probe_lemma23(man, v, exps, &g.u, &fp).context("potential probe")?),
            ("absorbed", probe_corollary(man, v, exps, &g.u, &fp).context("absorbed probe")?),
        ];
        for (i, (name, q)) in probes.iter().enumerate() {
            csv.row(vec![
                r.into(),
                fe.t.into(),
                (*name).into(),
                q.lhs.into(),
                q.rhs_without_c.into(),
                q.ratio.into(),
                q.divergent.into(),
                q.omega_indicator.as_str().into(),
            ]);
            ratios[i].push(q.ratio);
            divergent |= q.divergent;
        }
    }
    out.file("probes.csv", csv.finish());
    let spreads = [spread(&ratios[0]), spread(&ratios[1])];
    out.report.num("energy ratio max/min", spreads[0]);
    out.report.num("potential ratio max/min", spreads[1]);
    out.report.num("absorbed ratio max/min", spread(&ratios[2]));
    out.report.field("divergent probes", divergent);
    let bounded = !divergent && spreads.iter().all(|&s| s.is_finite() && s <= t.max_spread);
    out.report.field("bounded", bounded);
    out.set("bounded", bounded);
    out.set("energy_spread", spreads[0]);
    out.set("potential_spread", spreads[1]);
    if let Some(e) = t.expect_bounded {
        out.expect(bounded == e, || format!("probe ratios were expected to be {}", if e { "bounded" } else { "unbounded" }));
    }
    Ok(out)
}

pub fn lower_order(sc: &Scenario, t: &LowerOrderTask) -> Result<TaskOutput, CliError> {
    let mut out = TaskOutput::default();
    match t {
        LowerOrderTask::Suite { cases, expect_agree } => {
            let suite = quotient_suite(sc.seed, *cases).context("quotient suite")?;
            let mut csv = Csv::new(&["case", "hyperbolic", "sigma", "q", "amplitude", "kappa", "v0", "nu", "original_pass", "weighted_pass"]);
            for (i, c) in suite.iter().enumerate() {
                csv.row(vec![
                    i.into(),
                    c.hyperbolic.into(),
                    c.sigma.into(),
                    c.q.into(),
                    c.amplitude.into(),
                    c.kappa.into(),
                    c.v0.into(),
                    c.nu.into(),
                    c.original_pass.into(),
                    c.weighted_pass.into(),
                ]);
            }
            out.file("cases.csv", csv.finish());
            let agree = suite.iter().filter(|c| c.agrees()).count();
            let supers = suite.iter().filter(|c| c.original_pass).count();
            out.report.field("cases", suite.len());
            out.report.field("agreeing verdicts", agree);
            out.report.field("supersolutions", supers);
            out.set("cases", suite.len());
            out.set("agree", agree);
            let all = agree == suite.len();
            out.expect(all == *expect_agree, || format!("{} of {} verdicts agree", agree, suite.len()));
        }
        LowerOrderTask::Auxiliary {
            b,
            b0,
            z0,
            z0prime,
            r_max,
            expect,
        } => {
            let map = |label: &str, e: &crate::expr::Expr| {
                let e = e.clone();
                RadialMap::new(format!("{label} = {}", e.source()), move |r| e.eval(r))
            };
            let p = &sc.preset;
            let mut prob = LowerOrderProblem::new(p.manifold().clone(), map("b", b), p.potential().clone(), p.sigma).context("lower-order problem")?;
            if let Some(b0) = b0 {
                prob = prob.with_lower_bound(map("b0", b0)).context("lower bound b0")?;
            }
            let aux = solve_auxiliary(&prob, *z0, *z0prime, *r_max).context("auxiliary equation")?;
            out.file("z.csv", function_csv(&aux.z, "z"));
            let cond = match aux.condition {
                ComparisonCondition::A => 'A',
                ComparisonCondition::B => 'B',
            };
            out.report.field("monotonicity", format!("{:?}", aux.monotone));
            out.report.field("comparison condition", cond);
            out.report.num("min residual", aux.min_residual);
            out.report.num("min z", aux.z.min_value());
            out.set("condition", cond.to_string());
            out.set("monotonicity", format!("{:?}", aux.monotone));
            if let Some(want) = expect {
                let c = if *want == 'A' { ComparisonCondition::A } else { ComparisonCondition::B };
                out.expect(aux.admits(c), || format!("auxiliary solution does not admit condition {want}"));
            }
        }
    }
    Ok(out)
}
