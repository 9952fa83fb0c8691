//! Scenario runner behind the `liouville-lab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod scenario;
pub mod tasks;

use serde_json::json;

pub use error::CliError;
pub use scenario::{Overrides, Scenario};

use output::Report;
use scenario::Task;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    /// An `expect` in the scenario was not met.
    AssertionFailed(String),
}

impl Status {
    pub fn exit_code(&self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::AssertionFailed(_) => 2,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub out_dir: String,
    /// File name and contents, `report.txt` and `meta.json` included.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }
}

pub fn run_scenario(text: &str, over: &Overrides) -> Result<Outcome, CliError> {
    let sc = Scenario::from_text(text, over)?;
    let mut out = match &sc.task {
        Task::CheckGrowth(t) => tasks::check_growth(&sc, t)?,
        Task::Counterexample(t) => tasks::counterexample(&sc, t)?,
        Task::Eigen(t) => tasks::eigen(&sc, t)?,
        Task::CapacityProbe(t) => tasks::capacity_probe(&sc, t)?,
        Task::LowerOrder(t) => tasks::lower_order(&sc, t)?,
    };
    let status = match out.failure.take() {
        None => Status::Passed,
        Some(why) => Status::AssertionFailed(why),
    };
    let config_text = sc.resolved.to_string();

    let mut head = Report::default();
    head.field("tool", concat!("liouville-lab ", env!("CARGO_PKG_VERSION")));
    head.field("task", sc.kind.name());
    head.field("scenario", sc.preset.describe());
    head.field("manifold", sc.preset.manifold().psi().describe());
    head.field("potential", sc.preset.potential().label());
    head.num("p", sc.exps.p);
    head.num("alpha", sc.exps.alpha);
    head.num("beta", sc.exps.beta);
    match &status {
        Status::Passed => head.field("status", "passed"),
        Status::AssertionFailed(why) => head.field("status", format!("assertion failed: {why}")),
    }
    let mut report = head.render();
    report.push('\n');
    report.push_str(&out.report.render());
    report.push_str("\n# resolved config\n");
    report.push_str(&config_text);

    let mut names: Vec<&str> = out.files.iter().map(|(n, _)| n.as_str()).collect();
    names.extend(["report.txt", "meta.json"]);
    let meta = json!({
        "tool": "liouville-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "task": sc.kind.name(),
        "scenario": sc.preset.describe(),
        "status": match &status {
            Status::Passed => "passed".to_string(),
            Status::AssertionFailed(_) => "assertion-failed".to_string(),
        },
        "failure": match &status {
            Status::Passed => None,
            Status::AssertionFailed(why) => Some(why.clone()),
        },
        "exit_code": status.exit_code(),
        "seed": sc.seed,
        "exponents": { "p": sc.exps.p, "sigma": sc.exps.sigma, "alpha": sc.exps.alpha, "beta": sc.exps.beta },
        "results": out.results,
        "files": names,
        "config": config_text,
    });
    let mut files = std::mem::take(&mut out.files);
    files.push(("report.txt".into(), report));
    files.push(("meta.json".into(), serde_json::to_string_pretty(&meta).expect("plain JSON values") + "\n"));
    Ok(Outcome {
        status,
        out_dir: sc.out.clone(),
        files,
    })
}

/// The preset catalog, one `name: formula` line each.
pub fn list_presets() -> String {
    let mut s = liouville_core::presets::catalog().join("\n");
    s.push('\n');
    s
}
