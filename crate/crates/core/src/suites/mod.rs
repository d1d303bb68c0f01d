//! Verification suites. Each returns in-memory artifacts; writing them to
//! disk is left to the caller. Outputs depend only on the configuration.

pub mod coupling;
pub mod density;
pub mod duality;
pub mod minima;
pub mod rational;
pub mod selftest;

use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, VERSION};
use crate::error::{Error, Result};
use crate::stats::{reports_to_csv, TestReport};

pub const COMMANDS: [&str; 6] = ["minima", "density", "coupling", "duality", "rational", "selftest"];

/// Exact or threshold check (no p-value).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<"`, `"<="`, `"=="` or `">="`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn new(id: impl Into<String>, value: f64, relation: &'static str, threshold: f64) -> Self {
        let pass = match relation {
            "<" => value < threshold,
            "<=" => value <= threshold,
            "==" => value == threshold,
            ">=" => value >= threshold,
            _ => false,
        };
        Self { id: id.into(), value, threshold, relation, pass }
    }

    pub fn flag(id: impl Into<String>, ok: bool) -> Self {
        Self::new(id, if ok { 1.0 } else { 0.0 }, "==", 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, content: impl Into<String>) -> Self {
        Self { name: name.into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub name: String,
    pub reports: Vec<TestReport>,
    pub checks: Vec<Check>,
    pub details: Value,
    pub artifacts: Vec<Artifact>,
}

impl SuiteOutput {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            reports: Vec::new(),
            checks: Vec::new(),
            details: Value::Object(Default::default()),
            artifacts: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass) && self.checks.iter().all(|c| c.pass)
    }

    pub fn report(&self, id: &str) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.test_id == id)
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(m) = &mut self.details {
            m.insert(key.into(), serde_json::to_value(value).expect("serializable"));
        }
    }

    fn push_report(&mut self, r: TestReport, significance: f64) {
        self.reports.push(r.at(significance));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: String,
    pub config: RunConfig,
    pub suites: Vec<SuiteOutput>,
}

fn csv_header(cfg: &RunConfig) -> String {
    format!("# dcslab {VERSION} {}\n", cfg.to_line())
}

fn with_provenance(cfg: &RunConfig, body: Value) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), Value::String(VERSION.into()));
    m.insert("config".into(), cfg.to_json());
    match body {
        Value::Object(b) => m.extend(b),
        other => {
            m.insert("data".into(), other);
        }
    }
    Value::Object(m)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

impl RunOutput {
    pub fn pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass())
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteOutput> {
        self.suites.iter().find(|s| s.name == name)
    }

    /// Every output file as `(relative path, contents)`; CSV files start with
    /// a `#` line carrying the version and configuration, JSON files carry
    /// `version` and `config` keys.
    pub fn files(&self) -> Vec<(String, String)> {
        let cfg = &self.config;
        let mut files = Vec::new();
        let mut index = Vec::new();
        for s in &self.suites {
            let details_path = format!("{}/details.json", s.name);
            let details = serde_json::json!({
                "suite": s.name,
                "pass": s.pass(),
                "reports": s.reports,
                "checks": s.checks,
                "details": s.details,
            });
            files.push((details_path.clone(), pretty(&with_provenance(cfg, details))));
            files.push((format!("{}/reports.csv", s.name), csv_header(cfg) + &reports_to_csv(&s.reports)));
            for a in &s.artifacts {
                let content = if a.name.ends_with(".json") {
                    let v: Value = serde_json::from_str(&a.content).expect("suite JSON artifacts are valid");
                    pretty(&with_provenance(cfg, v))
                } else {
                    csv_header(cfg) + &a.content
                };
                files.push((format!("{}/{}", s.name, a.name), content));
            }
            index.push(serde_json::json!({ "name": s.name, "pass": s.pass(), "details_path": details_path }));
        }
        let summary = serde_json::json!({
            "command": self.command,
            "version": VERSION,
            "config": cfg.to_json(),
            "pass": self.pass(),
            "suites": index,
        });
        files.push(("summary.json".into(), pretty(&summary)));
        files
    }

    /// Short human-readable outcome, one line per report and check.
    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!("[{}] {}\n", if s.pass() { "PASS" } else { "FAIL" }, s.name));
            for r in &s.reports {
                out.push_str(&format!(
                    "  {:<4} {} stat={:.6} p={:.4e} n={}\n",
                    if r.pass { "ok" } else { "FAIL" },
                    r.test_id,
                    r.statistic,
                    r.p_value,
                    r.n
                ));
            }
            for c in &s.checks {
                out.push_str(&format!(
                    "  {:<4} {} {} {} {}\n",
                    if c.pass { "ok" } else { "FAIL" },
                    c.id,
                    c.value,
                    c.relation,
                    c.threshold
                ));
            }
        }
        out
    }
}

/// Runs one command end to end.
pub fn run_command(command: &str, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let suites = match command {
        "minima" => vec![minima::run(cfg)?],
        "density" => vec![density::run(cfg)?],
        "coupling" => vec![coupling::run(cfg)?],
        "duality" => vec![duality::run(cfg)?],
        "rational" => vec![rational::run(cfg)?],
        "selftest" => selftest::run(cfg)?,
        other => {
            return Err(Error::Usage(format!("unknown command '{other}' (expected one of {})", COMMANDS.join(", "))))
        }
    };
    Ok(RunOutput { command: command.into(), config: cfg.clone(), suites })
}

/// Suite-specific seed streams.
pub(crate) fn suite_seed(cfg: &RunConfig, tag: u64) -> u64 {
    crate::rng::derive_seed(cfg.seed, tag)
}

/// Histogram of `values` on `[0,1)` with its expected counts, as CSV.
pub(crate) fn histogram_csv(values: &[f64], bins: usize, cdf: impl Fn(f64) -> f64) -> String {
    let mut counts = vec![0u64; bins];
    for &v in values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = values.len() as f64;
    let mut out = String::from("bin_left,bin_right,observed,expected\n");
    for (i, c) in counts.iter().enumerate() {
        let (l, r) = (i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
        out.push_str(&format!("{l},{r},{c},{}\n", n * (cdf(r) - cdf(l))));
    }
    out
}
