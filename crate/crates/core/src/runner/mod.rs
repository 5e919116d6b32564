//! Config-driven experiment runner behind the `spinchaos` binary.
//!
//! Exit codes: 0 all assertions hold, 1 an assertion failed, 2 the config is
//! malformed or violates a precondition, 3 the computation itself failed.

mod config;
mod execute;
mod presets;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub use config::{Assertion, Experiment, ExperimentConfig, OutputSpec, VarianceMethod};
pub use execute::{execute, Outcome};
pub use presets::{preset, presets, Preset};

use crate::disorder::SeedRecord;
use crate::error::Error;

pub const OUT_DIR_ENV: &str = "SPINCHAOS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    AssertionFailed = 1,
    InvalidConfig = 2,
    ComputationFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct RunError {
    pub status: ExitStatus,
    pub message: String,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

fn invalid(message: String) -> RunError {
    RunError {
        status: ExitStatus::InvalidConfig,
        message,
    }
}

fn failed(message: String) -> RunError {
    RunError {
        status: ExitStatus::ComputationFailed,
        message,
    }
}

/// Config text plus a label for messages (a path or `preset:<name>`).
#[derive(Debug, Clone)]
pub struct ConfigSource {
    pub label: String,
    pub text: String,
}

impl ConfigSource {
    /// `preset:<name>` or a file path.
    pub fn load(spec: &str) -> Result<Self, RunError> {
        if let Some(name) = spec.strip_prefix("preset:") {
            let p = preset(name).ok_or_else(|| invalid(format!("unknown preset {name:?}; see list-presets")))?;
            return Ok(ConfigSource {
                label: spec.to_string(),
                text: p.json.to_string(),
            });
        }
        let text = std::fs::read_to_string(spec).map_err(|e| invalid(format!("{spec}: cannot read config: {e}")))?;
        Ok(ConfigSource {
            label: spec.to_string(),
            text,
        })
    }

    /// 1-based line of the first occurrence of `"field"`.
    fn line_of(&self, field: &str) -> Option<usize> {
        let key = format!("\"{field}\"");
        self.text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
    }

    pub fn parse(&self) -> Result<ExperimentConfig, RunError> {
        let cfg: ExperimentConfig = serde_json::from_str(&self.text).map_err(|e| {
            invalid(format!(
                "{}:{}:{}: schema error: {}",
                self.label,
                e.line(),
                e.column(),
                strip_position(&e.to_string())
            ))
        })?;
        Ok(cfg)
    }

    fn validation_error(&self, e: &Error) -> RunError {
        let field = match e {
            Error::Invalid { field, .. } => Some(*field),
            Error::InvalidTime(_) => Some("t"),
            _ => None,
        };
        match field.and_then(|f| self.line_of(f)) {
            Some(line) => invalid(format!("{}:{}: {}", self.label, line, e)),
            None => invalid(format!("{}: {}", self.label, e)),
        }
    }
}

fn strip_position(msg: &str) -> &str {
    msg.rsplit_once(" at line ").map_or(msg, |(head, _)| head)
}

/// Command-line overrides; the env var only ever supplies the output dir.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub value: f64,
    pub passed: bool,
}

/// The full result record. `timestamp` is the only field that varies
/// between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub timestamp: String,
    pub code_version: String,
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, f64>,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
    pub result: Value,
}

#[derive(Debug)]
pub struct RunSummary {
    pub record: RunRecord,
    pub json_path: PathBuf,
    pub csv_path: Option<PathBuf>,
    pub status: ExitStatus,
}

/// Applies overrides and resolves the output directory:
/// `--out-dir`, then the env var, then the config, then `.`.
pub fn resolve(mut cfg: ExperimentConfig, overrides: &Overrides) -> ExperimentConfig {
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(t) = overrides.threads {
        cfg.threads = Some(t);
    }
    let env_dir = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let dir = overrides
        .out_dir
        .clone()
        .or(env_dir)
        .or(cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.output.dir = Some(dir);
    cfg
}

fn check_assertions(cfg: &ExperimentConfig, metrics: &BTreeMap<String, f64>) -> Vec<AssertionResult> {
    cfg.assertions
        .iter()
        .map(|a| {
            let value = metrics.get(&a.metric).copied().unwrap_or(f64::NAN);
            let passed = !value.is_nan() && a.min.is_none_or(|m| value >= m) && a.max.is_none_or(|m| value <= m);
            AssertionResult {
                metric: a.metric.clone(),
                min: a.min,
                max: a.max,
                value,
                passed,
            }
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| failed(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| failed(format!("{}: {e}", path.display())))
}

/// Parse, validate, execute, write results. Validation happens before any
/// computation starts.
pub fn run(source: &ConfigSource, overrides: &Overrides) -> Result<RunSummary, RunError> {
    let cfg = resolve(source.parse()?, overrides);
    cfg.validate().map_err(|e| source.validation_error(&e))?;
    if cfg.output.csv.is_some() && !execute::has_curve(&cfg.experiment) {
        return Err(source.validation_error(&Error::invalid(
            "csv",
            format!("{} experiments produce no curve", cfg.experiment.kind()),
        )));
    }
    let seed = SeedRecord::new(cfg.seed);
    let outcome = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| failed(format!("thread pool: {e}")))?
            .install(|| execute(&cfg.experiment, seed)),
        None => execute(&cfg.experiment, seed),
    }
    .map_err(|e| match e {
        Error::Invalid { .. } | Error::InvalidSize(_) | Error::InvalidTime(_) | Error::Shape { .. } => {
            source.validation_error(&e)
        }
        other => failed(format!("{}: {other}", source.label)),
    })?;

    let assertions = check_assertions(&cfg, &outcome.metrics);
    let passed = assertions.iter().all(|a| a.passed);
    let name = cfg.display_name();
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let json_path = dir.join(cfg.output.json.clone().unwrap_or_else(|| format!("{name}.json")));
    let csv_path = cfg.output.csv.as_ref().map(|c| dir.join(c));
    let record = RunRecord {
        timestamp: chrono::Utc::now().to_rfc3339(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        name,
        kind: cfg.experiment.kind().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        metrics: outcome.metrics,
        assertions,
        passed,
        result: outcome.result,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| failed(format!("serialize: {e}")))?;
    write_file(&json_path, &(text + "\n"))?;
    if let (Some(path), Some(csv)) = (&csv_path, &outcome.csv) {
        write_file(path, csv)?;
    }
    Ok(RunSummary {
        record,
        json_path,
        csv_path,
        status: if passed {
            ExitStatus::Success
        } else {
            ExitStatus::AssertionFailed
        },
    })
}
