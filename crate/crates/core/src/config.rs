//! Experiment files: TOML, one experiment per file.
//!
//! ```toml
//! kind = "scenario"        # optional; "scenario", "sweep" or "ablation"
//! terrain = "slate"
//! controller = "raic"
//! repetitions = 20
//!
//! [primitives]
//! swivel_amplitude = 0.3927
//! swivel_frequency = 3.1416
//! ```
//!
//! A sweep nests its base scenario under `[scenario]` and lists swept
//! `parameters` at the top level. An ablation lists `terrains` and the
//! shared dig, gain and primitive settings. Omitted settings take the tuned
//! defaults. Unknown keys, missing required fields and out-of-range values
//! are reported with the offending field and, where it can be found, the line.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::harness::{default_sweep_repetitions, AblationSpec, ScenarioConfig, SweepParameter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    /// 1-based.
    pub line: Option<usize>,
    /// 1-based.
    pub column: Option<usize>,
    /// Dotted path of the offending key.
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            field: None,
            message: message.into(),
        }
    }

    fn at_span(text: &str, span: Option<Range<usize>>, message: impl Into<String>) -> Self {
        let mut e = Self::new(message);
        if let Some(span) = span {
            let (line, column) = line_column(text, span.start);
            e.line = Some(line);
            e.column = Some(column);
        }
        e.field = quoted_field(&e.message);
        e
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("config error")?;
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, " at line {l}, column {c}")?,
            (Some(l), None) => write!(f, " at line {l}")?,
            _ => {}
        }
        if let Some(field) = &self.field {
            write!(f, " (field `{field}`)")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// The first backquoted name in a serde message, e.g. "unknown field `x`".
fn quoted_field(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// 1-based line of `path` (`section.key`, or `key` at the top level).
fn locate(text: &str, path: &str) -> Option<usize> {
    let (section, key) = match path.rsplit_once('.') {
        Some((s, k)) => (s, k),
        None => ("", path),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// A parameter sweep over a base scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "all_sweep_parameters")]
    pub parameters: Vec<SweepParameter>,
    /// Base scenario; its `repetitions` defaults to 6, or 12 on slate.
    pub scenario: ScenarioConfig,
}

fn all_sweep_parameters() -> Vec<SweepParameter> {
    SweepParameter::ALL.to_vec()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(Error::invalid(
                "parameters",
                "at least one sweep parameter is required",
            ));
        }
        self.scenario
            .validate()
            .map_err(|e| prefix_field(e, "scenario."))
    }
}

fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{prefix}{field}"),
            reason,
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Scenario(ScenarioConfig),
    Sweep(SweepConfig),
    Ablation(AblationSpec),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Scenario(_) => "scenario",
            ExperimentConfig::Sweep(_) => "sweep",
            ExperimentConfig::Ablation(_) => "ablation",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Scenario(c) => c.validate(),
            ExperimentConfig::Sweep(c) => c.validate(),
            ExperimentConfig::Ablation(c) => c.validate(),
        }
    }
}

/// Parses and validates an experiment file.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| ConfigError::at_span(text, e.span(), e.message()))?;
    let kind = match table.get("kind") {
        None => "scenario",
        Some(toml::Value::String(k)) => k.as_str(),
        Some(_) => {
            return Err(ConfigError {
                line: locate(text, "kind"),
                column: None,
                field: Some("kind".into()),
                message: "must be a string".into(),
            })
        }
    };
    // Blanking keeps byte offsets, so spans from the typed parse stay valid.
    let body = blank_top_level_key(text, "kind");
    let config = match kind {
        "scenario" => {
            require(&table, "", &["terrain", "controller"])?;
            ExperimentConfig::Scenario(typed(&body)?)
        }
        "sweep" => {
            let scenario = table.get("scenario").and_then(|v| v.as_table());
            match scenario {
                Some(s) => require(s, "scenario.", &["terrain", "controller"])?,
                None => {
                    return Err(ConfigError::new(
                        "missing required fields: scenario.terrain, scenario.controller",
                    ))
                }
            }
            let mut sweep: SweepConfig = typed(&body)?;
            if !scenario.is_some_and(|s| s.contains_key("repetitions")) {
                sweep.scenario.repetitions = default_sweep_repetitions(sweep.scenario.terrain);
            }
            ExperimentConfig::Sweep(sweep)
        }
        "ablation" => ExperimentConfig::Ablation(typed(&body)?),
        other => {
            return Err(ConfigError {
                line: locate(text, "kind"),
                column: None,
                field: Some("kind".into()),
                message: format!("unknown kind `{other}` (expected scenario, sweep or ablation)"),
            })
        }
    };
    config.validate().map_err(|e| match e {
        Error::InvalidParameter { field, reason } => ConfigError {
            line: locate(text, &field),
            column: None,
            field: Some(field),
            message: reason,
        },
        other => ConfigError::new(other.to_string()),
    })?;
    Ok(config)
}

fn require(
    table: &toml::Table,
    prefix: &str,
    fields: &[&str],
) -> std::result::Result<(), ConfigError> {
    let missing: Vec<String> = fields
        .iter()
        .filter(|f| !table.contains_key(**f))
        .map(|f| format!("{prefix}{f}"))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::new(format!(
            "missing required fields: {}",
            missing.join(", ")
        )))
    }
}

fn typed<T: DeserializeOwned>(text: &str) -> std::result::Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::at_span(text, e.span(), e.message()))
}

fn blank_top_level_key(text: &str, key: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut top_level = true;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if trimmed.starts_with('[') {
            top_level = false;
        }
        let is_key = top_level
            && trimmed
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='));
        if is_key {
            out.extend(
                line.chars()
                    .map(|c| if c == '\n' || c == '\r' { c } else { ' ' }),
            );
        } else {
            out.push_str(line);
        }
    }
    out
}

/// Canonical text of a configuration; [`parse_config`] reads it back equal.
pub fn render_config(config: &ExperimentConfig) -> Result<String> {
    let body = match config {
        ExperimentConfig::Scenario(c) => toml::to_string(c),
        ExperimentConfig::Sweep(c) => toml::to_string(c),
        ExperimentConfig::Ablation(c) => toml::to_string(c),
    }
    .map_err(|e| Error::from(ConfigError::new(format!("cannot render config: {e}"))))?;
    Ok(format!("kind = \"{}\"\n{body}", config.kind()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}
