//! Experiment settings from a key-value file, with command-line overrides.
//!
//! ```text
//! # comments and blank lines are ignored
//! families = rooms, dialog
//! sizes = 5, 10
//! probabilities = 0.1, 0.5
//! strategies = CLO, REPLAN
//! trials = 30
//! seed = 1
//! budget-total = 1800
//! budget-plan = 500
//! budget-clo = 300
//! distractors = 5
//! workers = 1
//! out = results
//! ```

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use clo_core::experiment::ExperimentConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: expected key = value")]
    Syntax(usize),
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value}")]
    BadValue { key: String, value: String },
}

/// Everything the `bench` verb needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchSettings {
    pub experiment: ExperimentConfig,
    pub out: Option<PathBuf>,
}

pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad(key, value)))
        .collect()
}

fn one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn secs(key: &str, value: &str) -> Result<Duration, ConfigError> {
    let s: f64 = one(key, value)?;
    Duration::try_from_secs_f64(s).map_err(|_| bad(key, value))
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

impl BenchSettings {
    /// Applies `key = value` settings in order; later ones win.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), ConfigError> {
        let e = &mut self.experiment;
        for (k, v) in pairs {
            match k {
                "families" | "family" => e.families = list(k, v)?,
                "sizes" | "size" => e.sizes = list(k, v)?,
                "probabilities" | "prob" => e.probabilities = list(k, v)?,
                "strategies" | "strategy" => e.strategies = list(k, v)?,
                "trials" => e.trials = one(k, v)?,
                "seed" => e.base_seed = one(k, v)?,
                "budget-total" => e.budgets.total = secs(k, v)?,
                "budget-plan" => e.budgets.plan = secs(k, v)?,
                "budget-clo" => e.budgets.clo = secs(k, v)?,
                "distractors" => e.distractors_per_step = one(k, v)?,
                "workers" => e.workers = one(k, v)?,
                "out" => self.out = Some(PathBuf::from(v)),
                _ => return Err(ConfigError::UnknownKey(k.to_string())),
            }
        }
        Ok(())
    }
}

/// Defaults, then the file, then flags.
pub fn layered(file: Option<&str>, flags: &[(String, String)]) -> Result<BenchSettings, ConfigError> {
    let mut s = BenchSettings::default();
    if let Some(text) = file {
        let pairs = parse_pairs(text)?;
        s.apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    s.apply(flags.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    Ok(s)
}
