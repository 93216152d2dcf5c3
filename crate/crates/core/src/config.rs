//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gen::GenConfig;
use crate::harness::ExperimentConfig;
use crate::metrics::parse_metric_spec;

/// Environment variable consulted when a config gives no `master_seed`.
pub const SEED_ENV_VAR: &str = "REWARD_LAB_SEED";

pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_gen_config(text: &str) -> Result<GenConfig> {
    let mut config = GenConfig::default();
    for (key, value) in parse_key_values(text)? {
        if !config.set(&key, &value)? {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
    }
    config.validate()?;
    Ok(config)
}

fn parse_seed(text: &str) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|_| Error::Config(format!("seed `{text}` is not an unsigned integer")))
}

/// Seed from [`SEED_ENV_VAR`], if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => parse_seed(&v).map(Some),
        Err(_) => Ok(None),
    }
}

/// Parses an experiment config. `fallback_seed` is used when the text has
/// no `master_seed`; without either the seed is 0.
pub fn parse_experiment_config(text: &str, fallback_seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut seed = None;
    for (key, value) in parse_key_values(text)? {
        if config.gen.set(&key, &value)? {
            continue;
        }
        match key.as_str() {
            "n_envs" => {
                config.n_envs = value
                    .parse()
                    .map_err(|_| Error::Config(format!("n_envs `{value}` is not a count")))?
            }
            "metric_specs" => {
                config.metric_specs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_metric_spec)
                    .collect::<Result<_>>()?
            }
            "regret_mode" => config.regret_mode = value.parse()?,
            "master_seed" => seed = Some(parse_seed(&value)?),
            "output_dir" => config.output_dir = PathBuf::from(value),
            "parallelism" => {
                config.parallelism = value
                    .parse()
                    .map_err(|_| Error::Config(format!("parallelism `{value}` is not a count")))?
            }
            "save_batches" => {
                config.save_batches = value
                    .parse()
                    .map_err(|_| Error::Config(format!("save_batches `{value}` is not true/false")))?
            }
            "scatter_plots" => {
                config.scatter_plots = value
                    .parse()
                    .map_err(|_| Error::Config(format!("scatter_plots `{value}` is not true/false")))?
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
    }
    config.master_seed = seed.or(fallback_seed).unwrap_or(0);
    config.validate()?;
    Ok(config)
}

/// Reads an experiment config file, falling back to [`SEED_ENV_VAR`].
pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_experiment_config(&text, seed_from_env()?)
}
