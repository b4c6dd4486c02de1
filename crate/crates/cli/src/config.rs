//! `key = value` configuration with `[section]` headers.
//!
//! Keys outside any section are `seed` and `data_dir`; all others are
//! addressed as `section.key`. Unknown keys and mistyped values are errors.
//! `data_dir` defaults to `$FSNC_DATA_DIR`, else `data`. The training keys
//! `lr`, `weight_decay`, `dropout`, `hidden` and `output` may also be given
//! bare, outside any section.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fsnc_core::contrast::SelfKind;
use fsnc_core::episodes::EpisodeSpec;
use fsnc_core::protocol::{MethodConfig, ProtocolConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Syntax { path: PathBuf, line: usize, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("configuration key `{key}`: expected {expected}, got `{value}`")]
    Type {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("configuration key `{key}`: {msg}")]
    Range { key: String, msg: String },
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data_dir: PathBuf,
    pub protocol: ProtocolConfig,
    pub method: MethodConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let protocol = ProtocolConfig::default();
        Self {
            seed: 0,
            data_dir: std::env::var_os("FSNC_DATA_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("data")),
            method: MethodConfig::new(protocol.spec),
            protocol,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Type {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            value: value.to_string(),
            expected: "a boolean",
        }),
    }
}

const KEYS: &[&str] = &[
    "seed",
    "data_dir",
    "protocol.val_interval",
    "protocol.tasks",
    "protocol.patience",
    "protocol.max_epochs",
    "protocol.repeats",
    "protocol.n_way",
    "protocol.k_shot",
    "protocol.m_query",
    "protocol.resample_validation",
    "protocol.pooled_ci",
    "train.lr",
    "train.weight_decay",
    "train.dropout",
    "train.hidden",
    "train.output",
    "contrast.temperature",
    "contrast.lambda",
    "contrast.self_loss",
    "contrast.edge_drop_p",
    "contrast.feature_mask_p",
    "contrast.ema_decay",
    "maml.inner_steps",
    "maml.inner_lr",
    "probe.l2",
    "probe.lr",
    "probe.max_iters",
    "probe.tol",
    "probe.standardize",
];

/// Bare names accepted for the most common training keys.
const ALIASES: &[(&str, &str)] = &[
    ("lr", "train.lr"),
    ("weight_decay", "train.weight_decay"),
    ("dropout", "train.dropout"),
    ("hidden", "train.hidden"),
    ("output", "train.output"),
];

impl RunConfig {
    /// Set one key from its textual value. Errors name the key as written.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let canonical = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, k)| k);
        self.set_canonical(canonical, value).map_err(|e| match e {
            ConfigError::Type { value, expected, .. } => ConfigError::Type {
                key: key.to_string(),
                value,
                expected,
            },
            other => other,
        })
    }

    fn set_canonical(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        const REAL: &str = "a real number";
        const COUNT: &str = "a nonnegative integer";
        let p = &mut self.protocol;
        let m = &mut self.method;
        match key {
            "seed" => self.seed = parse(key, value, "an unsigned 64-bit integer")?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "protocol.val_interval" => p.val_interval = parse(key, value, COUNT)?,
            "protocol.tasks" => p.tasks = parse(key, value, COUNT)?,
            "protocol.patience" => p.patience = parse(key, value, COUNT)?,
            "protocol.max_epochs" => p.max_epochs = parse(key, value, COUNT)?,
            "protocol.repeats" => p.repeats = parse(key, value, COUNT)?,
            "protocol.n_way" => p.spec.n_way = parse(key, value, COUNT)?,
            "protocol.k_shot" => p.spec.k_shot = parse(key, value, COUNT)?,
            "protocol.m_query" => p.spec.m_query = parse(key, value, COUNT)?,
            "protocol.resample_validation" => p.resample_validation = parse_bool(key, value)?,
            "protocol.pooled_ci" => p.pooled_ci = parse_bool(key, value)?,
            "train.lr" => m.pretrain.lr = parse(key, value, REAL)?,
            "train.weight_decay" => m.pretrain.weight_decay = parse(key, value, REAL)?,
            "train.dropout" => m.pretrain.dropout_p = parse(key, value, REAL)?,
            "train.hidden" => m.pretrain.hidden = parse(key, value, COUNT)?,
            "train.output" => m.pretrain.output = parse(key, value, COUNT)?,
            "contrast.temperature" => m.pretrain.loss.temperature = parse(key, value, REAL)?,
            "contrast.lambda" => m.pretrain.loss.lambda = parse(key, value, REAL)?,
            "contrast.self_loss" => {
                m.pretrain.loss.self_kind = match value {
                    "infonce" => SelfKind::InfoNce,
                    "jsd" => SelfKind::Jsd,
                    _ => {
                        return Err(ConfigError::Type {
                            key: key.to_string(),
                            value: value.to_string(),
                            expected: "`infonce` or `jsd`",
                        })
                    }
                }
            }
            "contrast.edge_drop_p" => m.pretrain.augment.edge_drop_p = parse(key, value, REAL)?,
            "contrast.feature_mask_p" => m.pretrain.augment.feature_mask_p = parse(key, value, REAL)?,
            "contrast.ema_decay" => m.pretrain.ema_decay = parse(key, value, REAL)?,
            "maml.inner_steps" => m.maml.inner_steps = parse(key, value, COUNT)?,
            "maml.inner_lr" => m.maml.inner_lr = parse(key, value, REAL)?,
            "probe.l2" => m.probe.l2 = parse(key, value, REAL)?,
            "probe.lr" => m.probe.lr = parse(key, value, REAL)?,
            "probe.max_iters" => m.probe.max_iters = parse(key, value, COUNT)?,
            "probe.tol" => m.probe.tol = parse(key, value, REAL)?,
            "probe.standardize" => m.probe.standardize = parse_bool(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Read `key = value` lines from `path`, layered over the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: &str| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: i + 1,
                msg: msg.to_string(),
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| syntax("unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            self.set(&full, value)?;
        }
        Ok(())
    }

    /// Apply `key=value` overrides.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<(), ConfigError> {
        for pair in pairs {
            let (key, value) = pair.split_once('=').ok_or_else(|| ConfigError::Type {
                key: pair.clone(),
                value: String::new(),
                expected: "`key=value`",
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Range checks, then propagation of shared values into the derived
    /// configurations.
    pub fn finish(&mut self) -> Result<(), ConfigError> {
        let range = |key: &str, e: fsnc_core::Error| ConfigError::Range {
            key: key.to_string(),
            msg: e.to_string(),
        };
        self.protocol.seed = self.seed;
        self.protocol.validate().map_err(|e| range("protocol", e))?;
        let m = &mut self.method;
        m.spec = self.protocol.spec;
        m.maml.outer_lr = m.pretrain.lr;
        m.maml.weight_decay = m.pretrain.weight_decay;
        m.maml.dropout_p = m.pretrain.dropout_p;
        m.pretrain.validate().map_err(|e| range("train/contrast", e))?;
        m.probe.validate().map_err(|e| range("probe", e))?;
        if !(m.maml.inner_lr >= 0.0 && m.maml.inner_lr.is_finite()) {
            return Err(ConfigError::Range {
                key: "maml.inner_lr".into(),
                msg: "must be a nonnegative number".into(),
            });
        }
        Ok(())
    }

    pub fn spec(&self) -> EpisodeSpec {
        self.protocol.spec
    }

    /// Current value of every key, in declaration order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.protocol;
        let m = &self.method;
        let values = [
            self.seed.to_string(),
            self.data_dir.display().to_string(),
            p.val_interval.to_string(),
            p.tasks.to_string(),
            p.patience.to_string(),
            p.max_epochs.to_string(),
            p.repeats.to_string(),
            p.spec.n_way.to_string(),
            p.spec.k_shot.to_string(),
            p.spec.m_query.to_string(),
            p.resample_validation.to_string(),
            p.pooled_ci.to_string(),
            m.pretrain.lr.to_string(),
            m.pretrain.weight_decay.to_string(),
            m.pretrain.dropout_p.to_string(),
            m.pretrain.hidden.to_string(),
            m.pretrain.output.to_string(),
            m.pretrain.loss.temperature.to_string(),
            m.pretrain.loss.lambda.to_string(),
            match m.pretrain.loss.self_kind {
                SelfKind::InfoNce => "infonce".into(),
                SelfKind::Jsd => "jsd".into(),
            },
            m.pretrain.augment.edge_drop_p.to_string(),
            m.pretrain.augment.feature_mask_p.to_string(),
            m.pretrain.ema_decay.to_string(),
            m.maml.inner_steps.to_string(),
            m.maml.inner_lr.to_string(),
            m.probe.l2.to_string(),
            m.probe.lr.to_string(),
            m.probe.max_iters.to_string(),
            m.probe.tol.to_string(),
            m.probe.standardize.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Defaults, then the file, then `key=value` overrides.
pub fn parse_config(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(overrides)?;
    cfg.finish()?;
    Ok(cfg)
}
