use serde::{Deserialize, Serialize};

use crate::episodes::EpisodeSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Validation interval `V` in epochs.
    pub val_interval: usize,
    /// Episodes `I` per validation or test pass.
    pub tasks: usize,
    /// Patience `P`, counted in validations.
    pub patience: usize,
    /// Epoch budget `E`.
    pub max_epochs: usize,
    /// Repetitions `R`.
    pub repeats: usize,
    pub spec: EpisodeSpec,
    pub seed: u64,
    /// Draw fresh validation episodes at every validation instead of reusing
    /// one fixed set per repetition.
    pub resample_validation: bool,
    /// Report the interval over all `I·R` test tasks instead of the `R`
    /// repetition means.
    pub pooled_ci: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            val_interval: 10,
            tasks: 100,
            patience: 10,
            max_epochs: 10_000,
            repeats: 5,
            spec: EpisodeSpec {
                n_way: 2,
                k_shot: 5,
                m_query: 10,
            },
            seed: 0,
            resample_validation: false,
            pooled_ci: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("val_interval", self.val_interval),
            ("tasks", self.tasks),
            ("patience", self.patience),
            ("max_epochs", self.max_epochs),
            ("repeats", self.repeats),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        self.spec.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let c = ProtocolConfig::default();
        assert_eq!(
            (c.val_interval, c.tasks, c.patience, c.max_epochs, c.repeats, c.spec.m_query),
            (10, 100, 10, 10_000, 5, 10)
        );
        c.validate().unwrap();
    }
}
