//! Experiment configuration: profiles, strict TOML loading and hashing.
//!
//! A config file is a partial overlay on top of a named profile. Every
//! section is optional; unknown keys are rejected with the key path and the
//! closest valid name.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::PpoConfig;
use crate::baseline::BaselineConfig;
use crate::channel::{ArrayConfig, LinkBudget};
use crate::curriculum::CurriculumConfig;
use crate::environment::{EnvConfig, RewardConfig};
use crate::error::{Error, Result};
use crate::sensing::SensingParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Full-scale settings: 1500-episode curriculum, batch 4096.
    Paper,
    /// Scaled down to run on one laptop core in minutes.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Config(format!(
                "unknown profile {other:?} (expected \"paper\" or \"desk\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub seed: u64,
    pub total_episodes: usize,
    pub eval_episodes: usize,
    pub checkpoint_every: usize,
    pub workers: usize,
    /// Evaluate with the arg-max action instead of sampling.
    pub greedy_eval: bool,
    pub array: ArrayConfig,
    pub budget: LinkBudget,
    pub env: EnvConfig,
    pub sensing: SensingParams,
    pub reward: RewardConfig,
    pub ppo: PpoConfig,
    pub curriculum: CurriculumConfig,
    pub baseline: BaselineConfig,
}

impl ExperimentConfig {
    pub fn paper() -> Self {
        Self {
            profile: Profile::Paper,
            seed: 0,
            total_episodes: 3000,
            eval_episodes: 200,
            checkpoint_every: 100,
            workers: 1,
            greedy_eval: false,
            array: ArrayConfig::default(),
            budget: LinkBudget::default(),
            env: EnvConfig::default(),
            sensing: SensingParams::default(),
            reward: RewardConfig::default(),
            ppo: PpoConfig::default(),
            curriculum: CurriculumConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }

    pub fn desk() -> Self {
        let mut c = Self::paper();
        c.profile = Profile::Desk;
        c.total_episodes = 300;
        c.curriculum.phase1_episodes = 150;
        c.ppo.batch_size = 1024;
        c.ppo.minibatch_size = 128;
        c
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.budget.validate()?;
        self.env.validate()?;
        self.sensing.validate()?;
        self.reward.validate()?;
        self.ppo.validate()?;
        self.curriculum.validate(self.env.episode_length)?;
        self.baseline.validate()?;
        if self.total_episodes == 0 {
            return Err(Error::Config("total_episodes must be > 0".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be > 0".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        // TOML integers are signed 64-bit; larger seeds could not be read back.
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed must be at most {}", i64::MAX)));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Stable 64-bit digest of everything except the seed and worker count.
    pub fn config_hash(&self) -> u64 {
        let mut canonical = self.clone();
        canonical.seed = 0;
        canonical.workers = 1;
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// Parses `text` as an overlay on a profile. `profile_override` wins
    /// over a `profile` key in the text; the `paper` profile is the default.
    pub fn from_toml_str(text: &str, profile_override: Option<Profile>) -> Result<Self> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let profile = match (profile_override, overlay.get("profile")) {
            (Some(p), _) => p,
            (None, Some(v)) => v
                .as_str()
                .ok_or_else(|| Error::Config("profile: expected a string".into()))?
                .parse()?,
            (None, None) => Profile::Paper,
        };
        let base = Self::for_profile(profile);
        let mut merged = toml::Table::try_from(&base).expect("config serializes to a table");
        merge(&mut merged, overlay);
        merged.insert(
            "profile".into(),
            toml::Value::try_from(profile).expect("profile serializes"),
        );

        let config: Self = serde_path_to_error::deserialize(toml::Value::Table(merged)).map_err(|e| {
            let path = e.path().to_string();
            // The toml deserializer appends location lines; the path already says where.
            let inner = e.into_inner().to_string();
            let first = inner.lines().next().unwrap_or_default().trim();
            Error::Config(format!("{path}: {}", with_suggestion(first)))
        })?;
        config.validate()?;
        Ok(config)
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Appends "did you mean" to serde's unknown-field messages.
fn with_suggestion(message: &str) -> String {
    let Some(rest) = message.strip_prefix("unknown field `") else {
        return message.to_owned();
    };
    let Some((field, tail)) = rest.split_once('`') else {
        return message.to_owned();
    };
    let candidates: Vec<&str> = tail.split('`').skip(1).step_by(2).collect();
    let best = candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(field, c), *c))
        .min();
    match best {
        Some((d, c)) if d <= 3 => format!("{message}; did you mean `{c}`?"),
        _ => message.to_owned(),
    }
}

/// Loads a config file; see [`ExperimentConfig::from_toml_str`].
pub fn load_config(path: &Path, profile_override: Option<Profile>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text, profile_override)
}
