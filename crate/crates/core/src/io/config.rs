//! Run configuration: a TOML document with one section per subsystem.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{EnvConfig, RewardWeights, ThrowConfig, CATCHER_ACTION_DIM, CATCHER_OBS_DIM, GLOBAL_STATE_DIM, THROWER_ACTION_DIM, THROWER_OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::NetworkSpec;
use crate::trainer::{AlphaMode, AlphaSchedule, GaeConfig, Mode, PpoConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub catcher_hidden: Vec<usize>,
    pub thrower_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub d2rl: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            catcher_hidden: vec![64, 64],
            thrower_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            d2rl: true,
        }
    }
}

impl NetworkConfig {
    /// Full-size widths: `[1024, 512, 256]` for every network.
    pub fn large() -> Self {
        NetworkConfig {
            catcher_hidden: vec![1024, 512, 256],
            thrower_hidden: vec![1024, 512, 256],
            critic_hidden: vec![1024, 512, 256],
            d2rl: true,
        }
    }

    pub fn catcher_spec(&self) -> NetworkSpec {
        let mut s = NetworkSpec::policy(CATCHER_OBS_DIM, self.catcher_hidden.clone(), CATCHER_ACTION_DIM);
        s.d2rl = self.d2rl;
        s
    }

    pub fn thrower_spec(&self) -> NetworkSpec {
        let mut s = NetworkSpec::policy(THROWER_OBS_DIM, self.thrower_hidden.clone(), THROWER_ACTION_DIM);
        s.d2rl = self.d2rl;
        s
    }

    pub fn critic_spec(&self) -> NetworkSpec {
        let mut s = NetworkSpec::value(GLOBAL_STATE_DIM, self.critic_hidden.clone());
        s.d2rl = self.d2rl;
        s
    }
}

/// How α moves during training. The start value is `rewards.alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaScheduleConfig {
    pub mode: AlphaMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_end: Option<f64>,
    /// Defaults to the run's iteration count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_iters: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub iterations: u64,
    pub envs_per_batch: usize,
    /// Steps per environment per iteration; environments restart every iteration.
    pub steps_per_env: usize,
    pub checkpoint_every: u64,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub throw: ThrowConfig,
    pub rewards: RewardWeights,
    pub alpha_schedule: AlphaScheduleConfig,
    pub networks: NetworkConfig,
    pub gae: GaeConfig,
    pub ppo: PpoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Harl,
            seed: 0,
            iterations: 200,
            envs_per_batch: 64,
            steps_per_env: 120,
            checkpoint_every: 50,
            output_dir: PathBuf::from("runs/default"),
            env: EnvConfig::default(),
            throw: ThrowConfig::default(),
            rewards: RewardWeights::default(),
            alpha_schedule: AlphaScheduleConfig::default(),
            networks: NetworkConfig::default(),
            gae: GaeConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn alpha_schedule(&self) -> AlphaSchedule {
        let start = self.rewards.alpha;
        match self.alpha_schedule.mode {
            AlphaMode::Fixed => AlphaSchedule::fixed(start),
            AlphaMode::LinearDecay => AlphaSchedule::linear_decay(
                start,
                self.alpha_schedule.alpha_end.unwrap_or(start),
                self.alpha_schedule.total_iters.unwrap_or(self.iterations),
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.throw.validate()?;
        self.rewards.validate()?;
        self.gae.validate()?;
        self.ppo.validate()?;
        if self.alpha_schedule.mode == AlphaMode::Fixed && self.alpha_schedule.alpha_end.is_some() {
            return Err(Error::invalid("alpha_schedule.alpha_end", "only meaningful for linear_decay"));
        }
        self.alpha_schedule().validate()?;
        if self.envs_per_batch == 0 {
            return Err(Error::invalid("envs_per_batch", "must be at least 1"));
        }
        if self.steps_per_env == 0 {
            return Err(Error::invalid("steps_per_env", "must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::invalid("checkpoint_every", "must be at least 1"));
        }
        for (key, spec) in [
            ("networks.catcher_hidden", self.networks.catcher_spec()),
            ("networks.thrower_hidden", self.networks.thrower_spec()),
            ("networks.critic_hidden", self.networks.critic_spec()),
        ] {
            spec.validate().map_err(|e| Error::invalid(key, e.to_string()))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical serialisation, ignoring the output directory.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = c.to_toml().unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.rewards.as_array(), [5.0, 1.0, 0.5, 0.5, 1e-3, 0.8, 0.2]);
        assert_eq!(c.rewards.alpha, 0.7);
        assert_eq!(c.throw.v_base_linear, [5.0, 4.0]);
        assert_eq!(c.throw.noise_half_width, 0.5);
    }

    #[test]
    fn alpha_out_of_range_names_the_key() {
        let err = RunConfig::from_toml("[rewards]\nalpha = 1.3\n").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        let err = RunConfig::from_toml("bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = RunConfig::from_toml("[ppo]\nclip_epsilon = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("clip_epsilon"), "{err}");
        let err = RunConfig::from_toml("iterations = \"many\"\n").unwrap_err();
        assert!(err.to_string().contains("iterations") || err.to_string().contains("integer"), "{err}");
        let err = RunConfig::from_toml("[ppo]\nclip_eps = -0.1\n").unwrap_err();
        assert!(err.to_string().contains("clip_eps"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.mode = Mode::Sa;
        c.networks = NetworkConfig::large();
        c.alpha_schedule = AlphaScheduleConfig {
            mode: AlphaMode::LinearDecay,
            alpha_end: Some(0.7),
            total_iters: Some(10),
        };
        c.rewards.alpha = 1.0;
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        let s = c.alpha_schedule();
        assert_eq!(s.alpha_at(0), 1.0);
        assert_eq!(s.alpha_at(10), 0.7);
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.digest(), b.digest());
        b.seed = 9;
        assert_ne!(a.digest(), b.digest());
    }
}
