//! The outer training loop: collect, estimate advantages, update.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ppo::{critic_update, happo_update, Learner, PolicyStats};
use super::rollout::{collect_rollouts, AgentRole, EnvSlot, Policies, RolloutStats};
use crate::env::ThrowCatchEnv;
use crate::error::{Error, Result};
use crate::io::{derive_seeds, save_checkpoint, AgentMetrics, Checkpoint, MetricsRecord, MetricsWriter, NetworkRecord, RunConfig};
use crate::nn::{init_params, NetworkSpec};

const POLICY_HEAD_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Catcher only, against the scripted random throw.
    Sa,
    /// Catcher and thrower trained jointly on the blended reward.
    #[default]
    Harl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sa => "sa",
            Mode::Harl => "harl",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Mode::Sa),
            "harl" => Ok(Mode::Harl),
            other => Err(Error::invalid("mode", format!("expected `sa` or `harl`, got `{other}`"))),
        }
    }
}

/// Everything one iteration produced, before wall time is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: u64,
    pub alpha: f64,
    pub rollout: RolloutStats,
    /// `(agent, stats)` for every updated policy.
    pub policy: Vec<(AgentRole, PolicyStats)>,
    pub update_order: Vec<AgentRole>,
    pub value_loss: f64,
}

impl IterationReport {
    pub fn to_record(&self, wall_seconds: f64) -> MetricsRecord {
        MetricsRecord {
            iteration: self.iteration,
            wall_seconds,
            alpha: self.alpha,
            mean_r_total: self.rollout.mean_r_total,
            mean_r_catch: self.rollout.mean_r_catch,
            mean_r_throw: self.rollout.mean_r_throw,
            agents: self
                .policy
                .iter()
                .map(|(role, s)| AgentMetrics {
                    agent: role.name().to_string(),
                    policy_loss: s.policy_loss,
                    clip_fraction: s.clip_fraction,
                    approx_kl: s.approx_kl,
                })
                .collect(),
            value_loss: self.value_loss,
            mean_episode_length: self.rollout.mean_episode_length,
            failure_rate: self.rollout.failure_rate,
            mean_thrower_action: self.rollout.mean_thrower_action,
            update_order: self.update_order.iter().map(|r| r.name().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: RunConfig,
    pub catcher: Learner<f64>,
    pub thrower: Option<Learner<f64>>,
    pub critic: Learner<f64>,
    /// Completed iterations.
    pub iteration: u64,
}

fn init_learner(spec: NetworkSpec, output_gain: f64, seed: u64, label: &str, lr: f64) -> Result<Learner<f64>> {
    spec.validate()?;
    let params = init_params(&spec, 1.0, output_gain, &mut derive_seeds(seed, label));
    Learner::new(spec, params, lr)
}

fn restore(record: &NetworkRecord, expected: &NetworkSpec) -> Result<Learner<f64>> {
    if &record.spec != expected {
        return Err(Error::Checkpoint(format!(
            "network `{}` does not match the configured architecture",
            record.name
        )));
    }
    Ok(Learner {
        spec: record.spec.clone(),
        params: record.params.clone(),
        opt: record.optimizer.clone(),
    })
}

impl Trainer {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let lr = config.ppo.learning_rate;
        let seed = config.seed;
        let net = &config.networks;
        let catcher = init_learner(net.catcher_spec(), POLICY_HEAD_GAIN, seed, "init:catcher", lr)?;
        let thrower = match config.mode {
            Mode::Sa => None,
            Mode::Harl => Some(init_learner(net.thrower_spec(), POLICY_HEAD_GAIN, seed, "init:thrower", lr)?),
        };
        let critic = init_learner(net.critic_spec(), 1.0, seed, "init:critic", lr)?;
        Ok(Trainer {
            config,
            catcher,
            thrower,
            critic,
            iteration: 0,
        })
    }

    /// Rebuilds a trainer from a checkpoint. The configuration supplies
    /// everything not stored in the checkpoint; its mode, seed and network
    /// shapes must agree with it.
    pub fn from_checkpoint(mut config: RunConfig, ckpt: &Checkpoint) -> Result<Self> {
        config.validate()?;
        if config.mode != ckpt.mode {
            return Err(Error::Checkpoint(format!(
                "checkpoint mode `{}` differs from configured `{}`",
                ckpt.mode.name(),
                config.mode.name()
            )));
        }
        config.seed = ckpt.master_seed;
        let get = |name: &str| {
            ckpt.network(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))
        };
        let net = &config.networks;
        let catcher = restore(get("catcher")?, &net.catcher_spec())?;
        let critic = restore(get("critic")?, &net.critic_spec())?;
        let thrower = match config.mode {
            Mode::Sa => None,
            Mode::Harl => Some(restore(get("thrower")?, &net.thrower_spec())?),
        };
        Ok(Trainer {
            config,
            catcher,
            thrower,
            critic,
            iteration: ckpt.iteration,
        })
    }

    pub fn alpha(&self) -> f64 {
        match self.config.mode {
            Mode::Sa => 1.0,
            Mode::Harl => self.config.alpha_schedule().alpha_at(self.iteration),
        }
    }

    /// Fresh environments for iteration `k`; every stream is a pure function
    /// of the master seed and `k`, which is what makes resuming exact.
    fn slots(&self, k: u64) -> Vec<EnvSlot> {
        let cfg = &self.config;
        (0..cfg.envs_per_batch)
            .map(|i| EnvSlot {
                env: ThrowCatchEnv::new(
                    cfg.env.clone(),
                    cfg.throw.clone(),
                    cfg.rewards.clone(),
                    derive_seeds(cfg.seed, &format!("iter:{k}:env:{i}")),
                ),
                policy_rng: derive_seeds(cfg.seed, &format!("iter:{k}:policy:{i}")),
            })
            .collect()
    }

    pub fn step_iteration(&mut self) -> Result<IterationReport> {
        let k = self.iteration;
        let alpha = self.alpha();
        let cfg = self.config.clone();
        let mut slots = self.slots(k);
        let policies = Policies {
            catcher: (&self.catcher.spec, &self.catcher.params),
            thrower: self.thrower.as_ref().map(|t| (&t.spec, t.params.as_slice())),
            critic: (&self.critic.spec, &self.critic.params),
        };
        let mut batch = collect_rollouts(&policies, &mut slots, cfg.steps_per_env, alpha, cfg.gae.gamma)?;
        batch.compute_advantages(&cfg.gae)?;

        let mut rng = derive_seeds(cfg.seed, &format!("iter:{k}:update"));
        let joint_len = batch.joint_len();
        let (roles, report) = match (&mut self.thrower, &batch.thrower) {
            (Some(thrower), Some(tb)) => {
                let mut agents = [&mut self.catcher, thrower];
                let r = happo_update(&mut agents, &[&batch.catcher, tb], joint_len, &cfg.ppo, &mut rng)?;
                (vec![AgentRole::Catcher, AgentRole::Thrower], r)
            }
            _ => {
                let mut agents = [&mut self.catcher];
                let r = happo_update(&mut agents, &[&batch.catcher], joint_len, &cfg.ppo, &mut rng)?;
                (vec![AgentRole::Catcher], r)
            }
        };
        let value_loss = critic_update(&mut self.critic, &batch.critic_states, &batch.catcher.returns, &cfg.ppo, &mut rng)?;
        self.iteration += 1;
        Ok(IterationReport {
            iteration: k,
            alpha,
            rollout: batch.stats,
            policy: roles.iter().copied().zip(report.stats).collect(),
            update_order: report.order.iter().map(|&i| roles[i]).collect(),
            value_loss,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let record = |name: &str, l: &Learner<f64>| NetworkRecord {
            name: name.to_string(),
            spec: l.spec.clone(),
            params: l.params.clone(),
            optimizer: l.opt.clone(),
        };
        let mut networks = vec![record("catcher", &self.catcher)];
        if let Some(t) = &self.thrower {
            networks.push(record("thrower", t));
        }
        networks.push(record("critic", &self.critic));
        Checkpoint {
            config_digest: self.config.digest(),
            mode: self.config.mode,
            iteration: self.iteration,
            master_seed: self.config.seed,
            networks,
        }
    }
}

pub fn checkpoint_path(out_dir: &Path, iteration: u64) -> PathBuf {
    out_dir.join(format!("checkpoint_{iteration:06}.ckpt"))
}

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const METRICS_FILE: &str = "metrics.jsonl";

/// Runs `trainer` until `config.iterations` are complete, appending one
/// metrics record per iteration and checkpointing every
/// `checkpoint_every` iterations and at the end. With nothing left to do
/// only the checkpoint of the current state is written.
pub fn run_training(trainer: &mut Trainer, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut metrics = MetricsWriter::open(&out_dir.join(METRICS_FILE))?;
    if trainer.iteration == 0 {
        save_checkpoint(&checkpoint_path(out_dir, 0), &trainer.checkpoint())?;
    }
    while trainer.iteration < trainer.config.iterations {
        let start = Instant::now();
        let report = trainer.step_iteration()?;
        metrics.append(&report.to_record(start.elapsed().as_secs_f64()))?;
        if trainer.iteration % trainer.config.checkpoint_every == 0 {
            save_checkpoint(&checkpoint_path(out_dir, trainer.iteration), &trainer.checkpoint())?;
        }
    }
    save_checkpoint(&out_dir.join(FINAL_CHECKPOINT), &trainer.checkpoint())?;
    Ok(())
}

/// Fresh run from `config`.
pub fn train(config: RunConfig, out_dir: &Path) -> Result<Trainer> {
    let mut trainer = Trainer::new(config)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.toml"), trainer.config.to_toml()?)?;
    run_training(&mut trainer, out_dir)?;
    Ok(trainer)
}
