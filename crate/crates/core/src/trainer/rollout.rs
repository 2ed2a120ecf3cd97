use rayon::prelude::*;

use super::gae::{compute_gae, discounted_return, GaeConfig};
use super::ppo::AgentBatch;
use crate::env::{global_state, ThrowCatchEnv, CATCHER_ACTION_DIM, CATCHER_OBS_DIM, GLOBAL_STATE_DIM, THROWER_ACTION_DIM, THROWER_OBS_DIM};
use crate::error::Result;
use crate::nn::{forward, policy_output, NetworkSpec};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentRole {
    Catcher,
    Thrower,
}

impl AgentRole {
    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Catcher => "catcher",
            AgentRole::Thrower => "thrower",
        }
    }
}

/// Read-only views of the networks used while acting.
#[derive(Debug, Clone, Copy)]
pub struct Policies<'a> {
    pub catcher: (&'a NetworkSpec, &'a [f64]),
    /// `None` replaces the thrower by the scripted throw (zero velocity action).
    pub thrower: Option<(&'a NetworkSpec, &'a [f64])>,
    pub critic: (&'a NetworkSpec, &'a [f64]),
}

/// An environment plus the stream its policies sample from.
#[derive(Debug, Clone)]
pub struct EnvSlot {
    pub env: ThrowCatchEnv<f64>,
    pub policy_rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RolloutStats {
    pub steps: usize,
    pub mean_r_total: f64,
    pub mean_r_catch: f64,
    /// Mean throw reward over throw frames.
    pub mean_r_throw: f64,
    pub completed_episodes: usize,
    pub failed_episodes: usize,
    pub mean_episode_length: f64,
    pub failure_rate: f64,
    /// Mean norm of the clamped thrower velocity action over throws.
    pub mean_thrower_action: f64,
}

/// Per-agent samples of one collection round.
///
/// Catcher samples are the joint samples: one per environment step, indexed
/// in env-major order. The thrower contributes one sample per episode whose
/// span covers every step of that episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub catcher: AgentBatch<f64>,
    pub thrower: Option<AgentBatch<f64>>,
    /// Critic input per catcher sample.
    pub critic_states: Vec<f64>,
    /// `(start, len, bootstrap value)` per environment.
    pub segments: Vec<(usize, usize, f64)>,
    pub stats: RolloutStats,
}

impl RolloutBatch {
    pub fn joint_len(&self) -> usize {
        self.catcher.len()
    }

    /// Fills catcher advantages/returns by GAE per environment segment and
    /// the thrower's by its discounted episode return minus the value at
    /// the throw frame.
    pub fn compute_advantages(&mut self, cfg: &GaeConfig) -> Result<()> {
        let c = &mut self.catcher;
        c.advantages = vec![0.0; c.len()];
        c.returns = vec![0.0; c.len()];
        for &(start, len, bootstrap) in &self.segments {
            let mut values = c.values[start..start + len].to_vec();
            values.push(bootstrap);
            let (adv, ret) = compute_gae(&c.rewards[start..start + len], &values, &c.dones[start..start + len], cfg)?;
            c.advantages[start..start + len].copy_from_slice(&adv);
            c.returns[start..start + len].copy_from_slice(&ret);
        }
        if let Some(t) = &mut self.thrower {
            t.advantages = t.returns.iter().zip(&t.values).map(|(g, v)| g - v).collect();
        }
        Ok(())
    }
}

struct Segment {
    catcher: AgentBatch<f64>,
    thrower: AgentBatch<f64>,
    critic_states: Vec<f64>,
    bootstrap: f64,
    r_catch: f64,
    r_throw: Vec<f64>,
    thrower_action: Vec<f64>,
    completed: usize,
    failed: usize,
    lengths: usize,
}

fn value_of(policies: &Policies, gs: &[f64]) -> Result<f64> {
    Ok(forward(policies.critic.0, policies.critic.1, gs)?[0])
}

fn run_env(slot: &mut EnvSlot, policies: &Policies, steps: usize, alpha: f64, gamma: f64) -> Result<Segment> {
    let env = &mut slot.env;
    env.weights.alpha = alpha;
    let horizon = env.cfg.horizon;
    let mut seg = Segment {
        catcher: AgentBatch::new(CATCHER_OBS_DIM, CATCHER_ACTION_DIM),
        thrower: AgentBatch::new(THROWER_OBS_DIM, THROWER_ACTION_DIM),
        critic_states: Vec::with_capacity(steps * GLOBAL_STATE_DIM),
        bootstrap: 0.0,
        r_catch: 0.0,
        r_throw: Vec::new(),
        thrower_action: Vec::new(),
        completed: 0,
        failed: 0,
        lengths: 0,
    };
    let mut obs = env.observe();
    let mut episode_start = 0usize;
    for k in 0..steps {
        let gs = global_state(&env.state, horizon);
        let value = value_of(policies, &gs)?;
        let out = policy_output(policies.catcher.0, policies.catcher.1, &obs.catcher)?;
        let (action, lp) = out.sample(&mut slot.policy_rng);
        let mut thrower_action = vec![0.0; THROWER_ACTION_DIM];
        if env.state.t == 0 {
            episode_start = k;
            if let Some((spec, params)) = policies.thrower {
                let t_out = policy_output(spec, params, &obs.thrower)?;
                let (a, t_lp) = t_out.sample(&mut slot.policy_rng);
                let t = &mut seg.thrower;
                t.obs.extend_from_slice(&obs.thrower);
                t.actions.extend_from_slice(&a);
                t.old_log_probs.push(t_lp);
                t.values.push(value);
                t.anchor.push(k);
                t.span.push((k, k));
                thrower_action = a;
            }
        }
        let res = env.step(&action, &thrower_action)?;
        if res.throw.is_some() {
            seg.r_throw.push(res.rewards.r_throw);
            seg.thrower_action.push(res.rewards.r_thrower_action);
        }
        let c = &mut seg.catcher;
        c.obs.extend_from_slice(&obs.catcher);
        c.actions.extend_from_slice(&action);
        c.old_log_probs.push(lp);
        c.rewards.push(res.r_total);
        c.values.push(value);
        c.dones.push(res.done);
        c.anchor.push(k);
        c.span.push((k, k + 1));
        seg.critic_states.extend_from_slice(&gs);
        seg.r_catch += res.rewards.r_catch;
        let last = k + 1 == steps;
        if res.done || last {
            let bootstrap = if res.done {
                0.0
            } else {
                value_of(policies, &global_state(&res.state, horizon))?
            };
            if policies.thrower.is_some() {
                let t = &mut seg.thrower;
                if let Some(span) = t.span.last_mut() {
                    span.1 = k + 1;
                }
                let g = discounted_return(&c.rewards[episode_start..=k], bootstrap, gamma);
                t.returns.push(g);
                t.rewards.push(g);
                t.dones.push(res.done);
            }
            if res.done {
                seg.completed += 1;
                seg.lengths += res.state.t as usize;
                if res.failed {
                    seg.failed += 1;
                }
                obs = env.reset();
            } else {
                obs = res.obs;
            }
            if last {
                seg.bootstrap = bootstrap;
            }
        } else {
            obs = res.obs;
        }
    }
    Ok(seg)
}

/// Steps every environment `steps_per_env` times under the current
/// policies. Environments run in parallel; results are merged in slot order.
pub fn collect_rollouts(
    policies: &Policies,
    slots: &mut [EnvSlot],
    steps_per_env: usize,
    alpha: f64,
    gamma: f64,
) -> Result<RolloutBatch> {
    let segments: Vec<Segment> = slots
        .par_iter_mut()
        .map(|slot| run_env(slot, policies, steps_per_env, alpha, gamma))
        .collect::<Result<_>>()?;

    let mut catcher = AgentBatch::new(CATCHER_OBS_DIM, CATCHER_ACTION_DIM);
    let mut thrower = AgentBatch::new(THROWER_OBS_DIM, THROWER_ACTION_DIM);
    let mut critic_states = Vec::new();
    let mut seg_index = Vec::with_capacity(segments.len());
    let mut stats = RolloutStats::default();
    let (mut r_catch, mut r_throw, mut t_act, mut lengths) = (0.0, Vec::new(), Vec::new(), 0usize);
    for seg in segments {
        let offset = catcher.len();
        seg_index.push((offset, seg.catcher.len(), seg.bootstrap));
        append(&mut catcher, seg.catcher, offset);
        append(&mut thrower, seg.thrower, offset);
        critic_states.extend(seg.critic_states);
        r_catch += seg.r_catch;
        r_throw.extend(seg.r_throw);
        t_act.extend(seg.thrower_action);
        stats.completed_episodes += seg.completed;
        stats.failed_episodes += seg.failed;
        lengths += seg.lengths;
    }
    let n = catcher.len().max(1) as f64;
    stats.steps = catcher.len();
    stats.mean_r_total = catcher.rewards.iter().sum::<f64>() / n;
    stats.mean_r_catch = r_catch / n;
    stats.mean_r_throw = mean(&r_throw);
    stats.mean_thrower_action = mean(&t_act);
    if stats.completed_episodes > 0 {
        stats.mean_episode_length = lengths as f64 / stats.completed_episodes as f64;
        stats.failure_rate = stats.failed_episodes as f64 / stats.completed_episodes as f64;
    }
    Ok(RolloutBatch {
        catcher,
        thrower: policies.thrower.map(|_| thrower),
        critic_states,
        segments: seg_index,
        stats,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn append(dst: &mut AgentBatch<f64>, src: AgentBatch<f64>, offset: usize) {
    dst.obs.extend(src.obs);
    dst.actions.extend(src.actions);
    dst.old_log_probs.extend(src.old_log_probs);
    dst.rewards.extend(src.rewards);
    dst.values.extend(src.values);
    dst.dones.extend(src.dones);
    dst.returns.extend(src.returns);
    dst.anchor.extend(src.anchor.into_iter().map(|a| a + offset));
    dst.span.extend(src.span.into_iter().map(|(s, e)| (s + offset, e + offset)));
}
