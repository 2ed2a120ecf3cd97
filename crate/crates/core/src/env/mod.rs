//! Planar throw-catch environment.
//!
//! `x` points from the thrower's table edge toward the catcher, `z` is up.
//! The thrower acts once, at `t = 0`, by shaping the object's launch
//! velocity; the catcher drives two disc-shaped palms for the rest of the
//! episode.

pub mod catalog;
pub mod config;
pub mod obs;
pub mod physics;
pub mod reward;
pub mod state;
pub mod throw;
pub mod transcript;
pub mod vec2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use catalog::{object_by_name, object_catalog, ObjectSpec, NUM_OBJECTS};
pub use config::{EnvConfig, NoiseMode, RewardWeights, ThrowConfig};
pub use obs::{build_observations, global_state, Observation, CATCHER_OBS_DIM, GLOBAL_STATE_DIM, THROWER_OBS_DIM};
pub use physics::{physics_step, CATCHER_ACTION_DIM};
pub use reward::{blend_rewards, reward_catch, reward_throw, RewardComponents};
pub use state::{ObjectState, PalmState, WorldState};
pub use throw::{clamp_thrower_action, compose_throw_velocity, sample_throw_noise, ThrowVelocity, THROWER_ACTION_DIM};
pub use vec2::Vec2;

use crate::error::Result;
use crate::scalar::Scalar;

/// Starts an episode: palms at home, a uniformly chosen object at the
/// jittered spawn point, nothing thrown yet.
pub fn reset<T: Scalar, R: Rng + ?Sized>(
    cfg: &EnvConfig,
    throw_cfg: &ThrowConfig,
    rng: &mut R,
) -> (WorldState<T>, Observation<T>) {
    let catalog = object_catalog();
    let object = &catalog[rng.gen_range(0..NUM_OBJECTS)];
    let jx: f64 = rng.gen_range(-1.0..=1.0);
    let jz: f64 = rng.gen_range(-1.0..=1.0);
    let n = throw_cfg.spawn_noise;
    let spawn = Vec2::new(
        cfg.table_edge[0] + throw_cfg.spawn_offset[0] + n * jx,
        cfg.table_edge[1] + throw_cfg.spawn_offset[1] + n * jz,
    );
    let state = WorldState::new(
        object,
        Vec2::new(T::lit(spawn.x), T::lit(spawn.z)),
        cfg.palm_home.map(Vec2::from_f64),
    );
    let obs = build_observations(&state);
    (state, obs)
}

/// The object has dropped below the table surface plus half its size.
pub fn check_failure<T: Scalar>(state: &WorldState<T>, cfg: &EnvConfig) -> bool {
    state.object.position.z < T::lit(cfg.table_height()) + state.object_radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub state: WorldState<T>,
    pub obs: Observation<T>,
    pub r_total: T,
    pub rewards: RewardComponents<T>,
    pub done: bool,
    pub failed: bool,
    /// Launch velocity, set on the throw frame only.
    pub throw: Option<ThrowVelocity<T>>,
}

/// Advances one frame. On the first frame the thrower action is turned
/// into the launch velocity; afterwards it is ignored.
#[allow(clippy::too_many_arguments)]
pub fn step<T: Scalar, R: Rng + ?Sized>(
    state: &WorldState<T>,
    catcher_action: &[T],
    thrower_action: &[T],
    weights: &RewardWeights,
    cfg: &EnvConfig,
    throw_cfg: &ThrowConfig,
    rng: &mut R,
) -> Result<StepOutcome<T>> {
    let mut current = state.clone();
    let mut throw_part = None;
    if current.t == 0 && !current.thrown {
        let v_action = clamp_thrower_action(thrower_action)?;
        let eps = sample_throw_noise::<T, _>(throw_cfg, rng);
        let v = compose_throw_velocity(throw_cfg, &eps, &v_action)?;
        current.object.velocity = v.linear;
        current.object.angular_velocity = v.angular;
        current.thrown = true;
        throw_part = Some((v, reward_throw(&v, &v_action, weights).1));
    }
    let next = physics_step(&current, catcher_action, cfg)?;
    let (r_catch, mut rewards) = reward_catch(&next, catcher_action, weights, cfg);
    if let Some((_, t)) = &throw_part {
        rewards.r_object_velocity = t.r_object_velocity;
        rewards.r_thrower_action = t.r_thrower_action;
        rewards.r_throw = t.r_throw;
    }
    rewards.r_catch = r_catch;
    rewards.r_total = blend_rewards(r_catch, rewards.r_throw, T::lit(weights.alpha))?;
    let failed = check_failure(&next, cfg);
    let done = failed || next.t >= cfg.horizon;
    let obs = build_observations(&next);
    Ok(StepOutcome {
        r_total: rewards.r_total,
        state: next,
        obs,
        rewards,
        done,
        failed,
        throw: throw_part.map(|(v, _)| v),
    })
}

/// One environment instance owning its configuration, state and rng stream.
#[derive(Debug, Clone)]
pub struct ThrowCatchEnv<T> {
    pub cfg: EnvConfig,
    pub throw_cfg: ThrowConfig,
    pub weights: RewardWeights,
    pub rng: ChaCha8Rng,
    pub state: WorldState<T>,
}

impl<T: Scalar> ThrowCatchEnv<T> {
    pub fn new(cfg: EnvConfig, throw_cfg: ThrowConfig, weights: RewardWeights, mut rng: ChaCha8Rng) -> Self {
        let (state, _) = reset(&cfg, &throw_cfg, &mut rng);
        ThrowCatchEnv {
            cfg,
            throw_cfg,
            weights,
            rng,
            state,
        }
    }

    pub fn reset(&mut self) -> Observation<T> {
        let (state, obs) = reset(&self.cfg, &self.throw_cfg, &mut self.rng);
        self.state = state;
        obs
    }

    pub fn observe(&self) -> Observation<T> {
        build_observations(&self.state)
    }

    pub fn step(&mut self, catcher_action: &[T], thrower_action: &[T]) -> Result<StepOutcome<T>> {
        let out = step(
            &self.state,
            catcher_action,
            thrower_action,
            &self.weights,
            &self.cfg,
            &self.throw_cfg,
            &mut self.rng,
        )?;
        self.state = out.state.clone();
        Ok(out)
    }
}
