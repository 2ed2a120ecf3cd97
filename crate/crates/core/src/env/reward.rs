use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, RewardWeights};
use super::state::WorldState;
use super::throw::ThrowVelocity;
use super::vec2::Vec2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative weight of the angular speed inside `r_object_velocity`.
pub const ANGULAR_VELOCITY_WEIGHT: f64 = 0.1;

/// Every reward term of one step, unweighted, plus the weighted totals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents<T> {
    pub r_hand_dist: T,
    pub r_goal: T,
    pub r_finger_contact: T,
    pub r_arm_contact: T,
    pub r_catcher_action: T,
    pub r_object_velocity: T,
    pub r_thrower_action: T,
    pub r_catch: T,
    pub r_throw: T,
    pub r_total: T,
}

fn weights<T: Scalar>(w: &RewardWeights) -> [T; 7] {
    w.as_array().map(T::lit)
}

/// Weighted catch reward from its terms.
pub fn catch_from_terms<T: Scalar>(c: &RewardComponents<T>, w: &RewardWeights) -> T {
    let w = weights::<T>(w);
    w[0] * c.r_hand_dist + w[1] * c.r_goal + w[2] * c.r_finger_contact
        - w[3] * c.r_arm_contact
        - w[4] * c.r_catcher_action
}

pub fn throw_from_terms<T: Scalar>(c: &RewardComponents<T>, w: &RewardWeights) -> T {
    let w = weights::<T>(w);
    w[5] * c.r_object_velocity + w[6] * c.r_thrower_action
}

/// Catch reward of a state reached under `catcher_action`.
pub fn reward_catch<T: Scalar>(
    state: &WorldState<T>,
    catcher_action: &[T],
    w: &RewardWeights,
    cfg: &EnvConfig,
) -> (T, RewardComponents<T>) {
    let palm_radius = T::lit(cfg.palm_radius);
    let threshold = T::lit(cfg.grip_threshold);
    let mean_dist = (state.palm_object_distance(0) + state.palm_object_distance(1)) * T::lit(0.5);
    let goal = Vec2::from_f64(cfg.goal);
    let gripping = (0..2)
        .filter(|&k| state.palms[k].grip > threshold && state.in_contact(k, palm_radius))
        .count();
    let palm_gap = state.palms[0].position.dist(state.palms[1].position);
    let mut c = RewardComponents {
        r_hand_dist: (-mean_dist).exp(),
        r_goal: (-state.object.position.dist(goal)).exp(),
        r_finger_contact: T::from_usize(gripping).unwrap() * T::lit(0.5),
        r_arm_contact: if palm_gap < palm_radius * T::lit(2.0) { T::one() } else { T::zero() },
        r_catcher_action: catcher_action.iter().map(|&a| a * a).sum(),
        ..Default::default()
    };
    c.r_catch = catch_from_terms(&c, w);
    (c.r_catch, c)
}

/// Throw reward; only the throw frame earns it.
pub fn reward_throw<T: Scalar>(
    velocity: &ThrowVelocity<T>,
    v_action: &[T],
    w: &RewardWeights,
) -> (T, RewardComponents<T>) {
    let mut c = RewardComponents {
        r_object_velocity: velocity.linear.norm_sq().sqrt() + T::lit(ANGULAR_VELOCITY_WEIGHT) * velocity.angular.abs(),
        r_thrower_action: v_action.iter().map(|&a| a * a).sum::<T>().sqrt(),
        ..Default::default()
    };
    c.r_throw = throw_from_terms(&c, w);
    (c.r_throw, c)
}

/// `α·r_catch + (1 − α)·r_throw`, shared by both agents.
pub fn blend_rewards<T: Scalar>(r_catch: T, r_throw: T, alpha: T) -> Result<T> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::invalid("alpha", format!("{alpha} is outside [0, 1]")));
    }
    Ok(alpha * r_catch + (T::one() - alpha) * r_throw)
}
