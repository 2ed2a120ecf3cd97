use super::config::EnvConfig;
use super::state::WorldState;
use super::vec2::Vec2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CATCHER_ACTION_DIM: usize = 6;

/// One palm's decoded command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmCommand<T> {
    /// Applied acceleration in m/s², each axis within ±a_max.
    pub acceleration: Vec2<T>,
    pub grip_target: T,
}

/// Splits a catcher action `[ax, az, grip] × 2` (accelerations in units of
/// `a_max`) into clamped per-palm commands.
pub fn decode_catcher_action<T: Scalar>(action: &[T], cfg: &EnvConfig) -> Result<[PalmCommand<T>; 2]> {
    if action.len() != CATCHER_ACTION_DIM {
        return Err(Error::dim("catcher action", CATCHER_ACTION_DIM, action.len()));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("catcher action".into()));
    }
    let a_max = T::lit(cfg.a_max);
    let cmd = |k: usize| {
        let a = &action[3 * k..3 * k + 3];
        PalmCommand {
            acceleration: Vec2::new(a[0], a[1]).clamp_each(T::one()) * a_max,
            grip_target: a[2].max(T::zero()).min(T::one()),
        }
    };
    Ok([cmd(0), cmd(1)])
}

/// Semi-implicit Euler step: forces from the current state update the
/// velocities, then the new velocities move the positions.
pub fn physics_step<T: Scalar>(state: &WorldState<T>, catcher_action: &[T], cfg: &EnvConfig) -> Result<WorldState<T>> {
    state.check_finite()?;
    let cmds = decode_catcher_action(catcher_action, cfg)?;
    let dt = T::lit(cfg.dt);
    let grip_threshold = T::lit(cfg.grip_threshold);
    let palm_radius = T::lit(cfg.palm_radius);
    let (k_s, k_d) = (T::lit(cfg.spring_k), T::lit(cfg.damper_k));
    let mut next = state.clone();

    let obj = &state.object;
    let mut force = Vec2::zero();
    for (k, palm) in state.palms.iter().enumerate() {
        if palm.grip > grip_threshold && state.in_contact(k, palm_radius) {
            force += -(obj.position - palm.position) * k_s - obj.velocity * k_d;
        }
    }
    let gravity = Vec2::new(T::zero(), -T::lit(cfg.gravity));
    let accel = gravity + force * (T::one() / state.object_mass);
    let o = &mut next.object;
    o.velocity = obj.velocity + accel * dt;
    o.position = obj.position + o.velocity * dt;
    o.angle = obj.angle + obj.angular_velocity * dt;

    let v_max = T::lit(cfg.v_max);
    for (palm, cmd) in next.palms.iter_mut().zip(cmds) {
        palm.velocity = (palm.velocity + cmd.acceleration * dt).clamp_each(v_max);
        palm.position += palm.velocity * dt;
        palm.grip = cmd.grip_target;
    }
    next.t = state.t + 1;
    next.check_finite()?;
    Ok(next)
}
