use super::catalog::NUM_OBJECTS;
use super::state::WorldState;
use crate::scalar::Scalar;

pub const CATCHER_OBS_DIM: usize = 35;
pub const THROWER_OBS_DIM: usize = CATCHER_OBS_DIM + 1;
/// Flattened world state seen by the centralized critic.
pub const GLOBAL_STATE_DIM: usize = 33;

/// Slot offsets inside the catcher observation.
pub mod slots {
    pub const PALMS: usize = 0;
    pub const GRIPS: usize = 8;
    pub const OBJECT_POSE: usize = 10;
    pub const OBJECT_VELOCITY: usize = 13;
    pub const RELATIVE: usize = 16;
    pub const ONE_HOT: usize = 20;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub catcher: Vec<T>,
    /// Catcher observation followed by the episode-start flag.
    pub thrower: Vec<T>,
}

/// Angle folded into (−π, π].
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    a.sin().atan2(a.cos())
}

/// Builds both agents' observations in world coordinates.
///
/// Catcher layout: palm position and velocity ×2 (8), grips (2), object
/// x, z, angle (3), object velocity incl. angular (3), object minus palm
/// position ×2 (4), active object one-hot (15).
pub fn build_observations<T: Scalar>(state: &WorldState<T>) -> Observation<T> {
    let mut catcher = Vec::with_capacity(CATCHER_OBS_DIM);
    for p in &state.palms {
        catcher.extend([p.position.x, p.position.z, p.velocity.x, p.velocity.z]);
    }
    catcher.extend(state.palms.iter().map(|p| p.grip));
    let o = &state.object;
    catcher.extend([o.position.x, o.position.z, wrap_angle(o.angle)]);
    catcher.extend([o.velocity.x, o.velocity.z, o.angular_velocity]);
    for p in &state.palms {
        let rel = o.position - p.position;
        catcher.extend([rel.x, rel.z]);
    }
    catcher.extend(one_hot::<T>(state.active_object));
    debug_assert_eq!(catcher.len(), CATCHER_OBS_DIM);

    let mut thrower = catcher.clone();
    thrower.push(if state.t == 0 { T::one() } else { T::zero() });
    Observation { catcher, thrower }
}

/// Critic input: object kinematics (6), palm kinematics and grip ×2 (10),
/// normalised episode clock (1), thrown flag (1), one-hot (15).
pub fn global_state<T: Scalar>(state: &WorldState<T>, horizon: u64) -> Vec<T> {
    let mut g = Vec::with_capacity(GLOBAL_STATE_DIM);
    let o = &state.object;
    g.extend([
        o.position.x,
        o.position.z,
        o.velocity.x,
        o.velocity.z,
        wrap_angle(o.angle),
        o.angular_velocity,
    ]);
    for p in &state.palms {
        g.extend([p.position.x, p.position.z, p.velocity.x, p.velocity.z, p.grip]);
    }
    g.push(T::from_u64(state.t).unwrap() / T::from_u64(horizon.max(1)).unwrap());
    g.push(if state.thrown { T::one() } else { T::zero() });
    g.extend(one_hot::<T>(state.active_object));
    debug_assert_eq!(g.len(), GLOBAL_STATE_DIM);
    g
}

fn one_hot<T: Scalar>(id: usize) -> impl Iterator<Item = T> {
    (0..NUM_OBJECTS).map(move |k| if k == id { T::one() } else { T::zero() })
}
