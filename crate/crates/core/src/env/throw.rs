use rand::Rng;

use super::config::{NoiseMode, ThrowConfig};
use super::vec2::Vec2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const THROWER_ACTION_DIM: usize = 3;
pub const V_ACTION_LINEAR_LIMIT: f64 = 2.0;
pub const V_ACTION_ANGULAR_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThrowVelocity<T> {
    pub linear: Vec2<T>,
    pub angular: T,
}

/// Clamps a raw thrower action `[vx, vz, ω]` to the admissible range.
pub fn clamp_thrower_action<T: Scalar>(v_action: &[T]) -> Result<[T; 3]> {
    if v_action.len() != THROWER_ACTION_DIM {
        return Err(Error::dim("thrower action", THROWER_ACTION_DIM, v_action.len()));
    }
    if v_action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("thrower action".into()));
    }
    let lin = T::lit(V_ACTION_LINEAR_LIMIT);
    let ang = T::lit(V_ACTION_ANGULAR_LIMIT);
    Ok([
        v_action[0].max(-lin).min(lin),
        v_action[1].max(-lin).min(lin),
        v_action[2].max(-ang).min(ang),
    ])
}

/// Draws one ε per velocity component from U(−h·s, h·s).
pub fn sample_throw_noise<T: Scalar, R: Rng + ?Sized>(cfg: &ThrowConfig, rng: &mut R) -> [T; 3] {
    let b = cfg.noise_bound();
    [(); 3].map(|_| T::lit(rng.gen_range(-b..=b)))
}

/// Initial object velocity from the base velocity, the noise draw and the
/// thrower's (clamped) velocity action.
pub fn compose_throw_velocity<T: Scalar>(cfg: &ThrowConfig, eps: &[T; 3], v_action: &[T]) -> Result<ThrowVelocity<T>> {
    let act = clamp_thrower_action(v_action)?;
    let base = [
        T::lit(cfg.v_base_linear[0]),
        T::lit(cfg.v_base_linear[1]),
        T::lit(cfg.v_base_angular),
    ];
    let v: [T; 3] = std::array::from_fn(|i| {
        let factor = match cfg.noise_mode {
            NoiseMode::PerturbOnePlus => T::one() + eps[i],
            NoiseMode::LiteralEq1 => eps[i],
        };
        base[i] * factor + act[i]
    });
    Ok(ThrowVelocity {
        linear: Vec2::new(v[0], v[1]),
        angular: v[2],
    })
}
