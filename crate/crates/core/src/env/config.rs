use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants and geometry of the planar workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub dt: f64,
    pub horizon: u64,
    /// Magnitude of gravitational acceleration, pointing along −z.
    pub gravity: f64,
    /// Palm acceleration limit per axis (m/s²). Catcher actions are in units of this.
    pub a_max: f64,
    /// Palm speed limit per axis (m/s).
    pub v_max: f64,
    pub palm_radius: f64,
    pub spring_k: f64,
    pub damper_k: f64,
    pub grip_threshold: f64,
    pub goal: [f64; 2],
    /// Table edge on the thrower side (x) and table surface height (z).
    pub table_edge: [f64; 2],
    pub palm_home: [[f64; 2]; 2],
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            dt: 1.0 / 60.0,
            horizon: 120,
            gravity: 9.81,
            a_max: 30.0,
            v_max: 4.0,
            palm_radius: 0.06,
            spring_k: 50.0,
            damper_k: 5.0,
            grip_threshold: 0.5,
            goal: [0.0, 1.2],
            table_edge: [-1.0, 0.0],
            palm_home: [[0.0, 1.15], [0.0, 0.85]],
        }
    }
}

impl EnvConfig {
    pub fn table_height(&self) -> f64 {
        self.table_edge[1]
    }

    pub fn validate(&self) -> Result<()> {
        positive("env.dt", self.dt)?;
        positive("env.a_max", self.a_max)?;
        positive("env.v_max", self.v_max)?;
        positive("env.palm_radius", self.palm_radius)?;
        non_negative("env.gravity", self.gravity)?;
        non_negative("env.spring_k", self.spring_k)?;
        non_negative("env.damper_k", self.damper_k)?;
        if self.horizon == 0 {
            return Err(Error::invalid("env.horizon", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.grip_threshold) {
            return Err(Error::invalid("env.grip_threshold", "must lie in [0, 1]"));
        }
        let coords = self.goal.iter().chain(&self.table_edge).chain(self.palm_home.iter().flatten());
        if coords.clone().any(|c| !c.is_finite()) {
            return Err(Error::invalid("env", "positions must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `v_base ⊙ (1 + ε) + v_action`
    #[default]
    PerturbOnePlus,
    /// `v_base ⊙ ε + v_action`
    LiteralEq1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThrowConfig {
    pub v_base_linear: [f64; 2],
    pub v_base_angular: f64,
    pub noise_half_width: f64,
    pub noise_scale: f64,
    pub noise_mode: NoiseMode,
    /// Spawn point relative to the table edge.
    pub spawn_offset: [f64; 2],
    /// Half-width of the uniform spawn jitter per axis.
    pub spawn_noise: f64,
}

impl Default for ThrowConfig {
    fn default() -> Self {
        ThrowConfig {
            v_base_linear: [5.0, 4.0],
            v_base_angular: 10.0,
            noise_half_width: 0.5,
            noise_scale: 1.0,
            noise_mode: NoiseMode::PerturbOnePlus,
            spawn_offset: [0.20, 0.30],
            spawn_noise: 0.05,
        }
    }
}

impl ThrowConfig {
    /// Effective half-width of ε.
    pub fn noise_bound(&self) -> f64 {
        self.noise_half_width * self.noise_scale
    }

    pub fn validate(&self) -> Result<()> {
        positive("throw.noise_half_width", self.noise_half_width)?;
        positive("throw.noise_scale", self.noise_scale)?;
        non_negative("throw.spawn_noise", self.spawn_noise)?;
        Ok(())
    }
}

/// `w0…w6` of the catch and throw rewards plus the blend weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub hand_dist: f64,
    pub goal: f64,
    pub finger_contact: f64,
    pub arm_contact: f64,
    pub catcher_action: f64,
    pub object_velocity: f64,
    pub thrower_action: f64,
    pub alpha: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights::from_array([5.0, 1.0, 0.5, 0.5, 1e-3, 0.8, 0.2], 0.7)
    }
}

impl RewardWeights {
    pub fn from_array(w: [f64; 7], alpha: f64) -> Self {
        RewardWeights {
            hand_dist: w[0],
            goal: w[1],
            finger_contact: w[2],
            arm_contact: w[3],
            catcher_action: w[4],
            object_velocity: w[5],
            thrower_action: w[6],
            alpha,
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.hand_dist,
            self.goal,
            self.finger_contact,
            self.arm_contact,
            self.catcher_action,
            self.object_velocity,
            self.thrower_action,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        if self.as_array().iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights", "must be finite"));
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("{v} must be positive")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("{v} must be non-negative")))
    }
}
