use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaeConfig {
    pub gamma: f64,
    pub lam: f64,
}

impl Default for GaeConfig {
    fn default() -> Self {
        GaeConfig { gamma: 0.99, lam: 0.95 }
    }
}

impl GaeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gae.gamma", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.lam) {
            return Err(Error::invalid("gae.lam", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Generalized advantage estimates and value targets.
///
/// `values` carries one extra bootstrap entry after the last step. A done
/// flag at `t` cuts both the bootstrap and the advantage recursion.
pub fn compute_gae<T: Scalar>(rewards: &[T], values: &[T], dones: &[bool], cfg: &GaeConfig) -> Result<(Vec<T>, Vec<T>)> {
    let n = rewards.len();
    if values.len() != n + 1 {
        return Err(Error::dim("gae values (rewards + bootstrap)", n + 1, values.len()));
    }
    if dones.len() != n {
        return Err(Error::dim("gae dones", n, dones.len()));
    }
    let gamma = T::lit(cfg.gamma);
    let gl = T::lit(cfg.gamma * cfg.lam);
    let mut adv = vec![T::zero(); n];
    let mut next = T::zero();
    for t in (0..n).rev() {
        let live = if dones[t] { T::zero() } else { T::one() };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gl * live * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(&a, &v)| a + v).collect();
    Ok((adv, returns))
}

/// Discounted sum of `rewards` plus the discounted bootstrap value.
pub fn discounted_return<T: Scalar>(rewards: &[T], bootstrap: T, gamma: f64) -> T {
    let gamma = T::lit(gamma);
    rewards.iter().rev().fold(bootstrap, |acc, &r| r + gamma * acc)
}

/// Shifts to zero mean and scales to unit (population) standard deviation.
/// Batches of one are only centred.
pub fn normalize_advantages<T: Scalar>(adv: &[T]) -> Vec<T> {
    let n = adv.len();
    if n == 0 {
        return Vec::new();
    }
    let nf = T::from_usize(n).unwrap();
    let mean = adv.iter().copied().sum::<T>() / nf;
    let centred: Vec<T> = adv.iter().map(|&a| a - mean).collect();
    if n == 1 {
        return centred;
    }
    let var = centred.iter().map(|&c| c * c).sum::<T>() / nf;
    let std = var.sqrt().max(T::lit(1e-8));
    centred.into_iter().map(|c| c / std).collect()
}
