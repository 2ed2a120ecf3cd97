//! Diagonal Gaussian policy distribution.

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp;
use super::spec::{Head, NetworkSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyOutput<T> {
    pub mean: Vec<T>,
    /// Already clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub log_std: Vec<T>,
}

pub(crate) fn clamp_log_std<T: Scalar>(x: T) -> T {
    x.max(T::lit(LOG_STD_MIN)).min(T::lit(LOG_STD_MAX))
}

impl<T: Scalar> GaussianPolicyOutput<T> {
    pub fn new(mean: Vec<T>, log_std: Vec<T>) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::dim("policy log_std", mean.len(), log_std.len()));
        }
        if log_std.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("log_std".into()));
        }
        Ok(GaussianPolicyOutput {
            mean,
            log_std: log_std.into_iter().map(clamp_log_std).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Sum over dimensions of the per-dimension normal log density.
    pub fn log_prob(&self, action: &[T]) -> Result<T> {
        if action.len() != self.mean.len() {
            return Err(Error::dim("action", self.mean.len(), action.len()));
        }
        let half_log_two_pi = T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
        let half = T::lit(0.5);
        Ok(self
            .mean
            .iter()
            .zip(&self.log_std)
            .zip(action)
            .map(|((&mu, &ls), &a)| {
                let z = (a - mu) * (-ls).exp();
                -half * z * z - ls - half_log_two_pi
            })
            .sum())
    }

    /// Draws `mean + exp(log_std) ⊙ ξ` with ξ standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<T>, T) {
        let action: Vec<T> = self
            .mean
            .iter()
            .zip(&self.log_std)
            .map(|(&mu, &ls)| {
                let xi: f64 = rng.sample(StandardNormal);
                mu + ls.exp() * T::lit(xi)
            })
            .collect();
        let lp = self.log_prob(&action).expect("sampled action has policy dimension");
        (action, lp)
    }

    pub fn entropy(&self) -> T {
        let c = T::lit(0.5) * (T::lit(2.0) * T::PI() * T::one().exp()).ln();
        self.log_std.iter().map(|&ls| ls + c).sum()
    }
}

/// Runs a policy network and attaches its log-std block.
pub fn policy_output<T: Scalar>(
    spec: &NetworkSpec,
    params: &[T],
    obs: &[T],
) -> Result<GaussianPolicyOutput<T>> {
    let offset = match (spec.head, spec.log_std_offset()) {
        (Head::GaussianPolicy, Some(o)) => o,
        _ => return Err(Error::invalid("head", "expected a Gaussian policy network")),
    };
    let mean = mlp::forward(spec, params, obs)?;
    GaussianPolicyOutput::new(mean, params[offset..].to_vec())
}
