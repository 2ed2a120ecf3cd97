use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adaptive-moment optimiser state for one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState<T> {
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub step_count: u64,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub eps_hat: T,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(len: usize, learning_rate: T) -> Self {
        OptimizerState {
            first_moment: vec![T::zero(); len],
            second_moment: vec![T::zero(); len],
            step_count: 0,
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps_hat: T::lit(1e-8),
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::dim("optimizer step", self.first_moment.len(), grads.len()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let one = T::one();
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - self.learning_rate * m_hat / (v_hat.sqrt() + self.eps_hat);
        }
        Ok(())
    }
}

/// Functional form of [`OptimizerState::step`].
pub fn adam_step<T: Scalar>(
    params: &[T],
    grads: &[T],
    state: &OptimizerState<T>,
) -> Result<(Vec<T>, OptimizerState<T>)> {
    let mut p = params.to_vec();
    let mut s = state.clone();
    s.step(&mut p, grads)?;
    Ok((p, s))
}
