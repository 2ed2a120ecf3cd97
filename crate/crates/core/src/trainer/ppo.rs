//! Clipped surrogate, compound policy ratio and the sequential
//! heterogeneous-agent update.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gae::normalize_advantages;
use crate::error::{Error, Result};
use crate::nn::{policy_output, NetworkSpec, OptimizerState, Tape, LOG_STD_MAX, LOG_STD_MIN};
use crate::scalar::Scalar;

/// Samples per tape. Fixed so gradient sums never depend on thread count.
const GRAD_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub epochs_per_update: usize,
    pub minibatches: usize,
    pub learning_rate: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Abort threshold on the mean KL between pre- and post-update policy.
    pub max_kl: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_eps: 0.2,
            epochs_per_update: 4,
            minibatches: 4,
            learning_rate: 1e-3,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 1.0,
            max_kl: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps.is_finite()) {
            return Err(Error::invalid("ppo.clip_eps", "must be positive"));
        }
        if self.epochs_per_update == 0 {
            return Err(Error::invalid("ppo.epochs_per_update", "must be at least 1"));
        }
        if self.minibatches == 0 {
            return Err(Error::invalid("ppo.minibatches", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("ppo.learning_rate", "must be positive"));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::invalid("ppo.max_grad_norm", "must be positive"));
        }
        if !(self.max_kl > 0.0) {
            return Err(Error::invalid("ppo.max_kl", "must be positive"));
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return Err(Error::invalid("ppo.value_coef", "coefficients must be non-negative"));
        }
        Ok(())
    }
}

/// `exp(Σ_j (new_j − old_j)) · Â` per sample over the agents already
/// updated this iteration. With no prior agents this is `Â` itself.
pub fn compound_ratio<T: Scalar>(new_log_probs: &[&[T]], old_log_probs: &[&[T]], advantages: &[T]) -> Result<Vec<T>> {
    if new_log_probs.len() != old_log_probs.len() {
        return Err(Error::dim("compound ratio agents", new_log_probs.len(), old_log_probs.len()));
    }
    let n = advantages.len();
    for (new, old) in new_log_probs.iter().zip(old_log_probs) {
        if new.len() != n {
            return Err(Error::dim("compound ratio samples", n, new.len()));
        }
        if old.len() != n {
            return Err(Error::dim("compound ratio samples", n, old.len()));
        }
    }
    Ok((0..n)
        .map(|s| {
            let log_ratio: T = new_log_probs
                .iter()
                .zip(old_log_probs)
                .map(|(new, old)| new[s] - old[s])
                .sum();
            log_ratio.exp() * advantages[s]
        })
        .collect())
}

/// `−mean_t min(ρ_t·M_t, clip(ρ_t, 1−ε, 1+ε)·M_t)` with `ρ = exp(new − old)`.
pub fn ppo_clip_loss<T: Scalar>(log_probs_new: &[T], log_probs_old: &[T], m: &[T], clip_eps: T) -> Result<T> {
    let n = m.len();
    if log_probs_new.len() != n || log_probs_old.len() != n {
        return Err(Error::dim("clip loss samples", n, log_probs_new.len().min(log_probs_old.len())));
    }
    let finite = |xs: &[T]| xs.iter().all(|x| x.is_finite());
    if !(finite(log_probs_new) && finite(log_probs_old) && finite(m)) {
        return Err(Error::NonFinite("ppo clip loss inputs".into()));
    }
    let (lo, hi) = (T::one() - clip_eps, T::one() + clip_eps);
    let total: T = (0..n)
        .map(|t| {
            let rho = (log_probs_new[t] - log_probs_old[t]).exp();
            (rho * m[t]).min(rho.max(lo).min(hi) * m[t])
        })
        .sum();
    let loss = -total / T::from_usize(n.max(1)).unwrap();
    if !loss.is_finite() {
        return Err(Error::NonFinite("ppo clip loss".into()));
    }
    Ok(loss)
}

/// A network with its optimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner<T> {
    pub spec: NetworkSpec,
    pub params: Vec<T>,
    pub opt: OptimizerState<T>,
}

impl<T: Scalar> Learner<T> {
    pub fn new(spec: NetworkSpec, params: Vec<T>, learning_rate: f64) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::dim("parameter vector", spec.param_count(), params.len()));
        }
        let opt = OptimizerState::new(params.len(), T::lit(learning_rate));
        Ok(Learner { spec, params, opt })
    }

    pub fn log_std_offset(&self) -> Result<usize> {
        self.spec
            .log_std_offset()
            .ok_or_else(|| Error::invalid("head", "expected a Gaussian policy network"))
    }
}

/// Samples of one agent, stored row-major.
///
/// `anchor[s]` is the joint sample whose action pair `s` belongs to and
/// `span[s]` the range of joint samples its action influences.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentBatch<T> {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub obs: Vec<T>,
    pub actions: Vec<T>,
    pub old_log_probs: Vec<T>,
    pub rewards: Vec<T>,
    pub values: Vec<T>,
    pub dones: Vec<bool>,
    pub advantages: Vec<T>,
    pub returns: Vec<T>,
    pub anchor: Vec<usize>,
    pub span: Vec<(usize, usize)>,
}

impl<T: Scalar> AgentBatch<T> {
    pub fn new(obs_dim: usize, act_dim: usize) -> Self {
        AgentBatch {
            obs_dim,
            act_dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    pub fn obs_row(&self, s: usize) -> &[T] {
        &self.obs[s * self.obs_dim..(s + 1) * self.obs_dim]
    }

    pub fn action_row(&self, s: usize) -> &[T] {
        &self.actions[s * self.act_dim..(s + 1) * self.act_dim]
    }

    pub fn check(&self) -> Result<()> {
        let n = self.len();
        let checks = [
            ("batch observations", n * self.obs_dim, self.obs.len()),
            ("batch actions", n * self.act_dim, self.actions.len()),
            ("batch advantages", n, self.advantages.len()),
            ("batch anchors", n, self.anchor.len()),
            ("batch spans", n, self.span.len()),
        ];
        for (ctx, want, got) in checks {
            if want != got {
                return Err(Error::dim(ctx, want, got));
            }
        }
        Ok(())
    }
}

/// Per-agent log probabilities of the stored actions under `params`.
pub fn batch_log_probs<T: Scalar>(spec: &NetworkSpec, params: &[T], batch: &AgentBatch<T>) -> Result<Vec<T>> {
    (0..batch.len())
        .into_par_iter()
        .map(|s| policy_output(spec, params, batch.obs_row(s))?.log_prob(batch.action_row(s)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyStats {
    pub policy_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

fn clip_grad_norm<T: Scalar>(grad: &mut [T], max_norm: f64) {
    let norm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
    let max_norm = T::lit(max_norm);
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g = *g * s);
    }
}

fn sum_chunks<T: Scalar>(parts: Vec<(T, Vec<T>, usize)>, len: usize) -> (T, Vec<T>, usize) {
    let mut grad = vec![T::zero(); len];
    let mut loss = T::zero();
    let mut count = 0;
    for (l, g, c) in parts {
        loss = loss + l;
        count += c;
        for (a, b) in grad.iter_mut().zip(g) {
            *a = *a + b;
        }
    }
    (loss, grad, count)
}

/// Loss and gradient of the clipped surrogate (plus entropy bonus) over the
/// minibatch `idx`. The third value counts clipped samples.
pub fn surrogate_gradient<T: Scalar>(
    learner: &Learner<T>,
    batch: &AgentBatch<T>,
    idx: &[usize],
    m: &[T],
    cfg: &PpoConfig,
) -> Result<(T, Vec<T>, usize)> {
    let offset = learner.log_std_offset()?;
    let inv_n = T::one() / T::from_usize(idx.len().max(1)).unwrap();
    let eps = T::lit(cfg.clip_eps);
    let (lo, hi) = (T::one() - eps, T::one() + eps);
    let parts = idx
        .par_chunks(GRAD_CHUNK)
        .enumerate()
        .map(|(chunk_no, chunk)| -> Result<(T, Vec<T>, usize)> {
            let mut tape = Tape::new();
            let b = tape.add_block(&learner.params);
            let log_std: Vec<_> = (0..batch.act_dim)
                .map(|i| {
                    let p = tape.param(b, offset + i);
                    tape.clamp(p, T::lit(LOG_STD_MIN), T::lit(LOG_STD_MAX))
                })
                .collect();
            let mut terms = Vec::with_capacity(chunk.len() + 1);
            let mut clipped = 0;
            for &s in chunk {
                let mean = tape.forward(&learner.spec, b, batch.obs_row(s))?;
                let lp = tape.gaussian_log_prob(&mean, &log_std, batch.action_row(s))?;
                let old = tape.constant(batch.old_log_probs[s]);
                let diff = tape.sub(lp, old);
                let ratio = tape.exp(diff);
                let adv = tape.constant(m[s]);
                let unclipped = tape.mul(ratio, adv);
                let bounded = tape.clamp(ratio, lo, hi);
                let clipped_term = tape.mul(bounded, adv);
                terms.push(tape.min(unclipped, clipped_term));
                let r = tape.value(ratio);
                if r < lo || r > hi {
                    clipped += 1;
                }
            }
            let total = tape.sum(&terms);
            let mut loss = tape.scale(total, -inv_n);
            if chunk_no == 0 && cfg.entropy_coef != 0.0 {
                let entropy_const = T::lit(0.5) * (T::lit(2.0) * T::PI() * T::one().exp()).ln();
                let ent_terms: Vec<_> = log_std.iter().map(|&ls| tape.add_const(ls, entropy_const)).collect();
                let entropy = tape.sum(&ent_terms);
                let bonus = tape.scale(entropy, -T::lit(cfg.entropy_coef));
                loss = tape.add(loss, bonus);
            }
            let value = tape.value(loss);
            let grad = tape.backward(&[loss])?.into_block(b);
            Ok((value, grad, clipped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_chunks(parts, learner.params.len()))
}

/// Runs the PPO epochs for one agent against the (compound) advantage `m`.
/// Returns the statistics and the agent's post-update log probabilities.
pub fn ppo_update<T: Scalar, R: Rng + ?Sized>(
    learner: &mut Learner<T>,
    batch: &AgentBatch<T>,
    m: &[T],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<(PolicyStats, Vec<T>)> {
    batch.check()?;
    if m.len() != batch.len() {
        return Err(Error::dim("compound advantage", batch.len(), m.len()));
    }
    let n = batch.len();
    let mut stats = PolicyStats::default();
    if n == 0 {
        return Ok((stats, Vec::new()));
    }
    let mb_size = n.div_ceil(cfg.minibatches.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    let (mut loss_acc, mut clipped, mut seen) = (0.0, 0usize, 0usize);
    for epoch in 0..cfg.epochs_per_update {
        order.shuffle(rng);
        for idx in order.chunks(mb_size) {
            let (loss, mut grad, c) = surrogate_gradient(learner, batch, idx, m, cfg)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("policy loss".into()));
            }
            if epoch + 1 == cfg.epochs_per_update {
                loss_acc += loss.to_f64_lossy() * idx.len() as f64;
                clipped += c;
                seen += idx.len();
            }
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            learner.opt.step(&mut learner.params, &grad)?;
        }
    }
    let new_lp = batch_log_probs(&learner.spec, &learner.params, batch)?;
    let kl = approx_kl(&batch.old_log_probs, &new_lp);
    stats.policy_loss = loss_acc / seen.max(1) as f64;
    stats.clip_fraction = clipped as f64 / seen.max(1) as f64;
    stats.approx_kl = kl.to_f64_lossy();
    if !(stats.approx_kl <= cfg.max_kl) {
        return Err(Error::Diverged {
            kl: stats.approx_kl,
            limit: cfg.max_kl,
        });
    }
    Ok((stats, new_lp))
}

/// Mean of `(ρ − 1) − ln ρ`, a non-negative estimate of KL(old ‖ new).
pub fn approx_kl<T: Scalar>(old: &[T], new: &[T]) -> T {
    let n = old.len().max(1);
    let total: T = old
        .iter()
        .zip(new)
        .map(|(&o, &nw)| {
            let log_ratio = nw - o;
            log_ratio.exp() - T::one() - log_ratio
        })
        .sum();
    total / T::from_usize(n).unwrap()
}

/// Squared-error regression of the critic onto `returns`.
pub fn critic_update<T: Scalar, R: Rng + ?Sized>(
    critic: &mut Learner<T>,
    states: &[T],
    returns: &[T],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<f64> {
    let dim = critic.spec.input_dim;
    let n = returns.len();
    if states.len() != n * dim {
        return Err(Error::dim("critic states", n * dim, states.len()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mb_size = n.div_ceil(cfg.minibatches.min(n));
    let mut order: Vec<usize> = (0..n).collect();
    let mut last_epoch_loss = 0.0;
    for epoch in 0..cfg.epochs_per_update {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(mb_size) {
            let (loss, mut grad) = value_gradient(critic, states, returns, idx, cfg.value_coef)?;
            epoch_loss += loss.to_f64_lossy() * idx.len() as f64;
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            critic.opt.step(&mut critic.params, &grad)?;
        }
        if epoch + 1 == cfg.epochs_per_update {
            last_epoch_loss = epoch_loss / n as f64;
        }
    }
    if !last_epoch_loss.is_finite() {
        return Err(Error::NonFinite("value loss".into()));
    }
    Ok(last_epoch_loss)
}

/// `value_coef · mean (V(s) − R)²` and its gradient over `idx`.
pub fn value_gradient<T: Scalar>(
    critic: &Learner<T>,
    states: &[T],
    returns: &[T],
    idx: &[usize],
    value_coef: f64,
) -> Result<(T, Vec<T>)> {
    let dim = critic.spec.input_dim;
    let coef = T::lit(value_coef) / T::from_usize(idx.len().max(1)).unwrap();
    let parts = idx
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(T, Vec<T>, usize)> {
            let mut tape = Tape::new();
            let b = tape.add_block(&critic.params);
            let mut terms = Vec::with_capacity(chunk.len());
            for &s in chunk {
                let v = tape.forward(&critic.spec, b, &states[s * dim..(s + 1) * dim])?[0];
                let target = tape.constant(returns[s]);
                let err = tape.sub(v, target);
                terms.push(tape.square(err));
            }
            let total = tape.sum(&terms);
            let loss = tape.scale(total, coef);
            Ok((tape.value(loss), tape.backward(&[loss])?.into_block(b), 0))
        })
        .collect::<Result<Vec<_>>>()?;
    let (loss, grad, _) = sum_chunks(parts, critic.params.len());
    Ok((loss, grad))
}

/// Uniformly random update order over `n` agents.
pub fn draw_agent_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct HappoReport {
    pub order: Vec<usize>,
    /// Indexed like the input agents.
    pub stats: Vec<PolicyStats>,
}

/// Lifts per-sample values of `owner` onto the samples of `target`:
/// sample `s` of `target` reads the `owner` sample whose span covers
/// `target.anchor[s]`.
fn align<T: Scalar>(owner: &AgentBatch<T>, values: &[T], target: &AgentBatch<T>, joint_len: usize) -> Result<Vec<T>> {
    let mut cover = vec![usize::MAX; joint_len];
    for (s, &(start, end)) in owner.span.iter().enumerate() {
        if end > joint_len || start > end {
            return Err(Error::dim("joint span", joint_len, end));
        }
        cover[start..end].iter_mut().for_each(|c| *c = s);
    }
    target
        .anchor
        .iter()
        .map(|&k| match cover.get(k) {
            Some(&s) if s != usize::MAX => Ok(values[s]),
            _ => Err(Error::invalid("anchor", format!("joint sample {k} has no partner action"))),
        })
        .collect()
}

/// Sequential heterogeneous-agent update: agents are visited in a random
/// order and each optimises its clipped surrogate against the advantage
/// scaled by the policy ratios of the agents updated before it.
pub fn happo_update<T: Scalar, R: Rng + ?Sized>(
    agents: &mut [&mut Learner<T>],
    batches: &[&AgentBatch<T>],
    joint_len: usize,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<HappoReport> {
    if agents.len() != batches.len() {
        return Err(Error::dim("agents vs batches", agents.len(), batches.len()));
    }
    let order = draw_agent_order(agents.len(), rng);
    let mut stats = vec![PolicyStats::default(); agents.len()];
    // (agent, new log probs) of the agents already updated.
    let mut done: Vec<(usize, Vec<T>)> = Vec::new();
    for &i in &order {
        let batch = batches[i];
        batch.check()?;
        let adv = normalize_advantages(&batch.advantages);
        let mut prior_new = Vec::with_capacity(done.len());
        let mut prior_old = Vec::with_capacity(done.len());
        for (j, new_lp) in &done {
            prior_new.push(align(batches[*j], new_lp, batch, joint_len)?);
            prior_old.push(align(batches[*j], &batches[*j].old_log_probs, batch, joint_len)?);
        }
        let new_refs: Vec<&[T]> = prior_new.iter().map(Vec::as_slice).collect();
        let old_refs: Vec<&[T]> = prior_old.iter().map(Vec::as_slice).collect();
        let m = compound_ratio(&new_refs, &old_refs, &adv)?;
        let (s, new_lp) = ppo_update(agents[i], batch, &m, cfg, rng)?;
        stats[i] = s;
        done.push((i, new_lp));
    }
    Ok(HappoReport { order, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compound_ratio_cases() {
        let adv = [1.0_f64, -2.0, 0.5];
        assert_eq!(compound_ratio(&[], &[], &adv).unwrap(), adv.to_vec());
        let same = [0.3, -1.0, 2.0];
        assert_eq!(compound_ratio(&[&same], &[&same], &adv).unwrap(), adv.to_vec());
        let new = [0.1, 0.2, -0.3];
        let old = [0.0, 0.5, -0.1];
        let m = compound_ratio(&[&new], &[&old], &adv).unwrap();
        for s in 0..3 {
            assert!((m[s] - (new[s] - old[s]).exp() * adv[s]).abs() < 1e-12);
        }
        assert!(compound_ratio(&[&new[..2]], &[&old], &adv).is_err());
    }

    #[test]
    fn clip_loss_identity_ratio() {
        let lp = [0.1_f64, -0.4, 2.0];
        let m = [1.0, -3.0, 0.5];
        let loss = ppo_clip_loss(&lp, &lp, &m, 0.2).unwrap();
        assert!((loss - (-(1.0 - 3.0 + 0.5) / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn clip_loss_positive_advantage_clipped() {
        let eps = 0.2_f64;
        let new = [(1.0 + 2.0 * eps).ln()];
        let loss = ppo_clip_loss(&new, &[0.0], &[1.0], eps).unwrap();
        assert!((loss + (1.0 + eps)).abs() < 1e-15);
    }

    #[test]
    fn clip_loss_nan() {
        assert!(ppo_clip_loss(&[f64::NAN], &[0.0], &[1.0], 0.2).is_err());
    }

    #[test]
    fn order_is_a_permutation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut o = draw_agent_order(5, &mut rng);
        o.sort();
        assert_eq!(o, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn kl_is_zero_for_equal_policies() {
        assert_eq!(approx_kl(&[0.5_f64, -1.0], &[0.5, -1.0]), 0.0);
        assert!(approx_kl(&[0.5_f64], &[0.0]) > 0.0);
    }
}
