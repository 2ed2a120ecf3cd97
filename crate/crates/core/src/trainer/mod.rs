//! Heterogeneous-agent PPO training.

pub mod gae;
pub mod ppo;
pub mod rollout;
pub mod schedule;
pub mod train;

pub use gae::{compute_gae, discounted_return, normalize_advantages, GaeConfig};
pub use ppo::{
    approx_kl, batch_log_probs, compound_ratio, critic_update, draw_agent_order, happo_update, ppo_clip_loss,
    ppo_update, surrogate_gradient, value_gradient, AgentBatch, HappoReport, Learner, PolicyStats, PpoConfig,
};
pub use rollout::{collect_rollouts, AgentRole, Policies, RolloutBatch, RolloutStats};
pub use schedule::{AlphaMode, AlphaSchedule};
pub use train::{checkpoint_path, run_training, train, IterationReport, Mode, Trainer, FINAL_CHECKPOINT, METRICS_FILE};
