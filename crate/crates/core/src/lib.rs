pub mod env;
pub mod error;
pub mod eval;
pub mod io;
pub mod nn;
pub mod scalar;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Env = env::ThrowCatchEnv<f64>;
pub type WorldState = env::WorldState<f64>;
pub type Observation = env::Observation<f64>;
pub type StepOutcome = env::StepOutcome<f64>;
pub type RewardComponents = env::RewardComponents<f64>;
pub type AgentBatch = trainer::AgentBatch<f64>;
pub type Learner = trainer::Learner<f64>;
pub type OptimizerState = nn::OptimizerState<f64>;
pub type GaussianPolicyOutput = nn::GaussianPolicyOutput<f64>;
