//! Small dense networks with hand-written reverse-mode gradients.

pub mod adam;
pub mod gaussian;
pub mod mlp;
pub mod spec;
pub mod tape;

pub use adam::{adam_step, OptimizerState};
pub use gaussian::{policy_output, GaussianPolicyOutput, LOG_STD_MAX, LOG_STD_MIN};
pub use mlp::{backprop, elu, forward, forward_cached, init_params, ForwardCache};
pub use spec::{Activation, Head, LayerShape, NetworkSpec, ParameterVector};
pub use tape::{BlockId, Gradients, Tape, Var};
