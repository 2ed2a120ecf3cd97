//! Configuration, checkpoints, metrics and seed derivation.

pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod seeds;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, NetworkRecord, FORMAT_VERSION};
pub use config::{parse_config, AlphaScheduleConfig, NetworkConfig, RunConfig};
pub use metrics::{append_metrics, read_metrics, AgentMetrics, MetricsRecord, MetricsWriter};
pub use seeds::derive_seeds;
