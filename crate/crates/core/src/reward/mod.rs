//! Measurement logs, behaviour clustering and utility-based state rewards.

mod kmeans;
mod logs;
mod utility;

pub use kmeans::{cluster_behavior, ClusterSummary, ClusteringConfig, Metric};
pub use logs::{read_records, write_records, LogSelection, LogStore, MeasurementRecord};
pub use utility::{behavior_rewards, state_reward, utility_eval, RewardMode, UtilityConfig, UtilityKind};
