//! Federated edge learning over a simulated misaligned over-the-air channel:
//! update packing, non-iid data partitioning, a desk-scale learning task and
//! the round protocol.

pub mod channel;
pub mod codec;
pub mod data;
pub mod error;
pub mod round;
pub mod task;

pub use channel::{AmplitudeModel, ChannelSampler};
pub use codec::{decode_sum, encode_update, PacketPlan};
pub use data::{gaussian_blobs, partition_shards, BlobSpec, Dataset, SyntheticTask};
pub use error::{FeelError, Result};
pub use round::{
    fedavg_reference, local_model, run_round, run_rounds, select_active, ChannelRedraw, FeelConfig, FeelState, RoundRecord, RunRecord,
};
pub use task::{accuracy, local_train, param_count, TrainSpec};
