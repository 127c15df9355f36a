//! Two-tier navigation stack: a shared feature trunk producing the embedding,
//! a small local action head and a deeper cloud action head, plus the
//! imitation trainer (cloud first, then the local head on the frozen trunk).

mod dataset;
mod heads;
mod train;

pub use dataset::{ImitationDataset, Sample};
pub use heads::{ActionScale, CloudHead, LocalHead, PolicyPreset, SharedTrunk};
pub use train::{cloud_l1, local_l1, train_cloud, train_local, TrainHyper, TrainReport};
