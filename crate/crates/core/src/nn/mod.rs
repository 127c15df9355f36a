//! Dense MLP kernels with exact reverse-mode gradients, the L1 imitation loss
//! and the AdamW optimizer.

mod adamw;
mod checkpoint;
mod loss;
mod mlp;
mod network;
mod tensor;

pub use adamw::AdamW;
pub use checkpoint::{network_hash, sha256_hex, Checkpoint, NamedNetwork, CHECKPOINT_SCHEMA_VERSION};
pub use loss::l1_loss;
pub use mlp::{Activation, ForwardCache, Gradients, Layer, MlpSpec, MlpWeights, OutputActivation};
pub use network::Mlp;
pub use tensor::Tensor;
