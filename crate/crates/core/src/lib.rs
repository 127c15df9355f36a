//! Local/cloud routing testbed for embodied crowd navigation.
//!
//! The crate is split along the pipeline:
//!
//! - [`env`]: deterministic 2D corridor world with pedestrians, ray sensing and an expert.
//! - [`nn`]: dense MLP kernels with reverse-mode gradients, L1 loss and AdamW.
//! - [`policies`]: shared feature trunk plus small local and deep cloud action heads.
//! - [`router`]: the binary local/cloud routing policy and its PPO trainer.
//! - [`reward`]: multiplicative reward composition and the additive baseline.
//! - [`costs`]: per-step energy accounting and communication latency sampling.
//! - [`metrics`]: navigation score, ecological navigation score and aggregate reports.
//! - [`harness`]: run configuration, file formats and the command implementations.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod costs;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod policies;
pub mod reward;
pub mod router;

pub use error::{Error, Result};
