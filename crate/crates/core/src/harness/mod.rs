//! Experiment pipeline: configuration, collection, training, evaluation and file formats.

mod commands;
mod config;
mod io;
mod pipeline;

pub use commands::*;
pub use config::*;
pub use io::*;
pub use pipeline::*;
