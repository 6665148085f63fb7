//! File formats, image IO and the experiment runner around `pvlab-core`.
//!
//! * [`image`]: binary PGM/PPM.
//! * [`tensor`]: `.pvid` pseudo-video tensors.
//! * [`format`]: CSV report writers.
//! * [`config`]: JSON configurations of the `pvlab` commands.
//! * [`commands`]: the commands themselves, writing into an [`output::OutputDir`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod image;
pub mod output;
pub mod tensor;

pub use error::{FormatError, IoError, RunError};
