//! Pseudo-video construction and Markov-order reconstruction-error analysis.
//!
//! A pseudo video is a frame sequence manufactured from one still image by
//! progressive corruption, ordered so that the last frame is the clean image
//! and the first frame is the most corrupted one. This crate builds such
//! videos (recursive blur, heat-equation evolution, first- and high-order
//! Markov Gaussian noising) and quantifies how much information about the
//! clean frame each subset of earlier frames carries:
//!
//! * [`gauss`] computes the minimum last-frame reconstruction error
//!   `E[Var(x_T | x_S)]` of linear-Gaussian chains in closed form.
//! * [`discrete`] computes the same quantity by exhaustive enumeration of
//!   small finite-alphabet chains.
//! * [`predictor`] fits linear and small MLP predictors on sampled chains and
//!   runs context-window autoregressive generation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, image IO and
//! the command line tool live in the `pvlab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod blur;
pub mod context;
pub mod discrete;
pub mod error;
pub mod frame;
pub mod gauss;
pub mod heat;
mod linalg;
pub mod markov;
pub mod predictor;
pub mod report;
pub mod rng;
pub mod schedule;
pub mod stats;

pub use context::Context;
pub use error::{Error, Result};
pub use frame::{Frame, PseudoVideo, Shape};
pub use report::{OracleReport, OracleRow, Tolerances};
pub use rng::RngSpec;
pub use schedule::{linear_beta_schedule, BlurSchedule, HeatSchedule, NoiseSchedule};
