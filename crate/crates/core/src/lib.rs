//! Polar codes with CRC-aided list decoding and a two-staged adaptive
//! SCL (TA-SCL) pipeline model.
//!
//! The crate is organized around the data path of a hardware TA-SCL
//! decoder:
//!
//! * [`codec`] — code construction, encoding and CRC handling;
//! * [`channel`] — BPSK/AWGN LLR generation and fixed-point quantization;
//! * [`decoders`] — SC, SCL and the two adaptive-SCL variants;
//! * [`latency`] — cycle and memory arithmetic for the two component
//!   decoders, speed gain and buffer sizing;
//! * [`markov`] — the exact Markov-chain model predicting buffer-overflow
//!   probability and the block-error-rate bound;
//! * [`sched`] — a discrete-time simulation of the scheduler that the
//!   model describes, in both abstract (Bernoulli) and full-decoder modes.
//!
//! All Monte Carlo entry points take an explicit seed and derive one RNG
//! substream per frame, so results are reproducible independent of
//! execution order.

pub mod channel;
pub mod codec;
pub mod decoders;
pub mod latency;
pub mod markov;
pub mod rational;
pub mod rng;
pub mod sched;

use thiserror::Error;

/// Errors reported by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A configuration the models do not cover.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative solve did not converge within its cap.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// Malformed serialized data.
    #[error("parse error: {0}")]
    Parse(String),
    /// A design request that no parameter choice can satisfy.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
