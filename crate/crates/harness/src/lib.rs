//! Experiment orchestration: Monte Carlo error-rate curves, scheduler
//! runs, model-versus-simulation comparison and parameter design.

pub mod bler;
pub mod compare;
pub mod config;
pub mod csvout;
pub mod design;

pub use tascl_core as core;
