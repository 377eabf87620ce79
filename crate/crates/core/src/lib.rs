//! Mining fairness of proof-of-work networks under forks.
//!
//! [`calc`] computes round start rates, block reward rates and fairness
//! measures from a [`NetworkModel`]; [`sim`] is an event-driven simulator used
//! to check those numbers; [`forkscale`] bounds how often rounds hold three or
//! more blocks; [`harness`] compares the three against each other.

pub mod calc;
pub mod config;
pub mod error;
pub mod forkscale;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod sim;

pub use calc::{
    baseline_fairness, model_fairness, two_miner_closed_form, FairnessReport, TwoMinerSolution,
};
pub use config::ModelConfig;
pub use error::{CalcError, HarnessError, ModelError};
pub use matrix::SquareMatrix;
pub use model::{
    build_model, constant_delays, exponential_delays, DelayMatrix, HashrateDistribution, MinerId,
    NetworkModel, TieBreakRule,
};
