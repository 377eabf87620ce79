//! Model-based calculation of mining fairness.
//!
//! The network is approximated by one in which a round holds at most two
//! blocks. The round starter then follows a Markov chain whose stationary
//! distribution gives the round start rates; combining these with fork and win
//! probabilities yields each miner's block reward rate.

mod fairness;
mod matrices;
mod stationary;
mod two_miner;

pub use fairness::{
    baseline_fairness, global_fairness, local_fairness, model_fairness, reward_rates,
    FairnessReport,
};
pub use matrices::{
    first_seen_pick_prob, fork_prob, fork_prob_matrix, tie_break_win_matrix, win_prob_matrix,
    ProbMatrices,
};
pub use stationary::{
    fork_rates, stationary_distribution, transition_step, RoundStartRates, DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
};
pub use two_miner::{two_miner_closed_form, TwoMinerSolution};
