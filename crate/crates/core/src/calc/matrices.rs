//! Fork-probability and win-probability matrices.

use serde::Serialize;

use crate::error::CalcError;
use crate::matrix::SquareMatrix;
use crate::model::{MinerId, NetworkModel, TieBreakRule};

/// `f[(i, j)]`: probability that miner `j` forks the round opened by miner `i`.
/// `w[(i, j)]`: probability that `i`'s block wins the fork caused by `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbMatrices {
    pub f: SquareMatrix,
    pub w: SquareMatrix,
}

impl ProbMatrices {
    pub fn from_model(model: &NetworkModel) -> Self {
        Self {
            f: fork_prob_matrix(model),
            w: win_prob_matrix(model),
        }
    }
}

/// `1 − e^{−t/T}`: probability that an exponential block interval of mean `T`
/// ends before a delay `t` elapses.
pub fn fork_prob(delay: f64, mean_interval: f64) -> f64 {
    -(-delay / mean_interval).exp_m1()
}

pub fn fork_prob_matrix(model: &NetworkModel) -> SquareMatrix {
    let t = model.mean_interval();
    let d = model.delays();
    SquareMatrix::from_fn(model.n(), |i, j| {
        if i == j {
            0.0
        } else {
            fork_prob(d.get(i, j), t)
        }
    })
}

/// Probability that miner `k` mines on `i`'s block when `j` has forked the round
/// `i` opened, under first-seen tie breaking.
///
/// `j`'s block is born at a time `x ∈ [0, T_ij)` after `i`'s (the truncated
/// exponential), so it reaches `k` first iff `x + T_jk < T_ik`.
pub fn first_seen_pick_prob(
    model: &NetworkModel,
    i: MinerId,
    j: MinerId,
    k: MinerId,
) -> Result<f64, CalcError> {
    let n = model.n();
    for m in [i, j, k] {
        if m.0 >= n {
            return Err(CalcError::MinerOutOfRange { miner: m.0, n });
        }
    }
    if i == j {
        return Err(CalcError::SameMiner(i.0));
    }
    let d = model.delays();
    let t = model.mean_interval();
    let (t_ij, t_ik, t_jk) = (d.get(i.0, j.0), d.get(i.0, k.0), d.get(j.0, k.0));
    if t_ij <= 0.0 {
        return Err(CalcError::ZeroForkProbability { i: i.0, j: j.0 });
    }
    Ok(pick_prob(t_ij, t_ik, t_jk, t))
}

fn pick_prob(t_ij: f64, t_ik: f64, t_jk: f64, t: f64) -> f64 {
    if t_ik <= t_jk {
        1.0
    } else if t_ik >= t_ij + t_jk {
        0.0
    } else {
        // (e^{-(T_ik - T_jk)/T} - e^{-T_ij/T}) / (1 - e^{-T_ij/T}), rearranged so
        // that both differences are computed with expm1.
        let lo = (t_ik - t_jk) / t;
        let hi = t_ij / t;
        let num = (-lo).exp() * -(lo - hi).exp_m1();
        let p = num / -(-hi).exp_m1();
        p.clamp(0.0, 1.0)
    }
}

/// Win probabilities for the model.
///
/// Two-miner networks have no third party whose tie-breaking matters; the
/// result there accounts for ties that re-form when the next block also forks,
/// and agrees with [`crate::calc::two_miner_closed_form`]. Larger networks use
/// [`tie_break_win_matrix`].
pub fn win_prob_matrix(model: &NetworkModel) -> SquareMatrix {
    if model.n() == 2 {
        two_miner_win_matrix(model)
    } else {
        tie_break_win_matrix(model)
    }
}

/// Win probabilities from the tie-breaking rule alone, assuming the block
/// after the tie settles it:
///
/// * first-seen: `Σ_k α_k p(i, j, k)`
/// * random: `α_i + (1 − α_i − α_j) / 2`
/// * last-generated: `α_i`
///
/// The diagonal is zero.
pub fn tie_break_win_matrix(model: &NetworkModel) -> SquareMatrix {
    let alpha = model.alpha().as_slice();
    let n = model.n();
    let d = model.delays();
    let t = model.mean_interval();
    SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        match model.rule() {
            TieBreakRule::FirstSeen => {
                let t_ij = d.get(i, j);
                if t_ij <= 0.0 {
                    // No fork from j can happen; the entry is never weighted.
                    return alpha[i];
                }
                (0..n)
                    .map(|k| alpha[k] * pick_prob(t_ij, d.get(i, k), d.get(j, k), t))
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            }
            TieBreakRule::Random => alpha[i] + (1.0 - alpha[i] - alpha[j]) / 2.0,
            TieBreakRule::LastGenerated => alpha[i],
        }
    })
}

/// Two-miner win probability with re-forming ties. With `a = α_i`, `b = α_j`:
///
/// `W_ij = (a² + a·b·(1 − f_ij)) / (1 − a·b·(f_ij + f_ji))`
///
/// which for symmetric delays is `a(1 − b f) / (1 − 2abf)`.
fn two_miner_win_matrix(model: &NetworkModel) -> SquareMatrix {
    let alpha = model.alpha().as_slice();
    let f = fork_prob_matrix(model);
    SquareMatrix::from_fn(2, |i, j| {
        if i == j {
            return 0.0;
        }
        let (a, b) = (alpha[i], alpha[j]);
        (a * a + a * b * (1.0 - f[(i, j)])) / (1.0 - a * b * (f[(i, j)] + f[(j, i)]))
    })
}
