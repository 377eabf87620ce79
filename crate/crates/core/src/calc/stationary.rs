//! Round-start-rate Markov chain and its stationary distribution.

use serde::Serialize;

use crate::error::CalcError;
use crate::matrix::SquareMatrix;

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

/// Stationary distribution of the round starter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStartRates {
    pub pi: Vec<f64>,
    /// Max per-component change between the last two iterates.
    pub residual: f64,
    pub iterations: u64,
}

/// `dp[j] = Σ_k α_k F[j][k]`, the probability that the round opened by `j` forks.
pub fn fork_rates(alpha: &[f64], f: &SquareMatrix) -> Vec<f64> {
    (0..alpha.len())
        .map(|j| f.row(j).iter().zip(alpha).map(|(f, a)| f * a).sum())
        .collect()
}

/// One step of the round-starter chain:
///
/// `P(X' = i) = Σ_j (α_i (1 − F_ji) + Σ_k α_k F_jk α_i) P(X = j)`
pub fn transition_step(pi: &[f64], alpha: &[f64], f: &SquareMatrix) -> Vec<f64> {
    let dp = fork_rates(alpha, f);
    let mut out = vec![0.0; alpha.len()];
    step_into(pi, alpha, f, &dp, &mut out);
    out
}

fn step_into(pi: &[f64], alpha: &[f64], f: &SquareMatrix, dp: &[f64], out: &mut [f64]) {
    let n = alpha.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += (1.0 - f[(j, i)] + dp[j]) * pi[j];
        }
        *o = alpha[i] * acc;
    }
}

/// Power iteration from `pi = alpha` with two alternating buffers until no
/// component moves by more than `epsilon`.
pub fn stationary_distribution(
    alpha: &[f64],
    f: &SquareMatrix,
    epsilon: f64,
    max_iter: u64,
) -> Result<RoundStartRates, CalcError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(CalcError::InvalidArgument {
            name: "epsilon",
            requirement: "positive",
            value: epsilon,
        });
    }
    if max_iter == 0 {
        return Err(CalcError::InvalidArgument {
            name: "max_iter",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    if f.dim() != alpha.len() {
        return Err(CalcError::LengthMismatch(alpha.len(), f.dim()));
    }
    let dp = fork_rates(alpha, f);
    let mut buf = [alpha.to_vec(), vec![0.0; alpha.len()]];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut cur = 0;
    while iterations < max_iter {
        let (a, b) = buf.split_at_mut(1);
        let (src, dst) = if cur == 0 {
            (&a[0], &mut b[0])
        } else {
            (&b[0], &mut a[0])
        };
        step_into(src, alpha, f, &dp, dst);
        iterations += 1;
        residual = src
            .iter()
            .zip(dst.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        cur ^= 1;
        if residual <= epsilon {
            return Ok(RoundStartRates {
                pi: std::mem::take(&mut buf[cur]),
                residual,
                iterations,
            });
        }
    }
    Err(CalcError::NonConvergence {
        iterations,
        residual,
    })
}
