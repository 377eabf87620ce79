use serde::Serialize;

use crate::calc::matrices::fork_prob;
use crate::error::CalcError;

/// Closed-form solution for two miners `A`, `B` with a common delay `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoMinerSolution {
    pub alpha_a: f64,
    pub d_over_t: f64,
    pub f: f64,
    pub pi_a: f64,
    pub pi_b: f64,
    pub w_ab: f64,
    pub w_ba: f64,
    pub lf1_a: f64,
    pub lf1_b: f64,
}

pub fn two_miner_closed_form(alpha_a: f64, d_over_t: f64) -> Result<TwoMinerSolution, CalcError> {
    if !(alpha_a > 0.0 && alpha_a < 1.0) {
        return Err(CalcError::InvalidArgument {
            name: "alpha_a",
            requirement: "in (0, 1)",
            value: alpha_a,
        });
    }
    if !(d_over_t.is_finite() && d_over_t >= 0.0) {
        return Err(CalcError::InvalidArgument {
            name: "d_over_t",
            requirement: "finite and non-negative",
            value: d_over_t,
        });
    }
    let (a, b) = (alpha_a, 1.0 - alpha_a);
    let f = fork_prob(d_over_t, 1.0);
    let denom = 1.0 - 2.0 * a * f * b;
    let pi_a = a * (1.0 - b * f) / denom;
    let pi_b = b * (1.0 - a * f) / denom;
    let lf1_a = pi_a + (a - b) * f * pi_a * pi_b - a;
    Ok(TwoMinerSolution {
        alpha_a,
        d_over_t,
        f,
        pi_a,
        pi_b,
        w_ab: pi_a,
        w_ba: pi_b,
        lf1_a,
        lf1_b: -lf1_a,
    })
}
