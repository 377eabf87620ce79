//! Reward rates and local/global mining fairness.

use std::io::Write;

use serde::Serialize;

use crate::calc::matrices::ProbMatrices;
use crate::calc::stationary::{stationary_distribution, RoundStartRates};
use crate::error::{CalcError, HarnessError};
use crate::matrix::SquareMatrix;
use crate::model::NetworkModel;

/// Round start rates, reward rates and fairness measures for one network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub pi: Vec<f64>,
    pub reward_rates: Vec<f64>,
    pub lf1: Vec<f64>,
    pub lf2: Vec<f64>,
    pub gf1: f64,
    pub gf2: f64,
    pub iterations: u64,
    pub residual: f64,
}

#[derive(Serialize)]
struct ReportRow {
    miner: usize,
    pi: f64,
    reward_rate: f64,
    lf1: f64,
    lf2: f64,
    gf1: f64,
    gf2: f64,
}

impl FairnessReport {
    /// Assembles a report from round start rates and reward rates.
    pub fn assemble(
        rates: RoundStartRates,
        reward_rates: Vec<f64>,
        alpha: &[f64],
    ) -> Result<Self, CalcError> {
        let (lf1, lf2) = local_fairness(&reward_rates, alpha)?;
        let (gf1, gf2) = global_fairness(&lf1, &lf2);
        Ok(Self {
            pi: rates.pi,
            reward_rates,
            lf1,
            lf2,
            gf1,
            gf2,
            iterations: rates.iterations,
            residual: rates.residual,
        })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// One CSV row per miner; the global measures repeat on every row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for i in 0..self.n() {
            w.serialize(ReportRow {
                miner: i,
                pi: self.pi[i],
                reward_rate: self.reward_rates[i],
                lf1: self.lf1[i],
                lf2: self.lf2[i],
                gf1: self.gf1,
                gf2: self.gf2,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Block reward rate of each miner:
///
/// `r_i = π_i (1 − Σ_j α_j F_ij + Σ_j α_j F_ij W_ij) + Σ_j π_j α_i F_ji (1 − W_ji)`
pub fn reward_rates(pi: &[f64], alpha: &[f64], f: &SquareMatrix, w: &SquareMatrix) -> Vec<f64> {
    let n = alpha.len();
    (0..n)
        .map(|i| {
            // Stale share of i's own rounds: Σ_j α_j F_ij (1 − W_ij).
            let lost: f64 = (0..n)
                .map(|j| alpha[j] * f[(i, j)] * (1.0 - w[(i, j)]))
                .sum();
            let gained: f64 = (0..n)
                .map(|j| pi[j] * alpha[i] * f[(j, i)] * (1.0 - w[(j, i)]))
                .sum();
            pi[i] * (1.0 - lost) + gained
        })
        .collect()
}

/// `(LF1, LF2)` with `LF1_i = r_i − α_i` and `LF2_i = LF1_i / α_i`.
pub fn local_fairness(r: &[f64], alpha: &[f64]) -> Result<(Vec<f64>, Vec<f64>), CalcError> {
    if r.len() != alpha.len() {
        return Err(CalcError::LengthMismatch(r.len(), alpha.len()));
    }
    if let Some(i) = alpha.iter().position(|&a| a == 0.0) {
        return Err(CalcError::ZeroHashrate(i));
    }
    let lf1: Vec<f64> = r.iter().zip(alpha).map(|(r, a)| r - a).collect();
    let lf2 = lf1.iter().zip(alpha).map(|(l, a)| l / a).collect();
    Ok((lf1, lf2))
}

/// `GF1` sums the positive profits; `GF2` is the spread of profit rates.
pub fn global_fairness(lf1: &[f64], lf2: &[f64]) -> (f64, f64) {
    let gf1 = lf1.iter().filter(|&&v| v > 0.0).sum();
    let gf2 = if lf2.is_empty() {
        0.0
    } else {
        let max = lf2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = lf2.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    };
    (gf1, gf2)
}

/// Model-based fairness: round start rates from the fork-aware chain, then
/// reward rates and fairness.
pub fn model_fairness(
    model: &NetworkModel,
    epsilon: f64,
    max_iter: u64,
) -> Result<FairnessReport, CalcError> {
    let alpha = model.alpha().as_slice();
    let ProbMatrices { f, w } = ProbMatrices::from_model(model);
    let rates = stationary_distribution(alpha, &f, epsilon, max_iter)?;
    let r = reward_rates(&rates.pi, alpha, &f, &w);
    FairnessReport::assemble(rates, r, alpha)
}

/// The same pipeline with round start rates taken to equal hashrate shares.
pub fn baseline_fairness(model: &NetworkModel) -> FairnessReport {
    let alpha = model.alpha().as_slice();
    let ProbMatrices { f, w } = ProbMatrices::from_model(model);
    let rates = RoundStartRates {
        pi: alpha.to_vec(),
        residual: 0.0,
        iterations: 0,
    };
    let r = reward_rates(alpha, alpha, &f, &w);
    FairnessReport::assemble(rates, r, alpha).expect("validated model has positive hashrates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calc::matrices::fork_prob;
    use crate::calc::stationary::{DEFAULT_EPSILON, DEFAULT_MAX_ITER};
    use crate::model::{build_model, constant_delays, TieBreakRule};

    fn two_miner(alpha_a: f64, d_over_t: f64) -> NetworkModel {
        build_model(
            2,
            vec![alpha_a, 1.0 - alpha_a],
            constant_delays(2, d_over_t * 600.0).unwrap(),
            600.0,
            TieBreakRule::FirstSeen,
        )
        .unwrap()
    }

    #[test]
    fn forkless_rewards_equal_round_start_rates() {
        let pi = [0.2, 0.3, 0.5];
        let alpha = [0.1, 0.4, 0.5];
        let w = SquareMatrix::from_fn(3, |_, _| 0.7);
        let r = reward_rates(&pi, &alpha, &SquareMatrix::zeros(3), &w);
        assert_eq!(r, pi.to_vec());
    }

    #[test]
    fn reward_rates_match_two_miner_algebra() {
        let (a, b) = (0.3, 0.7);
        let f = fork_prob(0.1, 1.0);
        let pa = a * (1.0 - b * f) / (1.0 - 2.0 * a * f * b);
        let pb = 1.0 - pa;
        let fm = SquareMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { f });
        // Two-miner W equals the round start rates.
        let w = SquareMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => pa,
            (1, 0) => pb,
            _ => 0.0,
        });
        let r = reward_rates(&[pa, pb], &[a, b], &fm, &w);
        let lf1_a = pa + (a - b) * f * pa * pb - a;
        assert!((r[0] - (lf1_a + a)).abs() < 1e-12);
        assert!((r[1] - (b - lf1_a)).abs() < 1e-12);
    }

    #[test]
    fn local_fairness_values() {
        let (lf1, lf2) = local_fairness(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert_eq!(lf1, vec![0.0, 0.0]);
        assert_eq!(lf2, vec![0.0, 0.0]);

        let (lf1, lf2) = local_fairness(&[0.35, 0.65], &[0.3, 0.7]).unwrap();
        assert!((lf1[0] - 0.05).abs() < 1e-12 && (lf1[1] + 0.05).abs() < 1e-12);
        assert!((lf2[0] - 0.1667).abs() < 1e-4 && (lf2[1] + 0.0714).abs() < 1e-4);
        assert!(lf1.iter().sum::<f64>().abs() < 1e-12);

        assert_eq!(
            local_fairness(&[0.5, 0.5], &[1.0, 0.0]),
            Err(CalcError::ZeroHashrate(1))
        );
        assert_eq!(
            local_fairness(&[1.0], &[0.5, 0.5]),
            Err(CalcError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn global_fairness_values() {
        let (gf1, _) = global_fairness(&[0.02, -0.01, -0.01], &[0.0; 3]);
        assert!((gf1 - 0.02).abs() < 1e-15);
        let (_, gf2) = global_fairness(&[0.0; 3], &[0.1, -0.05, 0.02]);
        assert!((gf2 - 0.15).abs() < 1e-15);
        assert_eq!(global_fairness(&[0.0; 4], &[0.0; 4]), (0.0, 0.0));
        assert_eq!(global_fairness(&[-0.1, 0.0], &[0.0, 0.0]).0, 0.0);
    }

    #[test]
    fn symmetric_two_miners_are_perfectly_fair() {
        let rep = model_fairness(&two_miner(0.5, 0.3), DEFAULT_EPSILON, DEFAULT_MAX_ITER).unwrap();
        for v in rep.lf1.iter().chain(&rep.lf2) {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn two_miner_profit_of_the_smaller_miner() {
        let rep = model_fairness(&two_miner(0.3, 0.1), DEFAULT_EPSILON, DEFAULT_MAX_ITER).unwrap();
        assert!((rep.lf1[0] + 0.0161905).abs() < 1e-6, "{}", rep.lf1[0]);
        assert!((rep.pi[0] - 0.291674).abs() < 1e-6);
        assert!((rep.gf1 - rep.lf1[1]).abs() < 1e-15);
    }

    #[test]
    fn baseline_agrees_without_forks_and_differs_with_them() {
        let m = two_miner(0.3, 0.0);
        assert_eq!(
            baseline_fairness(&m).lf1,
            model_fairness(&m, DEFAULT_EPSILON, DEFAULT_MAX_ITER)
                .unwrap()
                .lf1
        );
        let m = two_miner(0.3, 0.1);
        let base = baseline_fairness(&m);
        let prop = model_fairness(&m, DEFAULT_EPSILON, DEFAULT_MAX_ITER).unwrap();
        assert!((base.lf1[0] - prop.lf1[0]).abs() > 1e-4);
        assert!((base.reward_rates.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(base.lf1.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn csv_has_one_row_per_miner() {
        let rep = model_fairness(&two_miner(0.3, 0.1), DEFAULT_EPSILON, DEFAULT_MAX_ITER).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "miner,pi,reward_rate,lf1,lf2,gf1,gf2");
        assert_eq!(lines.len(), 3);
        let json = serde_json::to_value(&rep).unwrap();
        for key in [
            "pi",
            "reward_rates",
            "lf1",
            "lf2",
            "gf1",
            "gf2",
            "iterations",
            "residual",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
