//! Network model: miners, hashrate shares, pairwise propagation delays,
//! mean block interval and the tie-breaking rule.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_distr::{Distribution, Exp};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::matrix::SquareMatrix;

/// Absolute tolerance on `Σ alpha = 1`.
pub const HASHRATE_SUM_TOLERANCE: f64 = 1e-12;

/// Hashrate shares used by the bundled ten-miner configuration. Loosely follows
/// the pool concentration of Bitcoin; override via a config file.
pub const DEFAULT_TEN_MINER_ALPHA: [f64; 10] =
    [0.30, 0.22, 0.12, 0.10, 0.08, 0.06, 0.05, 0.04, 0.02, 0.01];

/// Dense miner index in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinerId(pub usize);

impl MinerId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-miner hashrate proportions. Every entry is positive and the entries sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HashrateDistribution(Vec<f64>);

impl HashrateDistribution {
    /// Validates and, when the sum is within [`HASHRATE_SUM_TOLERANCE`] of one,
    /// renormalizes exactly. Anything further off is rejected.
    pub fn new(alpha: Vec<f64>) -> Result<Self, ModelError> {
        for (index, &value) in alpha.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositiveHashrate { index, value });
            }
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > HASHRATE_SUM_TOLERANCE {
            return Err(ModelError::HashrateSum { sum });
        }
        Ok(Self(alpha.into_iter().map(|a| a / sum).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for HashrateDistribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// End-to-end block propagation times between ordered miner pairs,
/// `t[i][j]` being the time for a block mined by `i` to reach `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DelayMatrix(SquareMatrix);

impl DelayMatrix {
    pub fn new(t: SquareMatrix) -> Result<Self, ModelError> {
        for (i, j, value) in t.iter() {
            if i == j {
                if value != 0.0 {
                    return Err(ModelError::NonZeroSelfDelay { index: i, value });
                }
            } else if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidDelay {
                    from: i,
                    to: j,
                    value,
                });
            }
        }
        Ok(Self(t))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(ModelError::DimensionMismatch {
                what: "delay matrix row",
                expected: n,
                got: bad.len(),
            });
        }
        // Square by construction after the check above.
        Self::new(SquareMatrix::from_rows(rows).expect("square rows"))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[(from, to)]
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.dim();
        if n < 2 {
            return 0.0;
        }
        let sum: f64 = self
            .0
            .iter()
            .filter(|(i, j, _)| i != j)
            .map(|(_, _, v)| v)
            .sum();
        sum / (n * (n - 1)) as f64
    }
}

/// Policy a miner uses to choose between two chain tips of equal height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreakRule {
    /// Keep the tip that arrived first.
    FirstSeen,
    /// Flip a fair coin.
    Random,
    /// Take the tip with the later generation timestamp.
    LastGenerated,
}

impl TieBreakRule {
    pub const ALL: [TieBreakRule; 3] = [
        TieBreakRule::FirstSeen,
        TieBreakRule::Random,
        TieBreakRule::LastGenerated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TieBreakRule::FirstSeen => "first-seen",
            TieBreakRule::Random => "random",
            TieBreakRule::LastGenerated => "last-generated",
        }
    }
}

impl fmt::Display for TieBreakRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieBreakRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TieBreakRule::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown tie-breaking rule {s:?}"))
    }
}

/// A validated network. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkModel {
    alpha: HashrateDistribution,
    delays: DelayMatrix,
    mean_interval: f64,
    rule: TieBreakRule,
}

impl NetworkModel {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &HashrateDistribution {
        &self.alpha
    }

    pub fn delays(&self) -> &DelayMatrix {
        &self.delays
    }

    /// Mean block generation interval `T`.
    pub fn mean_interval(&self) -> f64 {
        self.mean_interval
    }

    pub fn rule(&self) -> TieBreakRule {
        self.rule
    }

    pub fn miners(&self) -> impl Iterator<Item = MinerId> {
        (0..self.n()).map(MinerId)
    }

    /// Same network under a different tie-breaking rule.
    pub fn with_rule(&self, rule: TieBreakRule) -> Self {
        Self {
            rule,
            ..self.clone()
        }
    }

    /// Same network with a replaced delay matrix of matching dimension.
    pub fn with_delays(&self, delays: DelayMatrix) -> Result<Self, ModelError> {
        build_model(
            self.n(),
            self.alpha.as_slice().to_vec(),
            delays,
            self.mean_interval,
            self.rule,
        )
    }
}

pub fn build_model(
    n: usize,
    alpha: Vec<f64>,
    delays: DelayMatrix,
    mean_interval: f64,
    rule: TieBreakRule,
) -> Result<NetworkModel, ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewMiners(n));
    }
    if alpha.len() != n {
        return Err(ModelError::DimensionMismatch {
            what: "alpha",
            expected: n,
            got: alpha.len(),
        });
    }
    if delays.dim() != n {
        return Err(ModelError::DimensionMismatch {
            what: "delay matrix",
            expected: n,
            got: delays.dim(),
        });
    }
    if !(mean_interval.is_finite() && mean_interval > 0.0) {
        return Err(ModelError::NonPositiveInterval(mean_interval));
    }
    Ok(NetworkModel {
        alpha: HashrateDistribution::new(alpha)?,
        delays,
        mean_interval,
        rule,
    })
}

/// Every ordered pair of distinct miners gets delay `d`.
pub fn constant_delays(n: usize, d: f64) -> Result<DelayMatrix, ModelError> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(ModelError::InvalidDelayParameter {
            requirement: "finite and non-negative",
            value: d,
        });
    }
    DelayMatrix::new(SquareMatrix::from_fn(
        n,
        |i, j| if i == j { 0.0 } else { d },
    ))
}

/// Independent exponential delays with mean `mean_d`, drawn row-major from a
/// PCG stream seeded with `seed`. With `symmetric`, only the upper triangle
/// is drawn and mirrored.
pub fn exponential_delays(
    n: usize,
    mean_d: f64,
    seed: u64,
    symmetric: bool,
) -> Result<DelayMatrix, ModelError> {
    if !(mean_d.is_finite() && mean_d > 0.0) {
        return Err(ModelError::InvalidDelayParameter {
            requirement: "positive and finite",
            value: mean_d,
        });
    }
    let exp = Exp::new(1.0 / mean_d).map_err(|_| ModelError::InvalidDelayParameter {
        requirement: "positive and finite",
        value: mean_d,
    })?;
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut t = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j || (symmetric && j < i) {
                continue;
            }
            let v = exp.sample(&mut rng);
            t[(i, j)] = v;
            if symmetric {
                t[(j, i)] = v;
            }
        }
    }
    DelayMatrix::new(t)
}
