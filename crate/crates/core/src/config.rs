//! JSON model configuration.
//!
//! ```json
//! { "n": 2, "alpha": [0.3, 0.7], "delays": {"constant": 60.0},
//!   "mean_interval": 600.0, "rule": "first-seen" }
//! ```
//!
//! `delays` is one of `{"constant": d}`,
//! `{"exponential": {"mean": d, "seed": s, "symmetric": false}}`, or an explicit
//! row-major matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, ModelError};
use crate::model::{
    build_model, constant_delays, exponential_delays, DelayMatrix, NetworkModel, TieBreakRule,
    DEFAULT_TEN_MINER_ALPHA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialSpec {
    pub mean: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelaySpec {
    Constant { constant: f64 },
    Exponential { exponential: ExponentialSpec },
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub delays: DelaySpec,
    pub mean_interval: f64,
    pub rule: TieBreakRule,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The bundled ten-miner network with exponential delays of mean `d_over_t · T`.
    pub fn ten_miner_default(d_over_t: f64, rule: TieBreakRule) -> Self {
        Self {
            n: DEFAULT_TEN_MINER_ALPHA.len(),
            alpha: DEFAULT_TEN_MINER_ALPHA.to_vec(),
            delays: DelaySpec::Exponential {
                exponential: ExponentialSpec {
                    mean: d_over_t * 600.0,
                    seed: 0,
                    symmetric: false,
                },
            },
            mean_interval: 600.0,
            rule,
        }
    }

    /// Two miners with a constant delay of `d_over_t · T`.
    pub fn two_miner(alpha_a: f64, d_over_t: f64, rule: TieBreakRule) -> Self {
        Self {
            n: 2,
            alpha: vec![alpha_a, 1.0 - alpha_a],
            delays: DelaySpec::Constant {
                constant: d_over_t * 600.0,
            },
            mean_interval: 600.0,
            rule,
        }
    }

    pub fn build(&self) -> Result<NetworkModel, ModelError> {
        self.build_with_delay_seed(None)
    }

    /// Builds the model; `delay_seed` overrides the exponential sampling seed.
    pub fn build_with_delay_seed(
        &self,
        delay_seed: Option<u64>,
    ) -> Result<NetworkModel, ModelError> {
        let delays = match &self.delays {
            DelaySpec::Constant { constant } => constant_delays(self.n, *constant)?,
            DelaySpec::Exponential { exponential } => exponential_delays(
                self.n,
                exponential.mean,
                delay_seed.unwrap_or(exponential.seed),
                exponential.symmetric,
            )?,
            DelaySpec::Explicit(rows) => DelayMatrix::from_rows(rows)?,
        };
        build_model(
            self.n,
            self.alpha.clone(),
            delays,
            self.mean_interval,
            self.rule,
        )
    }

    pub fn has_random_delays(&self) -> bool {
        matches!(self.delays, DelaySpec::Exponential { .. })
    }

    /// Copy whose delay scale is `d_over_t · T`: the constant delay or the
    /// exponential mean. Explicit matrices have no single scale and are refused.
    pub fn with_d_over_t(&self, d_over_t: f64) -> Result<Self, HarnessError> {
        let d = d_over_t * self.mean_interval;
        let delays = match &self.delays {
            DelaySpec::Constant { .. } => DelaySpec::Constant { constant: d },
            DelaySpec::Exponential { exponential } => DelaySpec::Exponential {
                exponential: ExponentialSpec {
                    mean: d,
                    ..exponential.clone()
                },
            },
            DelaySpec::Explicit(_) => {
                return Err(HarnessError::InvalidInput(
                    "cannot rescale an explicit delay matrix to a d/T value".into(),
                ))
            }
        };
        Ok(Self {
            delays,
            ..self.clone()
        })
    }

    pub fn with_rule(&self, rule: TieBreakRule) -> Self {
        Self {
            rule,
            ..self.clone()
        }
    }
}
