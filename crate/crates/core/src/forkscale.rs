//! How often rounds hold one, two, or three-or-more blocks.
//!
//! With `x = T_W/T` the expected number of blocks mined by miners still
//! unaware of the round's first block, the probability of three or more blocks
//! is bounded by `P(Poisson(x) ≥ 2) = 1 − (1 + x) e^{−x}`.

use std::io::Write;

use serde::Serialize;

use crate::error::{CalcError, HarnessError};
use crate::model::{MinerId, NetworkModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForkScaleImpacts {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundScaleProbs {
    /// `P(C = 1)`: the round holds a single block.
    pub p_one: f64,
    /// `P(C ≠ 1)`.
    pub p_fork: f64,
    /// Upper bound on `P(C ≥ 3)`.
    pub p_three_plus_upper: f64,
    /// Lower bound on `P(C = 2)`.
    pub p_two_lower: f64,
    /// Hashrate-weighted propagation time of the starter's block.
    pub t_weighted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactRow {
    pub d_over_t: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i3_over_i1_plus_i2: f64,
    pub i3_over_i2: f64,
}

/// `e^x − 1 − x` without cancellation near zero.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Taylor series; 12 terms leave a remainder below 1e-16 relative.
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..15 {
            term *= x / k as f64;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// `1 − (1 + x) e^{−x}`, i.e. `P(Poisson(x) ≥ 2)`.
pub fn poisson_two_or_more(x: f64) -> f64 {
    (-x).exp() * expm1_minus_x(x)
}

/// `T_W,i = Σ_j α_j T_ij`.
pub fn weighted_prop_time(model: &NetworkModel, i: MinerId) -> f64 {
    let alpha = model.alpha().as_slice();
    let d = model.delays();
    (0..model.n()).map(|j| alpha[j] * d.get(i.0, j)).sum()
}

pub fn round_scale_probs(model: &NetworkModel, i: MinerId) -> RoundScaleProbs {
    let alpha = model.alpha().as_slice();
    let t = model.mean_interval();
    let d = model.delays();
    let p_fork: f64 = (0..model.n())
        .map(|j| alpha[j] * -(-d.get(i.0, j) / t).exp_m1())
        .sum();
    let p_one = 1.0 - p_fork;
    let t_weighted = weighted_prop_time(model, i);
    let p_three_plus_upper = poisson_two_or_more(t_weighted / t);
    RoundScaleProbs {
        p_one,
        p_fork,
        p_three_plus_upper,
        p_two_lower: p_fork - p_three_plus_upper,
        t_weighted,
    }
}

/// Impacts of one-, two- and three-or-more-block rounds at a common delay.
pub fn impacts(d_over_t: f64) -> Result<ForkScaleImpacts, CalcError> {
    if !(d_over_t.is_finite() && d_over_t >= 0.0) {
        return Err(CalcError::InvalidArgument {
            name: "d_over_t",
            requirement: "finite and non-negative",
            value: d_over_t,
        });
    }
    let x = d_over_t;
    let i1 = (-x).exp();
    let i2 = x * i1;
    let i3 = poisson_two_or_more(x);
    Ok(ForkScaleImpacts { i1, i2, i3 })
}

impl ImpactRow {
    pub fn at(d_over_t: f64) -> Result<Self, CalcError> {
        let ForkScaleImpacts { i1, i2, i3 } = impacts(d_over_t)?;
        // Both ratios are taken as 0 where I2 vanishes (d/T = 0).
        let i3_over_i2 = if d_over_t == 0.0 {
            0.0
        } else {
            expm1_minus_x(d_over_t) / d_over_t
        };
        Ok(Self {
            d_over_t,
            i1,
            i2,
            i3,
            i3_over_i1_plus_i2: expm1_minus_x(d_over_t) / (1.0 + d_over_t),
            i3_over_i2,
        })
    }
}

pub fn impact_sweep(grid: &[f64]) -> Result<Vec<ImpactRow>, CalcError> {
    grid.iter().map(|&x| ImpactRow::at(x)).collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[ImpactRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, constant_delays, DelayMatrix, TieBreakRule};

    #[test]
    fn series_matches_direct_formula_away_from_zero() {
        for x in [0.05f64, 0.09, 0.0999999] {
            let direct = 1.0 - (1.0 + x) * (-x).exp();
            assert!((poisson_two_or_more(x) - direct).abs() < 1e-15);
        }
        assert_eq!(poisson_two_or_more(0.0), 0.0);
    }

    #[test]
    fn impacts_at_zero_and_sum_to_one() {
        assert_eq!(
            impacts(0.0).unwrap(),
            ForkScaleImpacts {
                i1: 1.0,
                i2: 0.0,
                i3: 0.0
            }
        );
        for k in 0..=400 {
            let x = k as f64 * 0.025;
            let ForkScaleImpacts { i1, i2, i3 } = impacts(x).unwrap();
            assert!((i1 + i2 + i3 - 1.0).abs() < 1e-12);
            assert!([i1, i2, i3].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(impacts(-0.1).is_err());
    }

    #[test]
    fn ratio_rows_reproduce_published_values() {
        for (x, i3_over_i2) in [(0.01, 0.0050167084), (0.1, 0.0517091), (0.5, 0.297442)] {
            let row = ImpactRow::at(x).unwrap();
            assert!(((row.i3_over_i2 - i3_over_i2) / i3_over_i2).abs() < 1e-4);
        }
        // Ratios to I1 + I2 computed from the same formulas.
        for (x, v) in [(0.01, 4.967e-5), (0.1, 4.701e-3), (0.5, 9.914e-2)] {
            let row = ImpactRow::at(x).unwrap();
            assert!(
                ((row.i3_over_i1_plus_i2 - v) / v).abs() < 1e-3,
                "{x}: {row:?}"
            );
        }
    }

    #[test]
    fn zero_grid_point_row() {
        let rows = impact_sweep(&[0.0]).unwrap();
        assert_eq!(
            rows,
            vec![ImpactRow {
                d_over_t: 0.0,
                i1: 1.0,
                i2: 0.0,
                i3: 0.0,
                i3_over_i1_plus_i2: 0.0,
                i3_over_i2: 0.0
            }]
        );
    }

    #[test]
    fn relative_impact_grows_with_delay() {
        let grid: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
        let rows = impact_sweep(&grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].i3_over_i2 > w[0].i3_over_i2);
        }
    }

    #[test]
    fn sweep_csv_columns() {
        let mut buf = Vec::new();
        write_sweep_csv(&impact_sweep(&[0.0, 0.1]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "d_over_t,i1,i2,i3,i3_over_i1_plus_i2,i3_over_i2"
        );
        assert_eq!(text.lines().count(), 3);
    }

    fn model(alpha: Vec<f64>, delays: DelayMatrix) -> NetworkModel {
        build_model(alpha.len(), alpha, delays, 600.0, TieBreakRule::FirstSeen).unwrap()
    }

    #[test]
    fn weighted_propagation_time() {
        let m = model(vec![0.2, 0.3, 0.5], constant_delays(3, 10.0).unwrap());
        assert!((weighted_prop_time(&m, MinerId(1)) - 7.0).abs() < 1e-12);
        let m = model(vec![0.2, 0.3, 0.5], constant_delays(3, 0.0).unwrap());
        assert_eq!(weighted_prop_time(&m, MinerId(0)), 0.0);
        let m = model(
            vec![0.3, 0.7],
            DelayMatrix::from_rows(&[vec![0.0, 10.0], vec![4.0, 0.0]]).unwrap(),
        );
        assert!((weighted_prop_time(&m, MinerId(0)) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn round_scale_bounds() {
        let m = model(vec![0.2, 0.3, 0.5], constant_delays(3, 0.0).unwrap());
        let p = round_scale_probs(&m, MinerId(2));
        assert_eq!((p.p_one, p.p_fork, p.p_three_plus_upper), (1.0, 0.0, 0.0));

        let m = model(vec![0.2, 0.3, 0.5], constant_delays(3, 60.0).unwrap());
        for i in 0..3 {
            let p = round_scale_probs(&m, MinerId(i));
            let a = [0.2, 0.3, 0.5][i];
            assert!((p.p_one - (a + (1.0 - a) * (-0.1f64).exp())).abs() < 1e-12);
            assert!((p.p_one + p.p_fork - 1.0).abs() < 1e-12);
            assert!(p.p_two_lower <= p.p_fork && p.p_three_plus_upper >= 0.0);
        }
    }

    #[test]
    fn bounds_vanish_as_delays_shrink() {
        let mut last = f64::INFINITY;
        for k in 0..12 {
            let d = 60.0 / 4f64.powi(k);
            let m = model(vec![0.4, 0.6], constant_delays(2, d).unwrap());
            let p = round_scale_probs(&m, MinerId(0));
            assert!(p.p_three_plus_upper < last);
            last = p.p_three_plus_upper;
        }
        assert!(last < 1e-13);
    }
}
