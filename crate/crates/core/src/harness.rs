//! Model vs. simulation vs. baseline comparison over seeds and parameter grids.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::calc::{
    baseline_fairness, model_fairness, FairnessReport, DEFAULT_EPSILON, DEFAULT_MAX_ITER,
};
use crate::config::ModelConfig;
use crate::error::HarnessError;
use crate::model::{NetworkModel, TieBreakRule};
use crate::sim::{self, empirical_fairness, SimConfig, SimResult, DEFAULT_TRIM_HEIGHTS};

/// `‖observed − predicted‖₂ / ‖observed‖₂`.
pub fn relative_error(observed: &[f64], predicted: &[f64]) -> Result<f64, HarnessError> {
    if observed.len() != predicted.len() {
        return Err(HarnessError::LengthMismatch(
            observed.len(),
            predicted.len(),
        ));
    }
    let norm = observed.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(HarnessError::ZeroObserved);
    }
    let dist = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum::<f64>()
        .sqrt();
    Ok(dist / norm)
}

/// Mean and sample standard deviation (`n − 1` denominator, 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub rounds: u64,
    pub epsilon: f64,
    pub trim_heights: u64,
    /// Draw a fresh exponential delay matrix for each seed.
    pub resample_delays: bool,
}

impl CompareOptions {
    pub fn new(rounds: u64) -> Self {
        Self {
            rounds,
            epsilon: DEFAULT_EPSILON,
            trim_heights: DEFAULT_TRIM_HEIGHTS,
            resample_delays: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub err_pi: Stats,
    pub err_lf1: Stats,
    pub err_lf2: Stats,
    pub baseline_err_lf1: Stats,
    pub baseline_err_lf2: Stats,
}

/// Per-seed reports and relative errors. Index `k` of every list belongs to
/// `seeds[k]`; with fixed delays the model and baseline lists repeat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rounds: u64,
    pub seeds: Vec<u64>,
    pub model_reports: Vec<FairnessReport>,
    pub baseline_reports: Vec<FairnessReport>,
    pub sim_reports: Vec<FairnessReport>,
    pub sim_results: Vec<SimResult>,
    pub err_pi: Vec<f64>,
    pub err_lf1: Vec<f64>,
    pub err_lf2: Vec<f64>,
    pub baseline_err_lf1: Vec<f64>,
    pub baseline_err_lf2: Vec<f64>,
    pub summary: ErrorSummary,
}

struct SeedOutcome {
    model: FairnessReport,
    baseline: FairnessReport,
    sim_report: FairnessReport,
    sim: SimResult,
    errs: [f64; 5],
}

fn one_seed(
    model: &NetworkModel,
    seed: u64,
    opts: &CompareOptions,
) -> Result<SeedOutcome, HarnessError> {
    let prop = model_fairness(model, opts.epsilon, DEFAULT_MAX_ITER)?;
    let base = baseline_fairness(model);
    let sim =
        sim::run(&SimConfig::new(model.clone(), opts.rounds, seed).with_trim(opts.trim_heights));
    let emp = empirical_fairness(&sim, model.alpha().as_slice())?;
    let errs = [
        relative_error(&emp.pi, &prop.pi)?,
        relative_error(&emp.lf1, &prop.lf1)?,
        relative_error(&emp.lf2, &prop.lf2)?,
        relative_error(&emp.lf1, &base.lf1)?,
        relative_error(&emp.lf2, &base.lf2)?,
    ];
    Ok(SeedOutcome {
        model: prop,
        baseline: base,
        sim_report: emp,
        sim,
        errs,
    })
}

fn assemble(seeds: &[u64], opts: &CompareOptions, outcomes: Vec<SeedOutcome>) -> ComparisonReport {
    let col = |k: usize| outcomes.iter().map(|o| o.errs[k]).collect::<Vec<_>>();
    let (err_pi, err_lf1, err_lf2, b1, b2) = (col(0), col(1), col(2), col(3), col(4));
    let summary = ErrorSummary {
        err_pi: Stats::of(&err_pi),
        err_lf1: Stats::of(&err_lf1),
        err_lf2: Stats::of(&err_lf2),
        baseline_err_lf1: Stats::of(&b1),
        baseline_err_lf2: Stats::of(&b2),
    };
    let mut report = ComparisonReport {
        rounds: opts.rounds,
        seeds: seeds.to_vec(),
        model_reports: Vec::with_capacity(seeds.len()),
        baseline_reports: Vec::with_capacity(seeds.len()),
        sim_reports: Vec::with_capacity(seeds.len()),
        sim_results: Vec::with_capacity(seeds.len()),
        err_pi,
        err_lf1,
        err_lf2,
        baseline_err_lf1: b1,
        baseline_err_lf2: b2,
        summary,
    };
    for o in outcomes {
        report.model_reports.push(o.model);
        report.baseline_reports.push(o.baseline);
        report.sim_reports.push(o.sim_report);
        report.sim_results.push(o.sim);
    }
    report
}

fn check_seeds(seeds: &[u64]) -> Result<(), HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::InvalidInput(
            "at least one seed is required".into(),
        ));
    }
    Ok(())
}

/// Compares a fixed network against simulations under each seed.
pub fn compare(
    model: &NetworkModel,
    seeds: &[u64],
    opts: &CompareOptions,
) -> Result<ComparisonReport, HarnessError> {
    check_seeds(seeds)?;
    let outcomes = seeds
        .par_iter()
        .map(|&s| one_seed(model, s, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(seeds, opts, outcomes))
}

/// Compares a configured network; exponential delays are redrawn per seed
/// (seeded by the simulation seed) unless `opts.resample_delays` is off.
pub fn compare_config(
    cfg: &ModelConfig,
    seeds: &[u64],
    opts: &CompareOptions,
) -> Result<ComparisonReport, HarnessError> {
    check_seeds(seeds)?;
    let resample = opts.resample_delays && cfg.has_random_delays();
    let fixed = if resample { None } else { Some(cfg.build()?) };
    let outcomes = seeds
        .par_iter()
        .map(|&s| {
            let model = match &fixed {
                Some(m) => m.clone(),
                None => cfg.build_with_delay_seed(Some(s))?,
            };
            one_seed(&model, s, opts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(seeds, opts, outcomes))
}

/// One `(d/T, rule)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d_over_t: f64,
    pub rule: TieBreakRule,
    pub seeds: usize,
    pub rounds: u64,
    pub err_pi_mean: f64,
    pub err_pi_sample_sd: f64,
    pub err_lf1_mean: f64,
    pub err_lf1_sample_sd: f64,
    pub err_lf2_mean: f64,
    pub err_lf2_sample_sd: f64,
    pub baseline_err_lf1_mean: f64,
    pub baseline_err_lf1_sample_sd: f64,
    pub baseline_err_lf2_mean: f64,
    pub baseline_err_lf2_sample_sd: f64,
}

impl SweepRow {
    pub fn from_report(d_over_t: f64, rule: TieBreakRule, report: &ComparisonReport) -> Self {
        let s = &report.summary;
        Self {
            d_over_t,
            rule,
            seeds: report.seeds.len(),
            rounds: report.rounds,
            err_pi_mean: s.err_pi.mean,
            err_pi_sample_sd: s.err_pi.sd,
            err_lf1_mean: s.err_lf1.mean,
            err_lf1_sample_sd: s.err_lf1.sd,
            err_lf2_mean: s.err_lf2.mean,
            err_lf2_sample_sd: s.err_lf2.sd,
            baseline_err_lf1_mean: s.baseline_err_lf1.mean,
            baseline_err_lf1_sample_sd: s.baseline_err_lf1.sd,
            baseline_err_lf2_mean: s.baseline_err_lf2.mean,
            baseline_err_lf2_sample_sd: s.baseline_err_lf2.sd,
        }
    }
}

/// Runs [`compare_config`] for every `(d/T, rule)` pair, grid-major.
pub fn sweep(
    template: &ModelConfig,
    d_over_t_grid: &[f64],
    rules: &[TieBreakRule],
    seeds: &[u64],
    opts: &CompareOptions,
) -> Result<Vec<SweepRow>, HarnessError> {
    if d_over_t_grid.is_empty() || rules.is_empty() {
        return Err(HarnessError::InvalidInput(
            "sweep needs at least one d/T value and one rule".into(),
        ));
    }
    let mut rows = Vec::with_capacity(d_over_t_grid.len() * rules.len());
    for &x in d_over_t_grid {
        if !(x.is_finite() && x >= 0.0) {
            return Err(HarnessError::InvalidInput(format!(
                "d/T must be non-negative, got {x}"
            )));
        }
        for &rule in rules {
            let cfg = template.with_d_over_t(x)?.with_rule(rule);
            let report = compare_config(&cfg, seeds, opts)?;
            rows.push(SweepRow::from_report(x, rule, &report));
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
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
    use crate::model::{build_model, constant_delays};

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(&[0.1, -0.1], &[0.1, -0.1]).unwrap(), 0.0);
        assert!((relative_error(&[0.1, -0.3], &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let e = relative_error(&[0.03, -0.03], &[0.02, -0.02]).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            relative_error(&[0.0, 0.0], &[0.1, 0.1]),
            Err(HarnessError::ZeroObserved)
        ));
        assert!(relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sample_statistics() {
        assert_eq!(Stats::of(&[0.4]), Stats { mean: 0.4, sd: 0.0 });
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-15);
        // Σ (x − 2.5)² = 5, over n − 1 = 3.
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn small_model(d: f64) -> NetworkModel {
        build_model(
            3,
            vec![0.2, 0.3, 0.5],
            constant_delays(3, d).unwrap(),
            600.0,
            TieBreakRule::FirstSeen,
        )
        .unwrap()
    }

    #[test]
    fn compare_is_reproducible_and_shaped_by_seed_count() {
        let opts = CompareOptions::new(20_000);
        let a = compare(&small_model(60.0), &[3, 1, 2], &opts).unwrap();
        let b = compare(&small_model(60.0), &[3, 1, 2], &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.err_lf1.len(), 3);
        assert_eq!(a.sim_reports.len(), 3);
        assert!(a
            .err_lf1
            .iter()
            .chain(&a.baseline_err_lf2)
            .all(|e| *e >= 0.0));
        let single = compare(&small_model(60.0), &[7], &opts).unwrap();
        assert_eq!(single.summary.err_lf1.sd, 0.0);
        assert!(compare(&small_model(60.0), &[], &opts).is_err());
    }

    #[test]
    fn forkless_network_has_no_lf_signal() {
        // LF1 vanishes in the model; the simulated LF1 is pure noise, so only
        // the round start rate is compared.
        let opts = CompareOptions::new(50_000);
        let r = compare(&small_model(0.0), &[1], &opts).unwrap();
        assert!(r.err_pi[0] < 0.02, "{:?}", r.err_pi);
        assert_eq!(r.model_reports[0].lf1, vec![0.0; 3]);
    }

    #[test]
    fn single_cell_sweep_matches_compare() {
        let cfg = ModelConfig::two_miner(0.3, 0.1, TieBreakRule::FirstSeen);
        let opts = CompareOptions::new(20_000);
        let rows = sweep(&cfg, &[0.1], &[TieBreakRule::FirstSeen], &[1, 2], &opts).unwrap();
        let report = compare_config(&cfg, &[1, 2], &opts).unwrap();
        assert_eq!(
            rows,
            vec![SweepRow::from_report(0.1, TieBreakRule::FirstSeen, &report)]
        );
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d_over_t,rule,seeds,rounds,err_pi_mean,err_pi_sample_sd,"));
        assert!(sweep(&cfg, &[], &[TieBreakRule::FirstSeen], &[1], &opts).is_err());
    }
}
