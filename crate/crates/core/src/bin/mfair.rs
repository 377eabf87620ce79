use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mining_fairness::calc::{
    baseline_fairness, model_fairness, two_miner_closed_form, DEFAULT_EPSILON, DEFAULT_MAX_ITER,
};
use mining_fairness::forkscale::{impact_sweep, write_sweep_csv};
use mining_fairness::harness::{self, compare_config, sweep, CompareOptions};
use mining_fairness::sim::{self, empirical_fairness, SimConfig, SimResult, DEFAULT_TRIM_HEIGHTS};
use mining_fairness::{HarnessError, ModelConfig, TieBreakRule};

#[derive(Parser)]
#[command(
    name = "mfair",
    version,
    about = "Mining fairness of proof-of-work networks under forks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Network model JSON file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (defaults to csv for sweep/forkscale, json otherwise)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Simulation seed(s), comma separated
    #[arg(
        long,
        alias = "seeds",
        global = true,
        value_delimiter = ',',
        default_value = "1"
    )]
    seed: Vec<u64>,

    /// Measured rounds per simulation
    #[arg(long, global = true, default_value_t = 10_000_000)]
    rounds: u64,

    /// Convergence threshold of the round-start-rate iteration
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Model-based fairness of the configured network
    Calc {
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: u64,
    },
    /// Fairness assuming round start rates equal hashrate shares
    Baseline,
    /// Run the network simulator
    Simulate {
        /// Override the configured tie-breaking rule
        #[arg(long)]
        rule: Option<TieBreakRule>,
        /// Heights simulated past the measured rounds
        #[arg(long, default_value_t = DEFAULT_TRIM_HEIGHTS)]
        trim: u64,
        /// Also write the round-scale histogram as CSV to this file
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Compare model, baseline and simulation over seeds
    Compare {
        #[arg(long, default_value_t = DEFAULT_TRIM_HEIGHTS)]
        trim: u64,
        /// Keep the configured exponential delay matrix instead of redrawing it per seed
        #[arg(long)]
        fixed_delays: bool,
    },
    /// Compare over a grid of d/T values and tie-breaking rules
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.04,0.07,0.1")]
        grid: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "first-seen,random,last-generated"
        )]
        rules: Vec<TieBreakRule>,
        #[arg(long, default_value_t = DEFAULT_TRIM_HEIGHTS)]
        trim: u64,
        #[arg(long)]
        fixed_delays: bool,
    },
    /// Impacts of one-, two- and three-or-more-block rounds over a d/T grid
    Forkscale {
        /// Explicit grid; defaults to 0..=1 in steps of 0.01
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Closed-form two-miner solution
    TwoMiner {
        #[arg(long)]
        alpha_a: f64,
        #[arg(long)]
        d_over_t: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    seed: u64,
    rounds: u64,
    trim_heights: u64,
    result: &'a SimResult,
}

#[derive(Serialize)]
struct SimMinerRow {
    miner: usize,
    round_starts: u64,
    mainchain_blocks: u64,
    empirical_pi: f64,
    empirical_r: f64,
    lf1: f64,
    lf2: f64,
}

#[derive(Serialize)]
struct SeedErrorRow {
    seed: u64,
    err_pi: f64,
    err_lf1: f64,
    err_lf2: f64,
    baseline_err_lf1: f64,
    baseline_err_lf2: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            let obj = ErrorObject {
                error: ErrorBody {
                    kind: err.kind(),
                    message: err.to_string(),
                },
            };
            eprintln!(
                "{}",
                serde_json::to_string(&obj).expect("error object serializes")
            );
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(err: &HarnessError) -> bool {
    let io = match err {
        HarnessError::Io(e) => Some(e),
        HarnessError::Csv(e) => match e.kind() {
            csv::ErrorKind::Io(e) => Some(e),
            _ => None,
        },
        HarnessError::Config(e) => return e.io_error_kind() == Some(io::ErrorKind::BrokenPipe),
        _ => None,
    };
    io.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

fn load_config(cli: &Cli) -> Result<ModelConfig, HarnessError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::InvalidInput("--config <file> is required".into()))?;
    ModelConfig::load(path)
}

fn open_out(cli: &Cli) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(mut out: Box<dyn Write>, value: &T) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(out: Box<dyn Write>, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn first_seed(cli: &Cli) -> Result<u64, HarnessError> {
    match cli.seed.as_slice() {
        [seed] => Ok(*seed),
        _ => Err(HarnessError::InvalidInput(
            "simulate takes exactly one seed".into(),
        )),
    }
}

fn compare_options(cli: &Cli, trim: u64, fixed_delays: bool) -> CompareOptions {
    CompareOptions {
        rounds: cli.rounds,
        epsilon: cli.epsilon,
        trim_heights: trim,
        resample_delays: !fixed_delays,
    }
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Calc { max_iter } => {
            let model = load_config(cli)?.build()?;
            let report = model_fairness(&model, cli.epsilon, *max_iter)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(open_out(cli)?, &report),
                Format::Csv => report.write_csv(open_out(cli)?),
            }
        }
        Command::Baseline => {
            let model = load_config(cli)?.build()?;
            let report = baseline_fairness(&model);
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(open_out(cli)?, &report),
                Format::Csv => report.write_csv(open_out(cli)?),
            }
        }
        Command::Simulate {
            rule,
            trim,
            histogram,
        } => {
            let mut cfg = load_config(cli)?;
            if let Some(rule) = rule {
                cfg = cfg.with_rule(*rule);
            }
            let model = cfg.build()?;
            let seed = first_seed(cli)?;
            let result =
                sim::run(&SimConfig::new(model.clone(), cli.rounds, seed).with_trim(*trim));
            if let Some(path) = histogram {
                result.write_histogram_csv(BufWriter::new(File::create(path)?))?;
            }
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(
                    open_out(cli)?,
                    &SimulateOutput {
                        seed,
                        rounds: cli.rounds,
                        trim_heights: *trim,
                        result: &result,
                    },
                ),
                Format::Csv => {
                    let fair = empirical_fairness(&result, model.alpha().as_slice())?;
                    let rows: Vec<_> = (0..model.n())
                        .map(|i| SimMinerRow {
                            miner: i,
                            round_starts: result.round_starts[i],
                            mainchain_blocks: result.mainchain_blocks[i],
                            empirical_pi: result.empirical_pi[i],
                            empirical_r: result.empirical_r[i],
                            lf1: fair.lf1[i],
                            lf2: fair.lf2[i],
                        })
                        .collect();
                    write_rows(open_out(cli)?, &rows)
                }
            }
        }
        Command::Compare { trim, fixed_delays } => {
            let cfg = load_config(cli)?;
            let report =
                compare_config(&cfg, &cli.seed, &compare_options(cli, *trim, *fixed_delays))?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(open_out(cli)?, &report),
                Format::Csv => {
                    let rows: Vec<_> = report
                        .seeds
                        .iter()
                        .enumerate()
                        .map(|(k, &seed)| SeedErrorRow {
                            seed,
                            err_pi: report.err_pi[k],
                            err_lf1: report.err_lf1[k],
                            err_lf2: report.err_lf2[k],
                            baseline_err_lf1: report.baseline_err_lf1[k],
                            baseline_err_lf2: report.baseline_err_lf2[k],
                        })
                        .collect();
                    write_rows(open_out(cli)?, &rows)
                }
            }
        }
        Command::Sweep {
            grid,
            rules,
            trim,
            fixed_delays,
        } => {
            let cfg = load_config(cli)?;
            let rows = sweep(
                &cfg,
                grid,
                rules,
                &cli.seed,
                &compare_options(cli, *trim, *fixed_delays),
            )?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(open_out(cli)?, &rows),
                Format::Csv => harness::write_sweep_csv(&rows, open_out(cli)?),
            }
        }
        Command::Forkscale { grid } => {
            let grid = grid
                .clone()
                .unwrap_or_else(|| (0..=100).map(|k| k as f64 / 100.0).collect());
            let rows = impact_sweep(&grid)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(open_out(cli)?, &rows),
                Format::Csv => write_sweep_csv(&rows, open_out(cli)?),
            }
        }
        Command::TwoMiner { alpha_a, d_over_t } => {
            let s = two_miner_closed_form(*alpha_a, *d_over_t)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => write_json(open_out(cli)?, &s),
                Format::Csv => write_rows(open_out(cli)?, &[s]),
            }
        }
    }
}
