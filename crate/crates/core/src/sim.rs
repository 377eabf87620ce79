//! Event-driven proof-of-work network simulator.
//!
//! Blocks are generated by one network-wide Poisson process of mean interval
//! `T`; the owner of each block is drawn in proportion to hashrate. A block
//! mined by `i` reaches `j` after `delays[i][j]`. Miners follow the longest
//! chain and break equal-height ties with the model's rule, except that a
//! miner whose tip is its own block keeps mining on it.
//!
//! A miner's tip only matters at the instant it mines, so arrivals are queued
//! per miner and applied in arrival order just before that miner's next
//! block. Old blocks are folded into per-miner counters once they are deeper
//! than a retention window, which keeps memory flat for long runs.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1};
use rand_pcg::Pcg64Mcg;
use serde::Serialize;

use crate::calc::{FairnessReport, RoundStartRates};
use crate::error::CalcError;
use crate::model::{MinerId, NetworkModel, TieBreakRule};

pub const DEFAULT_TRIM_HEIGHTS: u64 = 100;
pub const DEFAULT_WINDOW_HEIGHTS: u64 = 1000;

// Keeps the simulation stream apart from delay sampling under the same seed.
const SIM_STREAM: u64 = 0x5eed_51b0_c4a1_d00d;
const NO_PARENT: u64 = u64::MAX;
const GENESIS_MINER: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: NetworkModel,
    /// Heights `1..=rounds` are measured.
    pub rounds: u64,
    pub seed: u64,
    /// Extra heights simulated past `rounds` so the measured tail is settled.
    pub trim_heights: u64,
    /// Depth below the tallest block after which blocks are folded away.
    pub window_heights: u64,
}

impl SimConfig {
    pub fn new(model: NetworkModel, rounds: u64, seed: u64) -> Self {
        Self {
            model,
            rounds,
            seed,
            trim_heights: DEFAULT_TRIM_HEIGHTS,
            window_heights: DEFAULT_WINDOW_HEIGHTS,
        }
    }

    pub fn with_trim(mut self, trim_heights: u64) -> Self {
        self.trim_heights = trim_heights;
        self
    }
}

/// A generated block. Genesis has no parent and no miner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub id: u64,
    pub parent: Option<u64>,
    pub height: u64,
    pub miner: Option<MinerId>,
    pub born_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub round_starts: Vec<u64>,
    pub mainchain_blocks: Vec<u64>,
    pub total_rounds: u64,
    /// Blocks generated over the whole run, including the trimmed tail.
    pub total_blocks: u64,
    /// Blocks per measured round → number of rounds.
    pub scale_histogram: BTreeMap<u64, u64>,
    /// Measured single-block rounds, per round starter.
    pub single_block_rounds: Vec<u64>,
    /// Measured rounds of three or more blocks, per round starter.
    pub three_plus_rounds: Vec<u64>,
    pub empirical_pi: Vec<f64>,
    pub empirical_r: Vec<f64>,
}

impl SimResult {
    /// Fraction of measured rounds holding at least `k` blocks.
    pub fn fraction_at_least(&self, k: u64) -> f64 {
        let hits: u64 = self.scale_histogram.range(k..).map(|(_, c)| c).sum();
        hits as f64 / self.total_rounds as f64
    }

    pub fn write_histogram_csv<W: std::io::Write>(
        &self,
        out: W,
    ) -> Result<(), crate::error::HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scale", "rounds"])?;
        for (scale, count) in &self.scale_histogram {
            w.write_record([scale.to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fairness measures applied to simulated rates.
pub fn empirical_fairness(result: &SimResult, alpha: &[f64]) -> Result<FairnessReport, CalcError> {
    if result.empirical_r.len() != alpha.len() {
        return Err(CalcError::LengthMismatch(
            result.empirical_r.len(),
            alpha.len(),
        ));
    }
    FairnessReport::assemble(
        RoundStartRates {
            pi: result.empirical_pi.clone(),
            residual: 0.0,
            iterations: 0,
        },
        result.empirical_r.clone(),
        alpha,
    )
}

pub fn run(config: &SimConfig) -> SimResult {
    Engine::new(config, false).run().0
}

/// Like [`run`] but also returns every generated block, genesis first.
/// Memory grows with the run; meant for small runs and inspection.
pub fn run_traced(config: &SimConfig) -> (SimResult, Vec<Block>) {
    let (result, blocks) = Engine::new(config, true).run();
    (result, blocks.expect("tracing enabled"))
}

#[derive(Debug, Clone, Copy)]
struct Tip {
    id: u64,
    height: u64,
    born: f64,
    miner: u32,
}

#[derive(Debug, Clone, Copy)]
struct Arrival {
    at: f64,
    tip: Tip,
}

#[derive(Debug, Clone, Copy)]
struct BlockRec {
    parent: u64,
    height: u64,
    miner: u32,
}

struct MinerView {
    head: Tip,
    inbox: Vec<Arrival>,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    rng: Pcg64Mcg,
    n: usize,
    cumulative: Vec<f64>,
    delays: Vec<Vec<f64>>,
    miners: Vec<MinerView>,
    scratch: Vec<Arrival>,

    store: VecDeque<BlockRec>,
    base_id: u64,
    anchor_id: u64,
    finalized_height: u64,

    trace: Option<Vec<Block>>,

    round_starts: Vec<u64>,
    mainchain: Vec<u64>,
    single_block_rounds: Vec<u64>,
    three_plus_rounds: Vec<u64>,
    histogram: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, traced: bool) -> Self {
        let model = &cfg.model;
        let n = model.n();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = model
            .alpha()
            .as_slice()
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect();
        cumulative[n - 1] = f64::INFINITY;
        let genesis = Tip {
            id: 0,
            height: 0,
            born: 0.0,
            miner: GENESIS_MINER,
        };
        let mut store = VecDeque::new();
        store.push_back(BlockRec {
            parent: NO_PARENT,
            height: 0,
            miner: GENESIS_MINER,
        });
        let trace = traced.then(|| {
            vec![Block {
                id: 0,
                parent: None,
                height: 0,
                miner: None,
                born_at: 0.0,
            }]
        });
        Self {
            cfg,
            rng: Pcg64Mcg::seed_from_u64(cfg.seed ^ SIM_STREAM),
            n,
            cumulative,
            delays: model.delays().matrix().rows(),
            miners: (0..n)
                .map(|_| MinerView {
                    head: genesis,
                    inbox: Vec::new(),
                })
                .collect(),
            scratch: Vec::new(),
            store,
            base_id: 0,
            anchor_id: 0,
            finalized_height: 0,
            trace,
            round_starts: vec![0; n],
            mainchain: vec![0; n],
            single_block_rounds: vec![0; n],
            three_plus_rounds: vec![0; n],
            histogram: Vec::new(),
        }
    }

    fn run(mut self) -> (SimResult, Option<Vec<Block>>) {
        let rounds = self.cfg.rounds.max(1);
        let last_height = rounds + self.cfg.trim_heights;
        let window = self.cfg.window_heights.max(1);
        let mean_interval = self.cfg.model.mean_interval();

        let mut now = 0.0;
        let mut next_id = 1u64;
        let mut max_height = 0u64;
        // Blocks and starter per height, from height `open_base` up to `max_height`.
        let mut open_rounds: VecDeque<(u64, usize)> = VecDeque::new();
        let mut open_base = 1u64;
        let tip_id = loop {
            let gap: f64 = Exp1.sample(&mut self.rng);
            now += mean_interval * gap;
            let u: f64 = self.rng.gen();
            let owner = self
                .cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(self.n - 1);

            self.settle(owner, now);
            let parent = self.miners[owner].head;
            let tip = Tip {
                id: next_id,
                height: parent.height + 1,
                born: now,
                miner: owner as u32,
            };
            next_id += 1;
            self.store.push_back(BlockRec {
                parent: parent.id,
                height: tip.height,
                miner: tip.miner,
            });
            if let Some(trace) = &mut self.trace {
                trace.push(Block {
                    id: tip.id,
                    parent: Some(parent.id),
                    height: tip.height,
                    miner: Some(MinerId(owner)),
                    born_at: now,
                });
            }
            self.miners[owner].head = tip;
            let row = &self.delays[owner];
            for (j, view) in self.miners.iter_mut().enumerate() {
                if j != owner {
                    view.inbox.push(Arrival {
                        at: now + row[j],
                        tip,
                    });
                }
            }

            assert!(
                tip.height >= open_base,
                "block at height {} is below the round window",
                tip.height
            );
            if tip.height > max_height {
                max_height = tip.height;
                open_rounds.push_back((1, owner));
                if max_height <= rounds {
                    self.round_starts[owner] += 1;
                }
                if max_height == last_height {
                    break tip.id;
                }
                while max_height - open_base > window {
                    let (blocks, starter) = open_rounds.pop_front().expect("open round");
                    if open_base <= rounds {
                        self.close_round(blocks, starter);
                    }
                    open_base += 1;
                }
                if self.trace.is_none() && max_height >= self.finalized_height + 2 * window {
                    self.fold(tip.id, max_height - window, rounds);
                }
            } else {
                open_rounds[(tip.height - open_base) as usize].0 += 1;
            }
        };
        for (blocks, starter) in open_rounds {
            if open_base <= rounds {
                self.close_round(blocks, starter);
            }
            open_base += 1;
        }
        let anchor = self.walk_to(tip_id, self.finalized_height, rounds);
        assert_eq!(
            anchor, self.anchor_id,
            "main chain reorganised below the retention window"
        );

        let total = rounds as f64;
        let mut scale_histogram = BTreeMap::new();
        for (scale, &count) in self.histogram.iter().enumerate() {
            if count > 0 {
                scale_histogram.insert(scale as u64, count);
            }
        }
        let result = SimResult {
            empirical_pi: self
                .round_starts
                .iter()
                .map(|&c| c as f64 / total)
                .collect(),
            empirical_r: self.mainchain.iter().map(|&c| c as f64 / total).collect(),
            round_starts: self.round_starts,
            mainchain_blocks: self.mainchain,
            total_rounds: rounds,
            total_blocks: next_id - 1,
            scale_histogram,
            single_block_rounds: self.single_block_rounds,
            three_plus_rounds: self.three_plus_rounds,
        };
        (result, self.trace)
    }

    fn close_round(&mut self, blocks: u64, starter: usize) {
        let b = blocks as usize;
        if self.histogram.len() <= b {
            self.histogram.resize(b + 1, 0);
        }
        self.histogram[b] += 1;
        if blocks == 1 {
            self.single_block_rounds[starter] += 1;
        } else if blocks >= 3 {
            self.three_plus_rounds[starter] += 1;
        }
    }

    /// Applies every arrival at miner `m` up to time `t`.
    fn settle(&mut self, m: usize, t: f64) {
        let rule = self.cfg.model.rule();
        let view = &mut self.miners[m];
        let mut best = view.head.height;
        let mut any = false;
        for a in &view.inbox {
            if a.at <= t && a.tip.height >= best {
                best = a.tip.height;
                any = true;
            }
        }
        if any {
            // Only arrivals at the final height can matter: any higher block
            // replaces whatever was chosen at lower heights.
            self.scratch.clear();
            self.scratch.extend(
                view.inbox
                    .iter()
                    .filter(|a| a.at <= t && a.tip.height == best)
                    .copied(),
            );
            if self.scratch.len() > 1 {
                self.scratch
                    .sort_by(|x, y| x.at.total_cmp(&y.at).then(x.tip.id.cmp(&y.tip.id)));
            }
            let mut rest = &self.scratch[..];
            if view.head.height < best {
                view.head = rest[0].tip;
                rest = &rest[1..];
            }
            for c in rest {
                let head = view.head;
                if head.miner == m as u32 {
                    break;
                }
                let adopt = match rule {
                    TieBreakRule::FirstSeen => false,
                    TieBreakRule::Random => self.rng.gen::<bool>(),
                    TieBreakRule::LastGenerated => c.tip.born > head.born,
                };
                if adopt {
                    view.head = c.tip;
                }
            }
        }
        view.inbox.retain(|a| a.at > t);
    }

    fn block(&self, id: u64) -> BlockRec {
        assert!(
            id >= self.base_id,
            "block {id} was folded away; the main chain reorganised below the retention window"
        );
        self.store[(id - self.base_id) as usize]
    }

    /// Walks from `from` down to `stop_height`, counting main-chain blocks at
    /// heights `1..=rounds`. Returns the id of the block at `stop_height`.
    fn walk_to(&mut self, from: u64, stop_height: u64, rounds: u64) -> u64 {
        let mut id = from;
        loop {
            let b = self.block(id);
            if b.height == stop_height {
                return id;
            }
            if b.height <= rounds {
                self.mainchain[b.miner as usize] += 1;
            }
            id = b.parent;
        }
    }

    /// Settles heights up to `anchor_height` along the ancestry of `tip`.
    fn fold(&mut self, tip: u64, anchor_height: u64, rounds: u64) {
        let mut id = tip;
        while self.block(id).height > anchor_height {
            id = self.block(id).parent;
        }
        let new_anchor = id;
        let reached = self.walk_to(new_anchor, self.finalized_height, rounds);
        assert_eq!(
            reached, self.anchor_id,
            "main chain reorganised below the retention window"
        );
        self.anchor_id = new_anchor;
        self.finalized_height = anchor_height;
        while self.base_id < new_anchor {
            self.store.pop_front();
            self.base_id += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, constant_delays, exponential_delays};

    fn model(alpha: Vec<f64>, d: f64, rule: TieBreakRule) -> NetworkModel {
        let n = alpha.len();
        build_model(n, alpha, constant_delays(n, d).unwrap(), 600.0, rule).unwrap()
    }

    #[test]
    fn zero_delay_never_forks() {
        let alpha = vec![0.2, 0.3, 0.5];
        let cfg = SimConfig::new(
            model(alpha.clone(), 0.0, TieBreakRule::FirstSeen),
            200_000,
            3,
        );
        let r = run(&cfg);
        assert_eq!(r.scale_histogram, BTreeMap::from([(1, 200_000)]));
        assert_eq!(r.empirical_r, r.empirical_pi);
        for (i, a) in alpha.iter().enumerate() {
            let se = (a * (1.0 - a) / 200_000.0).sqrt();
            assert!((r.empirical_pi[i] - a).abs() < 3.0 * se);
        }
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let m = build_model(
            4,
            vec![0.1, 0.2, 0.3, 0.4],
            exponential_delays(4, 30.0, 5, false).unwrap(),
            600.0,
            TieBreakRule::Random,
        )
        .unwrap();
        let a = run(&SimConfig::new(m.clone(), 50_000, 9));
        let b = run(&SimConfig::new(m.clone(), 50_000, 9));
        assert_eq!(a, b);
        assert_ne!(a, run(&SimConfig::new(m, 50_000, 10)));
    }

    #[test]
    fn result_invariants_hold() {
        for rule in TieBreakRule::ALL {
            let m = model(vec![0.15, 0.25, 0.6], 120.0, rule);
            let r = run(&SimConfig::new(m, 30_000, 1));
            assert_eq!(r.round_starts.iter().sum::<u64>(), r.total_rounds);
            assert_eq!(r.mainchain_blocks.iter().sum::<u64>(), r.total_rounds);
            assert_eq!(r.scale_histogram.values().sum::<u64>(), r.total_rounds);
            assert!((r.empirical_pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((r.empirical_r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(r.fraction_at_least(2) > 0.0);
        }
    }

    #[test]
    fn histogram_counts_blocks_per_height() {
        // Large delays make miners extend heights well behind the tip.
        let m = model(vec![0.3, 0.3, 0.4], 900.0, TieBreakRule::Random);
        let mut cfg = SimConfig::new(m, 20_000, 6);
        cfg.window_heights = 200;
        let (r, blocks) = run_traced(&cfg);
        let mut per_height = vec![0u64; 20_001];
        for b in blocks.iter().skip(1).filter(|b| b.height <= 20_000) {
            per_height[b.height as usize] += 1;
        }
        let mut expected = BTreeMap::new();
        for &c in &per_height[1..] {
            *expected.entry(c).or_insert(0u64) += 1;
        }
        assert_eq!(r.scale_histogram, expected);
        assert!(r.fraction_at_least(3) > 0.0);
    }

    #[test]
    fn folding_does_not_change_results() {
        let m = model(vec![0.3, 0.3, 0.4], 90.0, TieBreakRule::LastGenerated);
        let mut small = SimConfig::new(m, 40_000, 2);
        small.window_heights = 50;
        let folded = run(&small);
        let (traced, _) = run_traced(&small);
        assert_eq!(folded, traced);
    }

    #[test]
    fn traced_blocks_form_a_tree() {
        let m = model(vec![0.2, 0.3, 0.5], 200.0, TieBreakRule::Random);
        let (r, blocks) = run_traced(&SimConfig::new(m, 5_000, 4));
        assert_eq!(blocks.len() as u64, r.total_blocks + 1);
        assert_eq!(blocks.iter().filter(|b| b.parent.is_none()).count(), 1);
        for (idx, b) in blocks.iter().enumerate() {
            assert_eq!(b.id, idx as u64);
            if let Some(p) = b.parent {
                let parent = &blocks[p as usize];
                assert!(p < b.id);
                assert_eq!(b.height, parent.height + 1);
                assert!(b.born_at > parent.born_at);
            }
        }
    }

    #[test]
    fn without_trim_the_last_round_is_still_counted() {
        let m = model(vec![0.5, 0.5], 30.0, TieBreakRule::FirstSeen);
        let r = run(&SimConfig::new(m, 1_000, 8).with_trim(0));
        assert_eq!(r.scale_histogram.values().sum::<u64>(), 1_000);
        assert_eq!(r.mainchain_blocks.iter().sum::<u64>(), 1_000);
    }

    #[test]
    fn histogram_csv() {
        let m = model(vec![0.5, 0.5], 0.0, TieBreakRule::FirstSeen);
        let r = run(&SimConfig::new(m, 100, 1));
        let mut buf = Vec::new();
        r.write_histogram_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scale,rounds\n1,100\n");
    }
}
