//! Monte-Carlo regret harness.
//!
//! Replication `i` draws its environment and learner randomness from ChaCha8
//! stream `2i` of the master seed and its genie episodes (direct estimator)
//! from stream `2i + 1`. Replications run in fixed-size blocks whose
//! statistics are merged in block order, so traces do not depend on the
//! number of worker threads.

mod stats;
mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use stats::Moments;
pub use trace::{normalize_by_logk, RegretRow, RegretTrace, TraceMeta, CSV_HEADER};

use crate::error::{Error, Result};
use crate::model::{BanditInstance, NextState};
use crate::policy::{Learner, PolicySpec};
use crate::scalar::Scalar;
use crate::solver::{GridOptions, ValueSolution};

/// Default master seed.
pub const DEFAULT_SEED: u64 = 20_240_229;
/// Default per-episode step cap.
pub const DEFAULT_EPISODE_CAP: u64 = 1_000_000;
/// Replications per aggregation block.
pub const BLOCK_SIZE: usize = 32;
const BLOCKS_PER_GROUP: usize = 64;

/// How per-episode regret is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Sum of `V*(S_t) − Q*(S_t, A_t)` along the learner's own trajectory.
    #[default]
    Decomposition,
    /// Reward of an independent always-best-arm episode from the same first
    /// state minus the learner's reward.
    Direct,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Decomposition => "decomposition",
            Estimator::Direct => "direct",
        })
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decomposition" => Ok(Estimator::Decomposition),
            "direct" => Ok(Estimator::Direct),
            _ => Err(Error::Invalid(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<S> {
    pub instance: BanditInstance<S>,
    pub policy: PolicySpec<S>,
    /// Name written to trace metadata; defaults to the policy kind.
    pub label: String,
    /// Episodes `K` per replication.
    pub episodes: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub episode_cap: u64,
    pub estimator: Estimator,
    /// Grid used when the instance has general states.
    pub grid: GridOptions,
}

impl<S: Scalar> SimConfig<S> {
    /// Config with `K = 2·10⁴`, `10⁴` runs, the default seed and cap.
    pub fn new(instance: BanditInstance<S>, policy: PolicySpec<S>) -> Self {
        Self {
            label: policy.kind.name().to_string(),
            instance,
            policy,
            episodes: 20_000,
            runs: 10_000,
            master_seed: DEFAULT_SEED,
            episode_cap: DEFAULT_EPISODE_CAP,
            estimator: Estimator::Decomposition,
            grid: GridOptions::default(),
        }
    }

    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes;
        self
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.runs == 0 || self.episode_cap == 0 {
            return Err(Error::Invalid(
                "episodes, runs and episode_cap must all be at least 1".into(),
            ));
        }
        self.policy.clone().resolve(&self.instance).map(|_| ())
    }

    /// Short SHA-256 digest of everything that determines the output.
    pub fn config_hash(&self) -> String {
        let text = format!(
            "{:?}|{:?}|{}|{}|{}|{}|{}|{:?}",
            self.instance,
            self.policy,
            self.episodes,
            self.runs,
            self.master_seed,
            self.episode_cap,
            self.estimator,
            self.grid
        );
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn solution(&self) -> Result<Option<ValueSolution<S>>> {
        match self.estimator {
            Estimator::Decomposition => ValueSolution::solve(&self.instance, self.grid).map(Some),
            Estimator::Direct => Ok(None),
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Episode and step totals of one or more replications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunTotals {
    pub truncations: u64,
    pub episodes: u64,
    pub steps: u64,
}

impl RunTotals {
    fn add(&mut self, other: RunTotals) {
        self.truncations += other.truncations;
        self.episodes += other.episodes;
        self.steps += other.steps;
    }
}

/// Per-episode cumulative regret of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub cumulative: Vec<f64>,
    pub totals: RunTotals,
}

struct Context<'a, S> {
    config: &'a SimConfig<S>,
    solution: Option<&'a ValueSolution<S>>,
}

impl<S: Scalar> Context<'_, S> {
    /// Plays one replication, reporting `(k, cumulative regret)` after every episode.
    fn replicate(&self, learner: &mut Learner<S>, index: u64, mut sink: impl FnMut(usize, f64)) -> Result<RunTotals> {
        let cfg = self.config;
        let inst = &cfg.instance;
        let cap = cfg.episode_cap;
        let mut rng = stream(cfg.master_seed, 2 * index);
        let mut genie_rng = stream(cfg.master_seed, 2 * index + 1);
        let mut totals = RunTotals::default();
        let mut cumulative = 0.0;
        for k in 0..cfg.episodes {
            let first = inst.initial_state().sample(&mut rng);
            let mut state = first;
            let mut steps = 0u64;
            let mut reward = 0u64;
            let mut regret = 0.0;
            loop {
                let arm = learner.select(state, &mut rng)?;
                if arm != 0 {
                    if let Some(sol) = self.solution {
                        regret += sol.gap_unchecked(state, arm).as_f64();
                    }
                }
                let out = inst.step_unchecked(state, arm, &mut rng);
                learner.observe(state, arm, out.reward, out.next);
                reward += u64::from(out.reward);
                steps += 1;
                match out.next {
                    NextState::Terminal => break,
                    NextState::Live(s) => state = s,
                }
                if steps >= cap {
                    totals.truncations += 1;
                    break;
                }
            }
            totals.episodes += 1;
            totals.steps += steps;
            if cfg.estimator == Estimator::Direct {
                let (genie, truncated) = genie_episode(inst, first, cap, &mut genie_rng);
                totals.truncations += u64::from(truncated);
                regret = genie as f64 - reward as f64;
            }
            cumulative += regret;
            sink(k, cumulative);
        }
        Ok(totals)
    }
}

/// Total reward of one always-best-arm episode from `first`, and whether it hit the cap.
fn genie_episode<S: Scalar>(inst: &BanditInstance<S>, first: S, cap: u64, rng: &mut ChaCha8Rng) -> (u64, bool) {
    let mut state = first;
    let mut reward = 0u64;
    for _ in 0..cap {
        let out = inst.step_unchecked(state, 0, rng);
        reward += u64::from(out.reward);
        match out.next {
            NextState::Terminal => return (reward, false),
            NextState::Live(s) => state = s,
        }
    }
    (reward, true)
}

/// Cumulative regret after each of the `K` episodes of replication `index`.
pub fn run_trial<S: Scalar>(config: &SimConfig<S>, index: u64) -> Result<TrialResult> {
    config.validate()?;
    let solution = config.solution()?;
    let ctx = Context {
        config,
        solution: solution.as_ref(),
    };
    let mut learner = Learner::new(config.policy.clone(), &config.instance)?;
    let mut cumulative = vec![0.0; config.episodes];
    let totals = ctx.replicate(&mut learner, index, |k, c| cumulative[k] = c)?;
    Ok(TrialResult { cumulative, totals })
}

/// Runs every replication and aggregates mean, standard deviation and 95%
/// half-width of the cumulative regret at each episode.
pub fn monte_carlo<S: Scalar>(config: &SimConfig<S>) -> Result<RegretTrace> {
    monte_carlo_with_progress(config, |_, _| {})
}

/// [`monte_carlo`] calling `progress(done, total)` after each group of blocks.
pub fn monte_carlo_with_progress<S: Scalar>(
    config: &SimConfig<S>,
    progress: impl Fn(usize, usize),
) -> Result<RegretTrace> {
    config.validate()?;
    let solution = config.solution()?;
    let ctx = Context {
        config,
        solution: solution.as_ref(),
    };
    let k = config.episodes;
    let blocks = config.runs.div_ceil(BLOCK_SIZE);
    let mut moments = vec![Moments::default(); k];
    let mut totals = RunTotals::default();
    let mut start = 0;
    while start < blocks {
        let end = (start + BLOCKS_PER_GROUP).min(blocks);
        let results: Vec<Result<(Vec<Moments>, RunTotals)>> = (start..end)
            .into_par_iter()
            .map(|b| {
                let mut learner = Learner::new(config.policy.clone(), &config.instance)?;
                let mut block = vec![Moments::default(); k];
                let mut block_totals = RunTotals::default();
                for i in b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(config.runs) {
                    learner.reset();
                    let t = ctx.replicate(&mut learner, i as u64, |k, c| block[k].push(c))?;
                    block_totals.add(t);
                }
                Ok((block, block_totals))
            })
            .collect();
        for r in results {
            let (block, t) = r?;
            for (acc, m) in moments.iter_mut().zip(&block) {
                acc.merge(m);
            }
            totals.add(t);
        }
        progress((end * BLOCK_SIZE).min(config.runs), config.runs);
        start = end;
    }
    if totals.truncations > 0 {
        log::warn!(
            "{}: {} episodes hit the {}-step cap",
            config.label,
            totals.truncations,
            config.episode_cap
        );
    }
    let rows = moments
        .iter()
        .enumerate()
        .map(|(i, m)| RegretRow {
            k: i as u64 + 1,
            mean: m.mean,
            std: m.std(),
            ci95: m.ci95(),
            over_logk: None,
        })
        .collect();
    let meta = TraceMeta {
        policy: config.label.clone(),
        config_hash: config.config_hash(),
        seed: config.master_seed,
        runs: config.runs as u64,
        estimator: config.estimator.to_string(),
        truncations: totals.truncations,
        total_episodes: totals.episodes,
        total_steps: totals.steps,
    };
    Ok(normalize_by_logk(RegretTrace { rows, meta }))
}

/// Final-episode agreement check between the two regret estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub episodes: u64,
    pub decomposition_mean: f64,
    pub decomposition_ci: f64,
    pub direct_mean: f64,
    pub direct_ci: f64,
    /// `|difference| ≤ sum of the two half-widths`.
    pub agree: bool,
}

impl EstimatorReport {
    pub fn difference(&self) -> f64 {
        self.decomposition_mean - self.direct_mean
    }
}

/// Seed offset giving the direct estimator an independent set of streams.
pub const DIRECT_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Runs `config` under both estimators with independent seeds and compares
/// the mean cumulative regret at `k = K`. Meant for small `K` (≤ 10³).
pub fn cross_validate_estimators<S: Scalar>(config: &SimConfig<S>) -> Result<EstimatorReport> {
    if config.runs < 2 {
        return Err(Error::Invalid("estimator comparison needs at least two runs".into()));
    }
    if config.episodes > 1000 {
        return Err(Error::Invalid(format!(
            "estimator comparison is meant for K ≤ 1000, got {}",
            config.episodes
        )));
    }
    let decomposition = monte_carlo(&config.clone().with_estimator(Estimator::Decomposition))?;
    let direct = monte_carlo(
        &config
            .clone()
            .with_estimator(Estimator::Direct)
            .with_seed(config.master_seed.wrapping_add(DIRECT_SEED_OFFSET)),
    )?;
    let (a, b) = (
        decomposition.rows.last().expect("K ≥ 1"),
        direct.rows.last().expect("K ≥ 1"),
    );
    let (ca, cb) = (a.ci95.unwrap_or(0.0), b.ci95.unwrap_or(0.0));
    Ok(EstimatorReport {
        episodes: a.k,
        decomposition_mean: a.mean,
        decomposition_ci: ca,
        direct_mean: b.mean,
        direct_ci: cb,
        agree: (a.mean - b.mean).abs() <= ca + cb,
    })
}
