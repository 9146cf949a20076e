use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{RunConfig, Variant};
use crate::env::{HpoEnv, RewardModel};
use crate::error::{Error, Result};
use crate::objectives::Evaluator;
use crate::replay::{augment_hierarchical, ReplayBuffer, Transition};
use crate::sac::{AgentNetworks, SacAgent, SacConfig};

/// Label used for random-search reports.
pub const RANDOM_SEARCH: &str = "random-search";

/// One line of per-episode metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    /// 1-based.
    pub episode: usize,
    pub avg_reward: f64,
    pub best_loss: f64,
    pub best_lambda: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Warnings {
    /// Action coordinates outside `[-1, 1]` that were clamped.
    pub clamped_actions: usize,
    /// Mixing levels that drew partners with replacement because the
    /// buffer was still smaller than the level.
    pub replacement_draws: usize,
    /// Objective evaluations that diverged and returned the sentinel loss.
    pub diverged_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub label: String,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub best_loss: Option<f64>,
    pub best_lambda: Vec<f64>,
    pub evaluations: usize,
    pub updates: usize,
    pub buffer_len: usize,
    pub warnings: Warnings,
}

impl RunReport {
    pub fn empty(label: &str, seed: u64) -> Self {
        Self {
            label: label.into(),
            seed,
            records: Vec::new(),
            best_loss: None,
            best_lambda: Vec::new(),
            evaluations: 0,
            updates: 0,
            buffer_len: 0,
            warnings: Warnings::default(),
        }
    }

    pub fn final_avg_reward(&self) -> Option<f64> {
        self.records.last().map(|r| r.avg_reward)
    }

    /// Mean of `avg_reward` over 1-based episodes `first..=last`.
    pub fn mean_reward(&self, first: usize, last: usize) -> f64 {
        let window: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.episode >= first && r.episode <= last)
            .map(|r| r.avg_reward)
            .collect();
        window.iter().sum::<f64>() / window.len() as f64
    }
}

/// Tracks the best loss and the episode's reward sum.
struct Tally {
    best_loss: f64,
    best_lambda: Vec<f64>,
    reward_sum: f64,
    started: Instant,
    record_wall_clock: bool,
}

impl Tally {
    fn new(record_wall_clock: bool) -> Self {
        Self {
            best_loss: f64::INFINITY,
            best_lambda: Vec::new(),
            reward_sum: 0.0,
            started: Instant::now(),
            record_wall_clock,
        }
    }

    fn observe(&mut self, loss: f64, lambda: Vec<f64>, reward: f64) {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_lambda = lambda;
        }
        self.reward_sum += reward;
    }

    fn close_episode(&mut self, episode: usize, horizon: usize) -> MetricsRecord {
        let record = MetricsRecord {
            episode,
            avg_reward: self.reward_sum / horizon as f64,
            best_loss: self.best_loss,
            best_lambda: self.best_lambda.clone(),
            seconds: if self.record_wall_clock {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        self.reward_sum = 0.0;
        record
    }
}

/// Independent generator seeds for the parts of one run.
struct Streams {
    networks: u64,
    transition: u64,
    agent: u64,
    buffer: u64,
    mixing: u64,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let mut root = ChaCha8Rng::seed_from_u64(seed);
        Self {
            networks: root.random(),
            transition: root.random(),
            agent: root.random(),
            buffer: root.random(),
            mixing: root.random(),
        }
    }
}

/// Agent settings after applying the variant: smoothing-Q uses one sample
/// when the variant does not smooth.
pub fn effective_agent_config(config: &RunConfig, variant: Variant) -> SacConfig {
    SacConfig {
        smoothing_samples: if variant.smooths() {
            config.agent.smoothing_samples
        } else {
            1
        },
        ..config.agent
    }
}

/// E episodes of T steps: act, evaluate, store the real transition, store
/// the mixed transitions when the variant mixes, then one update whenever
/// the buffer holds a full batch.
pub fn run_sac_hpo(config: &RunConfig, variant: Variant, seed: u64) -> Result<RunReport> {
    config.validate()?;
    let streams = Streams::new(seed);
    let mut evaluator = Evaluator::new(&config.objective, &config.space, seed, config.use_cache)?;
    let action_dim = config.space.len();
    let mut env = HpoEnv::new(
        config.space.clone(),
        config.state_dim,
        config.horizon,
        config.reward,
        &mut ChaCha8Rng::seed_from_u64(streams.transition),
    )?;
    let nets = AgentNetworks::new(
        config.state_dim,
        action_dim,
        &config.hidden,
        &mut ChaCha8Rng::seed_from_u64(streams.networks),
    );
    let agent_cfg = effective_agent_config(config, variant);
    let mut agent = SacAgent::new(nets, agent_cfg, streams.agent)?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity, config.state_dim, action_dim, streams.buffer);
    let mut mix_rng = ChaCha8Rng::seed_from_u64(streams.mixing);

    let mut report = RunReport::empty(variant.name(), seed);
    let mut tally = Tally::new(config.record_wall_clock);
    for episode in 1..=config.episodes {
        let mut state = env.reset().hidden.clone();
        for _ in 0..config.horizon {
            let sample = agent.act(&state, false)?;
            let out = env.step(&sample.action, |l| evaluator.eval(l))?;
            tally.observe(out.loss, evaluator.snap(&out.lambda), out.reward);
            let t = Transition {
                state,
                action: sample.action,
                next_state: out.next_state.clone(),
                reward: out.reward,
            };
            buffer.push(t.clone())?;
            if variant.mixes() {
                let mixed = augment_hierarchical(&t, &buffer, &config.mix, &mut mix_rng)?;
                report.warnings.replacement_draws += mixed.with_replacement;
                for m in mixed.transitions {
                    buffer.push(m)?;
                }
            }
            if buffer.len() >= agent_cfg.batch_size {
                let batch = buffer.sample_batch(agent_cfg.batch_size)?;
                agent.update_step(&batch)?;
                report.updates += 1;
            }
            state = out.next_state;
        }
        report.records.push(tally.close_episode(episode, config.horizon));
    }
    report.best_loss = Some(tally.best_loss);
    report.best_lambda = tally.best_lambda;
    report.evaluations = evaluator.evaluations();
    report.buffer_len = buffer.len();
    report.warnings.clamped_actions = env.clamped_actions();
    report.warnings.diverged_evaluations = evaluator.diverged();
    Ok(report)
}

/// E·T uniform draws from the space, grouped into T-sized pseudo-episodes.
pub fn run_random_search(config: &RunConfig, seed: u64) -> Result<RunReport> {
    config.validate()?;
    let mut evaluator = Evaluator::new(&config.objective, &config.space, seed, config.use_cache)?;
    let mut rewards = RewardModel::new(config.reward);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = RunReport::empty(RANDOM_SEARCH, seed);
    let mut tally = Tally::new(config.record_wall_clock);
    for episode in 1..=config.episodes {
        for _ in 0..config.horizon {
            let lambda = config.space.sample_uniform(&mut rng);
            let loss = evaluator.eval(&lambda)?;
            let reward = rewards.reward(loss)?;
            tally.observe(loss, evaluator.snap(&lambda), reward);
        }
        report.records.push(tally.close_episode(episode, config.horizon));
    }
    report.best_loss = Some(tally.best_loss);
    report.best_lambda = tally.best_lambda;
    report.evaluations = evaluator.evaluations();
    report.warnings.diverged_evaluations = evaluator.diverged();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    /// Variant-major: all seeds of the first variant, then the next.
    pub runs: Vec<RunReport>,
}

impl AblationReport {
    pub fn run(&self, variant: Variant, seed: u64) -> Option<&RunReport> {
        self.runs
            .iter()
            .find(|r| r.label == variant.name() && r.seed == seed)
    }
}

/// Every configured variant on every seed with the same objective and
/// budget.
pub fn run_ablation(config: &RunConfig) -> Result<AblationReport> {
    config.validate()?;
    let mut variants = Vec::new();
    for v in &config.ablation_variants {
        if !variants.contains(v) {
            variants.push(*v);
        }
    }
    if variants.len() < 2 {
        return Err(Error::Config("an ablation needs at least two distinct variants".into()));
    }
    let mut runs = Vec::with_capacity(variants.len() * config.seeds.len());
    for &v in &variants {
        for &seed in &config.seeds {
            runs.push(run_sac_hpo(config, v, seed)?);
        }
    }
    Ok(AblationReport {
        variants,
        seeds: config.seeds.clone(),
        runs,
    })
}
