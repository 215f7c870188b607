//! A 2D foraging world and a dropout Q-network agent that explores either
//! epsilon-greedily or by Thompson sampling (one stochastic pass per action).

mod agent;
mod world;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use agent::{act_epsilon_greedy, act_thompson, td_loss_and_grad, QLearner, ReplayBuffer, Transition};
pub use world::{
    AgentState, Item, ItemKind, Observation, World, WorldConfig, NUM_ACTIONS, NUM_CHANNELS, NUM_EYES, OBS_DIM,
    STRAIGHT,
};

use crate::error::{Error, Result};
use crate::experiments::RESULTS_SCHEMA_VERSION;
use crate::nn::{Activation, LossKind, NetworkParams, NetworkSpec};
use crate::numerics::{median, RngStream};
use crate::optim::{Optimizer, OptimizerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EpsilonGreedy,
    Thompson,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::EpsilonGreedy => "epsilon_greedy",
            Strategy::Thompson => "thompson",
        }
    }
}

/// Everything that defines a comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    pub world: WorldConfig,
    pub hidden: Vec<usize>,
    /// Keep probability before every weight layer of both agents' networks.
    pub keep_prob: f64,
    pub weight_decay: f64,
    pub step_size: f64,
    pub gamma: f64,
    /// Total batches logged per strategy, burn-in included.
    pub batches: usize,
    pub steps_per_batch: usize,
    /// Leading batches of uniformly random actions.
    pub burn_in_batches: usize,
    pub replay_capacity: usize,
    pub replay_batch: usize,
    /// Replay updates between refreshes of the frozen target network.
    pub target_refresh: u64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Post-burn-in batches over which epsilon decays linearly to its minimum.
    pub epsilon_decay_batches: usize,
    /// Average per-step reward over one batch that counts as "learned". The
    /// default equals the forward bonus, so beating it needs net-positive foraging.
    pub reward_threshold: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            world: WorldConfig::default(),
            hidden: vec![64, 64],
            keep_prob: 0.9,
            weight_decay: 0.0,
            step_size: 1e-3,
            gamma: 0.95,
            batches: 300,
            steps_per_batch: 100,
            burn_in_batches: 25,
            replay_capacity: 30_000,
            replay_batch: 32,
            target_refresh: 100,
            epsilon_start: 1.0,
            epsilon_min: 0.05,
            epsilon_decay_batches: 100,
            reward_threshold: 0.05,
        }
    }
}

impl RlConfig {
    pub fn spec(&self) -> Result<NetworkSpec> {
        let mut widths = vec![OBS_DIM];
        widths.extend(&self.hidden);
        widths.push(NUM_ACTIONS);
        NetworkSpec::uniform(widths, Activation::Relu, self.keep_prob, LossKind::Euclidean, self.weight_decay)
    }

    fn validate(&self) -> Result<()> {
        if self.steps_per_batch == 0 || self.replay_batch == 0 || self.replay_capacity < self.replay_batch {
            return Err(Error::Config("batch sizes and replay capacity are inconsistent".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return Err(Error::Config("epsilon values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Exploration rate during post-burn-in batch `k` (0-based).
    pub fn epsilon(&self, k: usize) -> f64 {
        if self.epsilon_decay_batches == 0 {
            return self.epsilon_min;
        }
        let frac = (k as f64 / self.epsilon_decay_batches as f64).min(1.0);
        (self.epsilon_start + (self.epsilon_min - self.epsilon_start) * frac).max(self.epsilon_min)
    }
}

/// Per-batch average reward of one strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardLog {
    pub strategy: Strategy,
    pub avg_reward: Vec<f64>,
}

impl RewardLog {
    /// Post-burn-in batches until the average reward first exceeds
    /// `threshold` (1 = the first learning batch), if it ever does.
    pub fn batches_to_threshold(&self, burn_in: usize, threshold: f64) -> Option<usize> {
        self.avg_reward
            .iter()
            .skip(burn_in)
            .position(|r| *r > threshold)
            .map(|i| i + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub schema_version: u32,
    pub seed: u64,
    pub config: RlConfig,
    pub logs: Vec<RewardLog>,
}

impl ComparisonResult {
    pub fn log(&self, s: Strategy) -> &RewardLog {
        self.logs.iter().find(|l| l.strategy == s).expect("both strategies are logged")
    }

    pub fn batches_to_threshold(&self, s: Strategy) -> Option<usize> {
        self.log(s).batches_to_threshold(self.config.burn_in_batches, self.config.reward_threshold)
    }

    /// Median post-burn-in average reward, for a quick summary.
    pub fn median_learning_reward(&self, s: Strategy) -> f64 {
        let v: Vec<f64> = self.log(s).avg_reward.iter().skip(self.config.burn_in_batches).copied().collect();
        if v.is_empty() {
            f64::NAN
        } else {
            median(&v)
        }
    }

    /// `batch,avg_reward,strategy`, one row per batch and strategy.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.logs.iter().flat_map(|l| {
            l.avg_reward
                .iter()
                .enumerate()
                .map(move |(b, r)| vec![b.to_string(), crate::experiments::fmt(*r), l.strategy.name().to_string()])
        });
        crate::experiments::write_csv(path, &["batch", "avg_reward", "strategy"], rows)
    }
}

/// Runs one agent for `config.batches` batches and logs its average reward.
///
/// The world and the network initialisation depend only on `seed`, so both
/// strategies face the same arena and start from the same weights.
pub fn run_agent(config: &RlConfig, strategy: Strategy, seed: u64) -> Result<RewardLog> {
    config.validate()?;
    let spec = config.spec()?;
    let master = RngStream::new(seed, 0);
    let params = NetworkParams::init(&spec, &mut master.fork(0));
    let optimizer = Optimizer::new(&OptimizerConfig::adam(config.step_size), &params);
    let mut learner = QLearner::new(spec, params, optimizer, config.gamma, config.target_refresh)?;
    let mut world = World::new(config.world.clone(), master.fork(1));
    let mut buffer = ReplayBuffer::new(config.replay_capacity)?;
    let mut act_rng = master.fork(2);
    let mut train_rng = master.fork(3);

    let mut obs = world.observe();
    let mut avg_reward = Vec::with_capacity(config.batches);
    for batch in 0..config.batches {
        let learning = batch >= config.burn_in_batches;
        let epsilon = config.epsilon(batch.saturating_sub(config.burn_in_batches));
        let mut total = 0.0;
        for _ in 0..config.steps_per_batch {
            let action = if !learning {
                act_rng.below(NUM_ACTIONS)
            } else {
                match strategy {
                    Strategy::EpsilonGreedy => {
                        act_epsilon_greedy(&learner.spec, &learner.params, &obs, epsilon, &mut act_rng)?
                    }
                    Strategy::Thompson => act_thompson(&learner.spec, &learner.params, &obs, &mut act_rng)?,
                }
            };
            let (reward, next_obs) = world.step(action);
            total += reward;
            buffer.push(Transition {
                obs: std::mem::replace(&mut obs, next_obs.clone()),
                action,
                reward,
                next_obs,
            });
            if buffer.len() >= config.replay_batch {
                learner.replay_train(&buffer, config.replay_batch, &mut train_rng)?;
            }
        }
        avg_reward.push(total / config.steps_per_batch as f64);
    }
    Ok(RewardLog { strategy, avg_reward })
}

/// Runs both strategies (concurrently) from the same seed.
pub fn run_comparison(config: &RlConfig, seed: u64) -> Result<ComparisonResult> {
    let (eg, ts) = rayon::join(
        || run_agent(config, Strategy::EpsilonGreedy, seed),
        || run_agent(config, Strategy::Thompson, seed),
    );
    Ok(ComparisonResult {
        schema_version: RESULTS_SCHEMA_VERSION,
        seed,
        config: config.clone(),
        logs: vec![eg?, ts?],
    })
}
