//! Mini-batch optimizers and the dropout training loop.

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::nn::{objective_dropout_grad, MaskSet, NetworkParams, NetworkSpec, Targets};
use crate::numerics::{Matrix, RngStream};

fn check_finite(grads: &NetworkParams) -> Result<()> {
    for (i, (w, b)) in grads.weights.iter().zip(&grads.biases).enumerate() {
        let bad = w
            .as_slice()
            .iter()
            .chain(b)
            .find(|v| !v.is_finite());
        if let Some(v) = bad {
            return Err(Error::Training(format!(
                "non-finite gradient {v} in layer {}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn check_shapes(a: &NetworkParams, b: &NetworkParams) -> Result<()> {
    let same = a.weights.len() == b.weights.len()
        && a.weights.iter().zip(&b.weights).all(|(x, y)| x.shape() == y.shape())
        && a.biases.iter().zip(&b.biases).all(|(x, y)| x.len() == y.len());
    if !same {
        return Err(Error::Shape("gradient layout does not match parameters".into()));
    }
    Ok(())
}

/// Inverse-decay learning-rate policy `rate·(1 + γ·iter)^(−power)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseDecay {
    pub gamma: f64,
    pub power: f64,
}

impl InverseDecay {
    pub fn factor(&self, iteration: u64) -> f64 {
        (1.0 + self.gamma * iteration as f64).powf(-self.power)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub step_size: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_step_size(step_size: f64) -> Self {
        AdamConfig {
            step_size,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Adam moments mirroring the parameter layout.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: NetworkParams,
    pub second_moment: NetworkParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &NetworkParams) -> Self {
        AdamState {
            config,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. `rate_factor` scales the step size.
pub fn adam_step_scaled(
    state: &mut AdamState,
    params: &mut NetworkParams,
    grads: &NetworkParams,
    rate_factor: f64,
) -> Result<()> {
    check_shapes(params, grads)?;
    check_finite(grads)?;
    let c = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - c.beta1.powi(t);
    let bias2 = 1.0 - c.beta2.powi(t);
    let lr = c.step_size * rate_factor;
    for (((w, g), m), v) in params
        .blocks_mut()
        .zip(grads.blocks())
        .zip(state.first_moment.blocks_mut())
        .zip(state.second_moment.blocks_mut())
    {
        for i in 0..w.len() {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            w[i] -= lr * m_hat / (v_hat.sqrt() + c.eps);
        }
    }
    Ok(())
}

pub fn adam_step(state: &mut AdamState, params: &mut NetworkParams, grads: &NetworkParams) -> Result<()> {
    adam_step_scaled(state, params, grads, 1.0)
}

/// Momentum SGD: `v ← μv − ηg; w ← w + v`.
pub fn sgd_step(
    params: &mut NetworkParams,
    grads: &NetworkParams,
    learning_rate: f64,
    momentum: f64,
    velocity: &mut NetworkParams,
) -> Result<()> {
    check_shapes(params, grads)?;
    check_shapes(params, velocity)?;
    check_finite(grads)?;
    for ((w, g), v) in params
        .blocks_mut()
        .zip(grads.blocks())
        .zip(velocity.blocks_mut())
    {
        for i in 0..w.len() {
            v[i] = momentum * v[i] - learning_rate * g[i];
            w[i] += v[i];
        }
    }
    Ok(())
}

/// Optimizer choice as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Adam {
        step_size: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        schedule: Option<InverseDecay>,
    },
    Sgd {
        learning_rate: f64,
        #[serde(default)]
        momentum: f64,
        #[serde(default)]
        schedule: Option<InverseDecay>,
    },
}

impl OptimizerConfig {
    pub fn adam(step_size: f64) -> Self {
        OptimizerConfig::Adam {
            step_size,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            schedule: None,
        }
    }

    pub fn sgd(learning_rate: f64, momentum: f64) -> Self {
        OptimizerConfig::Sgd {
            learning_rate,
            momentum,
            schedule: None,
        }
    }

    pub fn with_schedule(self, decay: InverseDecay) -> Self {
        match self {
            OptimizerConfig::Adam { step_size, beta1, beta2, eps, .. } => OptimizerConfig::Adam {
                step_size,
                beta1,
                beta2,
                eps,
                schedule: Some(decay),
            },
            OptimizerConfig::Sgd { learning_rate, momentum, .. } => OptimizerConfig::Sgd {
                learning_rate,
                momentum,
                schedule: Some(decay),
            },
        }
    }
}

/// Stateful optimizer built from an [`OptimizerConfig`].
#[derive(Clone, Debug)]
pub enum Optimizer {
    Adam {
        state: AdamState,
        schedule: Option<InverseDecay>,
    },
    Sgd {
        learning_rate: f64,
        momentum: f64,
        velocity: NetworkParams,
        schedule: Option<InverseDecay>,
        step: u64,
    },
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig, params: &NetworkParams) -> Self {
        match *config {
            OptimizerConfig::Adam {
                step_size,
                beta1,
                beta2,
                eps,
                schedule,
            } => Optimizer::Adam {
                state: AdamState::new(
                    AdamConfig {
                        step_size,
                        beta1,
                        beta2,
                        eps,
                    },
                    params,
                ),
                schedule,
            },
            OptimizerConfig::Sgd {
                learning_rate,
                momentum,
                schedule,
            } => Optimizer::Sgd {
                learning_rate,
                momentum,
                velocity: params.zeros_like(),
                schedule,
                step: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams) -> Result<()> {
        match self {
            Optimizer::Adam { state, schedule } => {
                let f = schedule.map_or(1.0, |s| s.factor(state.step));
                adam_step_scaled(state, params, grads, f)
            }
            Optimizer::Sgd {
                learning_rate,
                momentum,
                velocity,
                schedule,
                step,
            } => {
                let f = schedule.map_or(1.0, |s| s.factor(*step));
                *step += 1;
                sgd_step(params, grads, *learning_rate * f, *momentum, velocity)
            }
        }
    }
}

/// Settings for [`train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
}

/// Per-epoch mean of the mini-batch objective values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Minimises the dropout objective with fresh masks for every mini-batch.
///
/// The data order is reshuffled each epoch from `rng`, which also supplies
/// the masks, so a run is fully determined by the stream it is given.
pub fn train(
    spec: &NetworkSpec,
    params: &mut NetworkParams,
    x: &Matrix,
    targets: &Targets,
    config: &TrainConfig,
    rng: &mut RngStream,
) -> Result<TrainLog> {
    let mut optimizer = Optimizer::new(&config.optimizer, params);
    train_with(spec, params, x, targets, config, &mut optimizer, rng)
}

/// [`train`] with an optimizer whose state carries over between calls.
pub fn train_with(
    spec: &NetworkSpec,
    params: &mut NetworkParams,
    x: &Matrix,
    targets: &Targets,
    config: &TrainConfig,
    optimizer: &mut Optimizer,
    rng: &mut RngStream,
) -> Result<TrainLog> {
    let n = x.rows();
    if n == 0 || targets.len() != n {
        return Err(domain_err!("training on {n} inputs with {} targets", targets.len()));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(domain_err!("epochs and batch size must be positive"));
    }
    let mut log = TrainLog::default();
    for _ in 0..config.epochs {
        let order = rng.permutation(n);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let xb = x.select_rows(chunk);
            let yb = targets.select(chunk);
            let masks = MaskSet::sample(spec, chunk.len(), rng);
            let obj = objective_dropout_grad(spec, params, &xb, &yb, &masks)?;
            optimizer.step(params, &obj.gradient)?;
            total += obj.value;
            batches += 1;
            log.steps += 1;
        }
        let mean = total / batches as f64;
        if !mean.is_finite() {
            return Err(Error::Training(format!("objective became {mean}")));
        }
        log.epoch_losses.push(mean);
    }
    Ok(log)
}
