//! Feed-forward dropout networks.
//!
//! A network with `L` weight layers maps `x` to
//! `ŷ = W_L σ(… W_2 σ(W_1 (z₁ ⊙ x) + m₁) …) + m_L`, where every weight layer
//! sees its input multiplied by a Bernoulli mask `zᵢ` whose entries are one
//! with the layer's keep probability `pᵢ`. Dropout is the classic variant:
//! nothing is rescaled at train time, and the deterministic "standard
//! dropout" prediction scales each weight matrix by `pᵢ` instead.
//!
//! Weight matrices are stored `K_i × K_{i-1}` (rows index output units), so
//! dropping input unit `j` of layer `i` zeroes column `j` of `W_i`.

mod checkpoint;
mod forward;
mod loss;
mod objective;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Result};
use crate::numerics::{Matrix, RngStream};

pub use checkpoint::{Network, CHECKPOINT_SCHEMA_VERSION};
pub use forward::{
    backward, forward_batch, forward_deterministic, forward_stochastic, forward_weight_averaged,
    predict_weight_averaged, ForwardTrace,
};
pub use loss::{
    batch_loss, log_softmax, loss_euclidean, loss_softmax_ce, softmax, LossKind, Targets,
};
pub use objective::{
    objective_dropout, objective_dropout_grad, objective_gp_mc, objective_gp_mc_grad, evaluate,
    DataTerm, Objective, Regularizer,
};

/// Elementwise nonlinearity applied after every hidden layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    /// Linear hidden layers; handy for checking averaging identities.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, h: f64) -> f64 {
        match self {
            Activation::Relu => h.max(0.0),
            Activation::Tanh => h.tanh(),
            Activation::Identity => h,
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    pub fn derivative(self, h: f64) -> f64 {
        match self {
            Activation::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = h.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Architecture of a dropout network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFields")]
pub struct NetworkSpec {
    layer_widths: Vec<usize>,
    activation: Activation,
    keep_probs: Vec<f64>,
    loss: LossKind,
    weight_decay: f64,
}

#[derive(Deserialize)]
struct SpecFields {
    layer_widths: Vec<usize>,
    activation: Activation,
    keep_probs: Vec<f64>,
    loss: LossKind,
    weight_decay: f64,
}

impl TryFrom<SpecFields> for NetworkSpec {
    type Error = crate::Error;

    fn try_from(f: SpecFields) -> Result<Self> {
        NetworkSpec::new(f.layer_widths, f.activation, f.keep_probs, f.loss, f.weight_decay)
    }
}

impl NetworkSpec {
    /// `layer_widths` lists `K₀ … K_L`; `keep_probs` holds one keep
    /// probability per weight layer.
    pub fn new(
        layer_widths: Vec<usize>,
        activation: Activation,
        keep_probs: Vec<f64>,
        loss: LossKind,
        weight_decay: f64,
    ) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(domain_err!("a network needs at least one weight layer"));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(domain_err!("layer widths must be positive, got {layer_widths:?}"));
        }
        if keep_probs.len() != layer_widths.len() - 1 {
            return Err(shape_err!(
                "{} keep probabilities for {} weight layers",
                keep_probs.len(),
                layer_widths.len() - 1
            ));
        }
        if let Some(p) = keep_probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(domain_err!("keep probability {p} outside (0, 1]"));
        }
        if !(weight_decay >= 0.0) || !weight_decay.is_finite() {
            return Err(domain_err!("weight decay must be finite and non-negative"));
        }
        Ok(NetworkSpec {
            layer_widths,
            activation,
            keep_probs,
            loss,
            weight_decay,
        })
    }

    /// Same keep probability in front of every weight layer.
    pub fn uniform(
        layer_widths: Vec<usize>,
        activation: Activation,
        keep_prob: f64,
        loss: LossKind,
        weight_decay: f64,
    ) -> Result<Self> {
        let n = layer_widths.len().saturating_sub(1);
        Self::new(layer_widths, activation, vec![keep_prob; n], loss, weight_decay)
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn keep_probs(&self) -> &[f64] {
        &self.keep_probs
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn weight_decay(&self) -> f64 {
        self.weight_decay
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    /// True when at least one layer actually drops units.
    pub fn has_dropout(&self) -> bool {
        self.keep_probs.iter().any(|&p| p < 1.0)
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Result<Self> {
        if !(weight_decay >= 0.0) || !weight_decay.is_finite() {
            return Err(domain_err!("weight decay must be finite and non-negative"));
        }
        self.weight_decay = weight_decay;
        Ok(self)
    }

    pub fn with_keep_probs(self, keep_probs: Vec<f64>) -> Result<Self> {
        Self::new(
            self.layer_widths,
            self.activation,
            keep_probs,
            self.loss,
            self.weight_decay,
        )
    }
}

/// Weights `Mᵢ` (`K_i × K_{i-1}`) and biases `mᵢ` (`K_i`).
///
/// Gradients and optimizer moments reuse the same layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    /// Zero biases; weights i.i.d. normal with standard deviation `1/√fan_in`.
    pub fn init(spec: &NetworkSpec, rng: &mut RngStream) -> Self {
        let w = spec.layer_widths();
        let weights = w
            .windows(2)
            .map(|k| {
                let sd = 1.0 / (k[0] as f64).sqrt();
                Matrix::from_fn(k[1], k[0], |_, _| sd * rng.normal())
            })
            .collect();
        let biases = w[1..].iter().map(|&k| vec![0.0; k]).collect();
        NetworkParams { weights, biases }
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let w = spec.layer_widths();
        NetworkParams {
            weights: w.windows(2).map(|k| Matrix::zeros(k[1], k[0])).collect(),
            biases: w[1..].iter().map(|&k| vec![0.0; k]).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            weights: self
                .weights
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Checks that shapes agree with `spec`.
    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        let w = spec.layer_widths();
        if self.weights.len() != spec.num_layers() || self.biases.len() != spec.num_layers() {
            return Err(shape_err!(
                "parameters have {} weight / {} bias layers, spec has {}",
                self.weights.len(),
                self.biases.len(),
                spec.num_layers()
            ));
        }
        for (i, (m, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if m.shape() != (w[i + 1], w[i]) || b.len() != w[i + 1] {
                return Err(shape_err!(
                    "layer {} has weight {:?} and bias {}, spec needs ({}, {})",
                    i + 1,
                    m.shape(),
                    b.len(),
                    w[i + 1],
                    w[i]
                ));
            }
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|m| m.as_slice().len()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Parameter blocks in a fixed order: `M₁, m₁, M₂, m₂, …`.
    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(m, b)| [m.as_slice(), b.as_slice()])
    }

    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> + '_ {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(m, b)| [m.as_mut_slice(), b.as_mut_slice()])
    }

    /// Flattened copy in [`blocks`](Self::blocks) order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().flatten().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().flatten().all(|v| v.is_finite())
    }

    /// Sum of squares of all weight matrices (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.weights.iter().map(Matrix::frobenius_sq).sum()
    }
}

/// Bernoulli realisations `zᵢ` for a batch: one `rows × K_{i-1}` matrix per
/// weight layer, shared between a forward pass and its backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet {
    layers: Vec<Matrix>,
}

impl MaskSet {
    /// Masks from explicit per-layer matrices; entries must be 0 or 1.
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        if layers
            .iter()
            .any(|m| m.as_slice().iter().any(|&v| v != 0.0 && v != 1.0))
        {
            return Err(domain_err!("mask entries must be 0 or 1"));
        }
        if let Some(first) = layers.first() {
            if layers.iter().any(|m| m.rows() != first.rows()) {
                return Err(shape_err!("mask layers disagree on the batch size"));
            }
        }
        Ok(MaskSet { layers })
    }

    /// Masks for a single input point, one vector per weight layer.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| Matrix::row_vector(v)).collect())
    }

    /// No unit dropped.
    pub fn ones(spec: &NetworkSpec, rows: usize) -> Self {
        MaskSet {
            layers: spec
                .layer_widths()
                .iter()
                .take(spec.num_layers())
                .map(|&k| Matrix::filled(rows, k, 1.0))
                .collect(),
        }
    }

    /// Fresh Bernoulli draws for `rows` input points.
    pub fn sample(spec: &NetworkSpec, rows: usize, rng: &mut RngStream) -> Self {
        let layers = spec
            .layer_widths()
            .iter()
            .zip(spec.keep_probs())
            .map(|(&k, &p)| {
                if p >= 1.0 {
                    Matrix::filled(rows, k, 1.0)
                } else {
                    Matrix::from_fn(rows, k, |_, _| if rng.uniform() < p { 1.0 } else { 0.0 })
                }
            })
            .collect();
        MaskSet { layers }
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn rows(&self) -> usize {
        self.layers.first().map_or(0, Matrix::rows)
    }

    /// Masks for a single row of the batch.
    pub fn row(&self, r: usize) -> MaskSet {
        MaskSet {
            layers: self
                .layers
                .iter()
                .map(|m| Matrix::row_vector(m.row(r)))
                .collect(),
        }
    }

    pub(crate) fn check(&self, spec: &NetworkSpec, rows: usize) -> Result<()> {
        if self.layers.len() != spec.num_layers() {
            return Err(shape_err!(
                "{} mask layers for {} weight layers",
                self.layers.len(),
                spec.num_layers()
            ));
        }
        for (i, (m, &k)) in self.layers.iter().zip(spec.layer_widths()).enumerate() {
            if m.shape() != (rows, k) {
                return Err(shape_err!(
                    "mask {} has shape {:?}, expected ({rows}, {k})",
                    i + 1,
                    m.shape()
                ));
            }
        }
        Ok(())
    }
}
