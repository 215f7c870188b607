use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Result};
use crate::numerics::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `½‖y − ŷ‖²`
    Euclidean,
    /// `−log softmax(ŷ)[label]`
    SoftmaxCe,
}

/// Supervision for a batch.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// One target row per point.
    Regression(Matrix),
    /// One class index per point.
    Labels(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(y) => y.rows(),
            Targets::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Regression(y) => Targets::Regression(y.select_rows(indices)),
            Targets::Labels(l) => Targets::Labels(indices.iter().map(|&i| l[i]).collect()),
        }
    }
}

/// `½‖y − ŷ‖²`. The half makes the loss equal `−log N(y; ŷ, τ⁻¹I)/τ` up to a constant.
pub fn loss_euclidean(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(shape_err!("target length {} vs prediction length {}", y.len(), y_hat.len()));
    }
    Ok(0.5 * y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `label` under `softmax(logits)`, with max-subtraction.
pub fn loss_softmax_ce(label: usize, logits: &[f64]) -> Result<f64> {
    if label >= logits.len() {
        return Err(domain_err!("label {label} out of range for {} classes", logits.len()));
    }
    Ok(-log_softmax(logits)[label])
}

/// Per-point losses and `∂E/∂ŷ` for a batch of outputs.
pub fn batch_loss(kind: LossKind, targets: &Targets, output: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if targets.len() != output.rows() {
        return Err(shape_err!("{} targets for {} outputs", targets.len(), output.rows()));
    }
    let mut grad = Matrix::zeros(output.rows(), output.cols());
    let mut losses = Vec::with_capacity(output.rows());
    match (kind, targets) {
        (LossKind::Euclidean, Targets::Regression(y)) => {
            if y.cols() != output.cols() {
                return Err(shape_err!("targets have {} columns, outputs {}", y.cols(), output.cols()));
            }
            for r in 0..output.rows() {
                losses.push(loss_euclidean(y.row(r), output.row(r))?);
                for ((g, &t), &o) in grad.row_mut(r).iter_mut().zip(y.row(r)).zip(output.row(r)) {
                    *g = o - t;
                }
            }
        }
        (LossKind::SoftmaxCe, Targets::Labels(labels)) => {
            for (r, &label) in labels.iter().enumerate() {
                let logits = output.row(r);
                losses.push(loss_softmax_ce(label, logits)?);
                let probs = softmax(logits);
                let g = grad.row_mut(r);
                g.copy_from_slice(&probs);
                g[label] -= 1.0;
            }
        }
        (kind, _) => {
            return Err(domain_err!("targets do not match loss {kind:?}"));
        }
    }
    Ok((losses, grad))
}
