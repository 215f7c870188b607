use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt, write_csv, RESULTS_SCHEMA_VERSION};
use crate::data::{rotate_image, ImageDataset};
use crate::error::{Error, Result};
use crate::nn::{Activation, LossKind, Network, NetworkSpec, Targets};
use crate::numerics::{Matrix, RngStream};
use crate::optim::{train, InverseDecay, OptimizerConfig, TrainConfig};
use crate::uncertainty::{classification_uncertainty, mc_samples, softmax_rows};

/// MLP classifier with dropout only in front of the output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DigitConfig {
    pub hidden: Vec<usize>,
    pub keep_prob: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub passes: usize,
    pub angles: Vec<f64>,
}

impl Default for DigitConfig {
    fn default() -> Self {
        DigitConfig {
            hidden: vec![512, 512],
            keep_prob: 0.5,
            weight_decay: 5e-4,
            epochs: 10,
            batch_size: 64,
            step_size: 1e-3,
            passes: 100,
            angles: rotation_angles(),
        }
    }
}

/// Twelve angles in 15° steps from −60° to +105°; the upright image is one of them.
pub fn rotation_angles() -> Vec<f64> {
    (0..12).map(|i| -60.0 + 15.0 * i as f64).collect()
}

impl DigitConfig {
    pub fn spec(&self, input: usize, classes: usize) -> Result<NetworkSpec> {
        let mut widths = vec![input];
        widths.extend(&self.hidden);
        widths.push(classes);
        let mut keep = vec![1.0; widths.len() - 1];
        *keep.last_mut().expect("at least one layer") = self.keep_prob;
        NetworkSpec::new(widths, Activation::Relu, keep, LossKind::SoftmaxCe, self.weight_decay)
    }
}

/// Trains a ten-class classifier on `data`.
pub fn train_digit_classifier(data: &ImageDataset, cfg: &DigitConfig, seed: u64) -> Result<Network> {
    let spec = cfg.spec(data.rows * data.cols, 10)?;
    let master = RngStream::new(seed, 0);
    let mut net = Network::init(spec, &mut master.fork(0));
    let steps = (data.len().div_ceil(cfg.batch_size) * cfg.epochs) as f64;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        optimizer: OptimizerConfig::adam(cfg.step_size).with_schedule(InverseDecay {
            gamma: 3.0 / steps.max(1.0),
            power: 0.75,
        }),
    };
    let log = train(
        &net.spec,
        &mut net.params,
        &data.images,
        &Targets::Labels(data.labels_usize()),
        &train_cfg,
        &mut master.fork(1),
    )?;
    net.training_steps = log.steps;
    Ok(net)
}

/// Stochastic-pass scatter at one rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleScatter {
    pub angle: f64,
    /// The three classes with the largest mean logit, best first.
    pub top_classes: [usize; 3],
    /// `passes × 10` softmax inputs and outputs.
    pub logits: Matrix,
    pub probs: Matrix,
    pub mean_probs: Vec<f64>,
    pub predictive_entropy: f64,
    pub variation_ratio: f64,
}

impl AngleScatter {
    /// Whether the min–max logit ranges of the two leading classes intersect.
    pub fn top_two_envelopes_overlap(&self) -> bool {
        let range = |c: usize| {
            let col = self.logits.column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let (a, b) = (range(self.top_classes[0]), range(self.top_classes[1]));
        a.0 <= b.1 && b.0 <= a.1
    }

    pub fn top_mean_prob(&self) -> f64 {
        self.mean_probs[self.top_classes[0]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitScatter {
    pub schema_version: u32,
    pub passes: usize,
    pub angles: Vec<AngleScatter>,
}

impl DigitScatter {
    /// Long-format CSV with one row per (angle, pass, top class):
    /// `angle_index,angle,pass,class,rank,logit,prob`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.angles.iter().enumerate().flat_map(|(i, a)| {
            (0..a.logits.rows()).flat_map(move |t| {
                a.top_classes.iter().enumerate().map(move |(rank, &c)| {
                    vec![
                        i.to_string(),
                        fmt(a.angle),
                        t.to_string(),
                        c.to_string(),
                        rank.to_string(),
                        fmt(a.logits.get(t, c)),
                        fmt(a.probs.get(t, c)),
                    ]
                })
            })
        });
        write_csv(path, &["angle_index", "angle", "pass", "class", "rank", "logit", "prob"], rows)
    }
}

/// Rotates `image` (28×28) through `angles` and records `passes` stochastic
/// forward passes at each angle.
pub fn run_rotated_digit(
    net: &Network,
    image: &[f64],
    angles: &[f64],
    passes: usize,
    seed: u64,
) -> Result<DigitScatter> {
    if !net.is_trained() {
        return Err(Error::State("the classifier has not been trained".into()));
    }
    if net.spec.input_dim() != 784 || net.spec.output_dim() < 3 {
        return Err(Error::Experiment("expected a 784-input classifier with at least 3 classes".into()));
    }
    let master = RngStream::new(seed, 0);
    let mut out = Vec::with_capacity(angles.len());
    for (i, &angle) in angles.iter().enumerate() {
        let rotated = rotate_image(image, 28, 28, angle)?;
        let x = Matrix::row_vector(&rotated);
        let samples = mc_samples(&net.spec, &net.params, &x, passes, &mut master.fork(i as u64))?;
        let logits = Matrix::from_rows(&samples.iter().map(|s| s.row(0).to_vec()).collect::<Vec<_>>())?;
        let probs = softmax_rows(&logits);
        let u = classification_uncertainty(&probs)?;
        let mean_logits = logits.mean_rows();
        let mut order: Vec<usize> = (0..mean_logits.len()).collect();
        order.sort_by(|&a, &b| mean_logits[b].total_cmp(&mean_logits[a]).then(a.cmp(&b)));
        out.push(AngleScatter {
            angle,
            top_classes: [order[0], order[1], order[2]],
            logits,
            probs,
            mean_probs: u.mean_probs,
            predictive_entropy: u.predictive_entropy,
            variation_ratio: u.variation_ratio,
        });
    }
    Ok(DigitScatter {
        schema_version: RESULTS_SCHEMA_VERSION,
        passes,
        angles: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_digits;

    fn small() -> DigitConfig {
        DigitConfig {
            hidden: vec![16],
            epochs: 1,
            passes: 5,
            ..DigitConfig::default()
        }
    }

    #[test]
    fn angles_span_the_rotation_range() {
        let a = rotation_angles();
        assert_eq!(a.len(), 12);
        assert_eq!((a[0], a[11]), (-60.0, 105.0));
        assert!(a.contains(&0.0));
    }

    #[test]
    fn untrained_model_is_a_state_error() {
        let cfg = small();
        let net = Network::init(cfg.spec(784, 10).unwrap(), &mut RngStream::new(0, 0));
        assert!(matches!(run_rotated_digit(&net, &[0.0; 784], &[0.0], 5, 0), Err(Error::State(_))));
    }

    #[test]
    fn deterministic_model_repeats_every_pass() {
        let data = synthetic_digits(40, 1).unwrap();
        let cfg = DigitConfig { keep_prob: 1.0, ..small() };
        let net = train_digit_classifier(&data, &cfg, 2).unwrap();
        let s = run_rotated_digit(&net, data.image(1), &[0.0, 30.0], 100, 3).unwrap();
        for a in &s.angles {
            for t in 1..100 {
                assert_eq!(a.logits.row(t), a.logits.row(0));
            }
            assert_eq!(a.variation_ratio, 0.0);
        }
    }

    #[test]
    fn scatter_csv_has_three_rows_per_pass() {
        let data = synthetic_digits(20, 1).unwrap();
        let net = train_digit_classifier(&data, &small(), 2).unwrap();
        let s = run_rotated_digit(&net, data.image(1), &[0.0, 45.0], 5, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        s.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 5 * 3);
    }
}
