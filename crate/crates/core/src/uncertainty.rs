//! Predictive moments and likelihoods from stochastic forward passes.
//!
//! With dropout left on at test time, each forward pass draws a fresh set of
//! masks and therefore a fresh network from the approximate posterior. For
//! `T` such passes `ŷ₁ … ŷ_T` at an input `x*`:
//!
//! - predictive mean: `(1/T) Σₜ ŷₜ`
//! - second raw moment: `τ⁻¹I + (1/T) Σₜ ŷₜᵀŷₜ`
//! - predictive variance: the above minus `meanᵀmean`, i.e. the sample
//!   variance of the passes plus `τ⁻¹`
//! - log-likelihood of a target `y`:
//!   `logsumexp_t(−τ/2 ‖y − ŷₜ‖²) − log T − (D/2) log 2π + (D/2) log τ`
//!
//! The model precision `τ` is not learned directly; it follows from the
//! weight decay `λ`, keep probability `p`, prior length-scale `l` and
//! training-set size `N` through `τ = p l² / (2 N λ)` (see [`PrecisionLink`]).

use std::f64::consts::PI;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Result};
use crate::nn::{forward_batch, softmax, MaskSet, NetworkParams, NetworkSpec};
use crate::numerics::{log_sum_exp, Matrix, RngStream};

/// MC-dropout summary for one test input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub mean: Vec<f64>,
    /// Per-dimension predictive variance, including the `τ⁻¹` floor.
    pub variance: Vec<f64>,
    /// `T × D` stochastic outputs, one row per pass.
    pub samples: Matrix,
    pub tau: f64,
}

impl PredictiveSummary {
    /// Builds the summary from raw pass outputs.
    pub fn from_samples(samples: Matrix, tau: f64) -> Result<Self> {
        if samples.rows() == 0 {
            return Err(domain_err!("no stochastic passes"));
        }
        if !(tau > 0.0) {
            return Err(domain_err!("precision must be positive, got {tau}"));
        }
        let t = samples.rows() as f64;
        let mean = samples.mean_rows();
        // Two-pass form of (1/T)Σŷ² − mean²; identical in exact arithmetic
        // and never negative in floating point.
        let mut spread = vec![0.0; samples.cols()];
        for row in samples.row_iter() {
            for ((s, &v), &m) in spread.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let variance = spread.into_iter().map(|s| 1.0 / tau + s / t).collect();
        Ok(PredictiveSummary {
            mean,
            variance,
            samples,
            tau,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// `τ⁻¹I + (1/T) Σₜ ŷₜᵀŷₜ` (outer products of the row outputs).
    pub fn second_moment_matrix(&self) -> Matrix {
        let d = self.samples.cols();
        let t = self.samples.rows() as f64;
        let mut m = self.samples.transposed_matmul(&self.samples).expect("square by construction");
        for v in m.as_mut_slice() {
            *v /= t;
        }
        for i in 0..d {
            m.set(i, i, m.get(i, i) + 1.0 / self.tau);
        }
        m
    }

    /// Full predictive covariance: second raw moment minus `meanᵀmean`.
    pub fn covariance_matrix(&self) -> Matrix {
        let mut m = self.second_moment_matrix();
        let d = self.mean.len();
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, m.get(i, j) - self.mean[i] * self.mean[j]);
            }
        }
        m
    }

    /// Predictive log-likelihood of `y` under this summary's samples.
    pub fn log_likelihood(&self, y: &[f64]) -> Result<f64> {
        predictive_log_likelihood(&self.samples, y, self.tau)
    }
}

/// Raw outputs of `t` stochastic passes over a batch: element `k` is the
/// `N × D` output of pass `k`.
///
/// Pass `k` draws its masks from its own stream, derived from one draw of
/// `rng`, so results do not depend on scheduling or thread count.
pub fn mc_samples(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    t: usize,
    rng: &mut RngStream,
) -> Result<Vec<Matrix>> {
    if t == 0 {
        return Err(domain_err!("at least one stochastic pass is required"));
    }
    params.check(spec)?;
    let base = RngStream::new(rng.next_u64(), 0);
    (0..t)
        .into_par_iter()
        .map(|k| {
            let mut stream = base.fork(k as u64);
            let masks = MaskSet::sample(spec, x.rows(), &mut stream);
            let mut trace = forward_batch(spec, params, x, &masks)?;
            Ok(trace.pre_activations.pop().expect("non-empty network"))
        })
        .collect()
}

/// MC-dropout prediction for every row of `x`.
pub fn mc_predict_batch(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    t: usize,
    tau: f64,
    rng: &mut RngStream,
) -> Result<Vec<PredictiveSummary>> {
    if !(tau > 0.0) {
        return Err(domain_err!("precision must be positive, got {tau}"));
    }
    let passes = mc_samples(spec, params, x, t, rng)?;
    let d = spec.output_dim();
    (0..x.rows())
        .map(|n| {
            let mut data = Vec::with_capacity(t * d);
            for pass in &passes {
                data.extend_from_slice(pass.row(n));
            }
            PredictiveSummary::from_samples(Matrix::new(t, d, data)?, tau)
        })
        .collect()
}

/// MC-dropout prediction for a single input with `t` stochastic passes.
pub fn mc_predict(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &[f64],
    t: usize,
    tau: f64,
    rng: &mut RngStream,
) -> Result<PredictiveSummary> {
    Ok(mc_predict_batch(spec, params, &Matrix::row_vector(x), t, tau, rng)?.remove(0))
}

/// MC estimate of `log p(y | x*)` from `T × D` pass outputs.
pub fn predictive_log_likelihood(samples: &Matrix, y: &[f64], tau: f64) -> Result<f64> {
    if samples.rows() == 0 {
        return Err(domain_err!("no stochastic passes"));
    }
    if !(tau > 0.0) {
        return Err(domain_err!("precision must be positive, got {tau}"));
    }
    if samples.cols() != y.len() {
        return Err(shape_err!("samples have {} outputs, target has {}", samples.cols(), y.len()));
    }
    let exponents: Vec<f64> = samples
        .row_iter()
        .map(|s| {
            let sq: f64 = s.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            -0.5 * tau * sq
        })
        .collect();
    let d = y.len() as f64;
    Ok(log_sum_exp(&exponents) - (samples.rows() as f64).ln() - 0.5 * d * (2.0 * PI).ln()
        + 0.5 * d * tau.ln())
}

/// Relation `τ = p l² / (2 N λ)` between model precision and weight decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionLink {
    pub keep_prob: f64,
    pub length_scale: f64,
    pub n: usize,
    pub weight_decay: f64,
    pub tau: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(domain_err!("{name} must be positive and finite, got {v}"));
    }
    Ok(())
}

pub fn tau_from_weight_decay(keep_prob: f64, length_scale: f64, n: usize, weight_decay: f64) -> Result<f64> {
    check_positive("keep probability", keep_prob)?;
    check_positive("length-scale", length_scale)?;
    check_positive("training-set size", n as f64)?;
    check_positive("weight decay", weight_decay)?;
    Ok(keep_prob * length_scale * length_scale / (2.0 * n as f64 * weight_decay))
}

pub fn weight_decay_from_tau(keep_prob: f64, length_scale: f64, n: usize, tau: f64) -> Result<f64> {
    check_positive("keep probability", keep_prob)?;
    check_positive("length-scale", length_scale)?;
    check_positive("training-set size", n as f64)?;
    check_positive("precision", tau)?;
    Ok(keep_prob * length_scale * length_scale / (2.0 * n as f64 * tau))
}

impl PrecisionLink {
    pub fn from_weight_decay(keep_prob: f64, length_scale: f64, n: usize, weight_decay: f64) -> Result<Self> {
        let tau = tau_from_weight_decay(keep_prob, length_scale, n, weight_decay)?;
        Ok(PrecisionLink {
            keep_prob,
            length_scale,
            n,
            weight_decay,
            tau,
        })
    }

    pub fn from_tau(keep_prob: f64, length_scale: f64, n: usize, tau: f64) -> Result<Self> {
        let weight_decay = weight_decay_from_tau(keep_prob, length_scale, n, tau)?;
        Ok(PrecisionLink {
            keep_prob,
            length_scale,
            n,
            weight_decay,
            tau,
        })
    }

    /// Relative residual of `τ·2Nλ = p l²`.
    pub fn residual(&self) -> f64 {
        let lhs = self.tau * 2.0 * self.n as f64 * self.weight_decay;
        let rhs = self.keep_prob * self.length_scale * self.length_scale;
        (lhs - rhs).abs() / rhs
    }
}

/// Uncertainty summaries of `T` softmax output rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationUncertainty {
    pub mean_probs: Vec<f64>,
    pub predictive_entropy: f64,
    /// `1 − (count of the modal per-pass argmax) / T`.
    pub variation_ratio: f64,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn classification_uncertainty(softmax_samples: &Matrix) -> Result<ClassificationUncertainty> {
    let (t, c) = softmax_samples.shape();
    if t == 0 || c == 0 {
        return Err(domain_err!("empty softmax sample matrix"));
    }
    for (i, row) in softmax_samples.row_iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 || row.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(domain_err!("row {i} is not a probability vector (sums to {s})"));
        }
    }
    let mean_probs = softmax_samples.mean_rows();
    let predictive_entropy = -mean_probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();
    let mut counts = vec![0usize; c];
    for row in softmax_samples.row_iter() {
        counts[argmax(row)] += 1;
    }
    let mode = *counts.iter().max().unwrap();
    Ok(ClassificationUncertainty {
        mean_probs,
        predictive_entropy: predictive_entropy.max(0.0),
        variation_ratio: 1.0 - mode as f64 / t as f64,
    })
}

/// Applies softmax to every row of a logit matrix.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let rows: Vec<Vec<f64>> = logits.row_iter().map(softmax).collect();
    Matrix::from_rows(&rows).expect("rows share a width")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LossKind};
    use crate::Error;

    fn scalar_net(keep: f64) -> (NetworkSpec, NetworkParams) {
        let spec = NetworkSpec::uniform(vec![1, 1], Activation::Relu, keep, LossKind::Euclidean, 0.0).unwrap();
        let params = NetworkParams {
            weights: vec![Matrix::from_rows(&[[2.0]]).unwrap()],
            biases: vec![vec![0.0]],
        };
        (spec, params)
    }

    #[test]
    fn no_dropout_gives_precision_floor() {
        let (spec, params) = scalar_net(1.0);
        let s = mc_predict(&spec, &params, &[3.0], 17, 4.0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(s.mean, vec![6.0]);
        assert_eq!(s.variance, vec![0.25]);
        assert_eq!(s.num_samples(), 17);
    }

    #[test]
    fn zero_passes_is_domain_error() {
        let (spec, params) = scalar_net(0.5);
        assert!(matches!(
            mc_predict(&spec, &params, &[3.0], 0, 1.0, &mut RngStream::new(0, 0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn constant_network_has_floor_variance() {
        let (spec, mut params) = scalar_net(0.3);
        params.weights[0].set(0, 0, 0.0);
        params.biases[0][0] = 1.5;
        let s = mc_predict(&spec, &params, &[3.0], 50, 2.0, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(s.mean, vec![1.5]);
        assert_eq!(s.variance, vec![0.5]);
    }

    #[test]
    fn second_moment_and_covariance_agree_with_variance() {
        let samples = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]]).unwrap();
        let s = PredictiveSummary::from_samples(samples, 2.0).unwrap();
        let cov = s.covariance_matrix();
        for d in 0..2 {
            assert!((cov.get(d, d) - s.variance[d]).abs() < 1e-12);
        }
        assert!((cov.get(0, 1) - cov.get(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_closed_forms() {
        let ll = predictive_log_likelihood(&Matrix::from_rows(&[[0.7]]).unwrap(), &[0.7], 1.0).unwrap();
        assert!((ll - (-0.918_938_533_204_672_7)).abs() < 1e-12);
        let samples = Matrix::from_rows(&[[0.0], [2f64.sqrt()]]).unwrap();
        let ll = predictive_log_likelihood(&samples, &[0.0], 1.0).unwrap();
        assert!((ll - (-1.298_824_026_246_395)).abs() < 1e-9, "{ll}");
        assert!(predictive_log_likelihood(&Matrix::zeros(0, 1), &[0.0], 1.0).is_err());
    }

    #[test]
    fn precision_identity_examples() {
        assert_eq!(tau_from_weight_decay(1.0, 1.0, 1, 0.5).unwrap(), 1.0);
        assert!((tau_from_weight_decay(0.5, 1.0, 100, 0.0025).unwrap() - 1.0).abs() < 1e-15);
        for (n, lambda) in [(455usize, 1e-6), (1000, 3.3e-4), (7, 0.2)] {
            let direct = 0.05 * 1e-4 / (2.0 * n as f64 * lambda);
            let tau = tau_from_weight_decay(0.05, 1e-2, n, lambda).unwrap();
            assert!((tau - direct).abs() <= 1e-15 * direct);
            let back = weight_decay_from_tau(0.05, 1e-2, n, tau).unwrap();
            assert!((back - lambda).abs() <= 1e-14 * lambda);
        }
        assert!(tau_from_weight_decay(0.5, 1.0, 10, 0.0).is_err());
        assert!(weight_decay_from_tau(0.5, -1.0, 10, 1.0).is_err());
        let link = PrecisionLink::from_tau(0.95, 1e-2, 455, 12.0).unwrap();
        assert!(link.residual() < 1e-12);
    }

    #[test]
    fn certain_and_split_votes() {
        let certain = Matrix::from_rows(&[[1.0, 0.0, 0.0]; 4]).unwrap();
        let u = classification_uncertainty(&certain).unwrap();
        assert_eq!(u.predictive_entropy, 0.0);
        assert_eq!(u.variation_ratio, 0.0);
        let split = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let u = classification_uncertainty(&split).unwrap();
        assert!((u.predictive_entropy - 2f64.ln()).abs() < 1e-15);
        assert_eq!(u.variation_ratio, 0.5);
        assert!(classification_uncertainty(&Matrix::from_rows(&[[0.5, 0.6]]).unwrap()).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 5.0, 2.0, 0.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }
}
