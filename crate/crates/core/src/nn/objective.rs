use std::f64::consts::PI;

use super::{backward, batch_loss, forward_batch, LossKind, MaskSet, NetworkParams, NetworkSpec, Targets};
use crate::error::{domain_err, Result};
use crate::numerics::Matrix;

/// Per-layer L2 coefficients: the regulariser is
/// `Σᵢ weight[i]·‖Mᵢ‖² + bias[i]·‖mᵢ‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularizer {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Regularizer {
    /// One decay `λ` for every weight and bias, as in the plain dropout cost.
    pub fn uniform(lambda: f64, layers: usize) -> Self {
        Regularizer {
            weight: vec![lambda; layers],
            bias: vec![lambda; layers],
        }
    }

    /// The prior term of the GP-MC objective after scaling by `1/τN`:
    /// `pᵢl²/(2τN)` for `Mᵢ` and `l²/(2τN)` for `mᵢ`.
    pub fn gp_prior(spec: &NetworkSpec, length_scale: f64, tau: f64, n: usize) -> Self {
        let base = length_scale * length_scale / (2.0 * tau * n as f64);
        Regularizer {
            weight: spec.keep_probs().iter().map(|p| p * base).collect(),
            bias: vec![base; spec.num_layers()],
        }
    }

    fn value(&self, params: &NetworkParams) -> f64 {
        params
            .weights
            .iter()
            .zip(&params.biases)
            .enumerate()
            .map(|(i, (w, b))| {
                self.weight[i] * w.frobenius_sq() + self.bias[i] * b.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    fn add_gradient(&self, params: &NetworkParams, grads: &mut NetworkParams) {
        for i in 0..params.weights.len() {
            let cw = 2.0 * self.weight[i];
            for (g, &w) in grads.weights[i].as_mut_slice().iter_mut().zip(params.weights[i].as_slice()) {
                *g += cw * w;
            }
            let cb = 2.0 * self.bias[i];
            for (g, &b) in grads.biases[i].iter_mut().zip(&params.biases[i]) {
                *g += cb * b;
            }
        }
    }
}

/// Per-point data term of an objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataTerm {
    /// The network's loss `E(y, ŷ)`.
    Loss,
    /// `−log p(y | x, ω̂)/τ` with a Gaussian likelihood of precision `τ`
    /// for Euclidean nets, or the softmax likelihood for classifiers.
    ScaledNegLogLik { tau: f64 },
}

/// Objective value with its gradient.
#[derive(Clone, Debug)]
pub struct Objective {
    pub value: f64,
    pub gradient: NetworkParams,
}

/// `(1/N) Σₙ term(yₙ, ŷₙ) + regulariser`, with `ŷₙ` from a stochastic pass
/// under row `n` of `masks`.
pub fn evaluate(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    targets: &Targets,
    masks: &MaskSet,
    term: DataTerm,
    reg: &Regularizer,
) -> Result<Objective> {
    if x.rows() == 0 {
        return Err(domain_err!("objective over an empty batch"));
    }
    let n = x.rows() as f64;
    let trace = forward_batch(spec, params, x, masks)?;
    let (losses, mut d_out) = batch_loss(spec.loss(), targets, trace.output())?;
    let mut data: f64 = losses.iter().sum::<f64>() / n;
    let mut scale = 1.0 / n;
    if let DataTerm::ScaledNegLogLik { tau } = term {
        if !(tau > 0.0) {
            return Err(domain_err!("precision must be positive, got {tau}"));
        }
        // −log N(y; ŷ, τ⁻¹I) / τ = ½‖y − ŷ‖² + (D/2)(log 2π − log τ)/τ
        // −log softmax / τ = CE / τ
        match spec.loss() {
            LossKind::Euclidean => {
                let d = spec.output_dim() as f64;
                data += 0.5 * d * ((2.0 * PI).ln() - tau.ln()) / tau;
            }
            LossKind::SoftmaxCe => {
                data /= tau;
                scale /= tau;
            }
        }
    }
    for v in d_out.as_mut_slice() {
        *v *= scale;
    }
    let mut gradient = backward(spec, params, &trace, &d_out)?;
    reg.add_gradient(params, &mut gradient);
    Ok(Objective {
        value: data + reg.value(params),
        gradient,
    })
}

/// Dropout cost `(1/N) Σ E(yₙ, ŷₙ) + λ Σᵢ (‖Wᵢ‖² + ‖bᵢ‖²)` with `λ` from the spec.
pub fn objective_dropout(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    targets: &Targets,
    masks: &MaskSet,
) -> Result<f64> {
    Ok(objective_dropout_grad(spec, params, x, targets, masks)?.value)
}

pub fn objective_dropout_grad(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    targets: &Targets,
    masks: &MaskSet,
) -> Result<Objective> {
    let reg = Regularizer::uniform(spec.weight_decay(), spec.num_layers());
    evaluate(spec, params, x, targets, masks, DataTerm::Loss, &reg)
}

fn gp_mc_checks(tau: f64, length_scale: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(domain_err!("precision must be positive, got {tau}"));
    }
    if !(length_scale > 0.0) || !length_scale.is_finite() {
        return Err(domain_err!("length-scale must be positive, got {length_scale}"));
    }
    Ok(())
}

/// GP-MC objective: `(1/N) Σ −log p(yₙ|xₙ, ω̂ₙ)/τ + Σᵢ (pᵢl²‖Mᵢ‖² + l²‖mᵢ‖²)/(2τN)`.
///
/// `N` is the batch size; the spec's own weight decay is ignored.
pub fn objective_gp_mc(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    targets: &Targets,
    masks: &MaskSet,
    tau: f64,
    length_scale: f64,
) -> Result<f64> {
    Ok(objective_gp_mc_grad(spec, params, x, targets, masks, tau, length_scale)?.value)
}

pub fn objective_gp_mc_grad(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    targets: &Targets,
    masks: &MaskSet,
    tau: f64,
    length_scale: f64,
) -> Result<Objective> {
    gp_mc_checks(tau, length_scale)?;
    let reg = Regularizer::gp_prior(spec, length_scale, tau, x.rows());
    evaluate(
        spec,
        params,
        x,
        targets,
        masks,
        DataTerm::ScaledNegLogLik { tau },
        &reg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::numerics::RngStream;
    use crate::Error;

    fn scalar_net(w: f64, b: f64, lambda: f64) -> (NetworkSpec, NetworkParams) {
        let spec = NetworkSpec::uniform(vec![1, 1], Activation::Relu, 1.0, LossKind::Euclidean, lambda).unwrap();
        let params = NetworkParams {
            weights: vec![Matrix::from_rows(&[[w]]).unwrap()],
            biases: vec![vec![b]],
        };
        (spec, params)
    }

    #[test]
    fn perfect_fit_without_decay_is_zero() {
        let (spec, params) = scalar_net(2.0, 1.0, 0.0);
        let x = Matrix::column_vector(&[1.0, -3.0]);
        let y = Targets::Regression(Matrix::column_vector(&[3.0, -5.0]));
        let v = objective_dropout(&spec, &params, &x, &y, &MaskSet::ones(&spec, 2)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_point_hand_sum() {
        // ŷ = 2·1 + 0.5 = 2.5, y = 1 → ½·1.5² = 1.125; 0.1·(4 + 0.25) = 0.425
        let (spec, params) = scalar_net(2.0, 0.5, 0.1);
        let x = Matrix::column_vector(&[1.0]);
        let y = Targets::Regression(Matrix::column_vector(&[1.0]));
        let v = objective_dropout(&spec, &params, &x, &y, &MaskSet::ones(&spec, 1)).unwrap();
        assert!((v - 1.55).abs() < 1e-15);
    }

    #[test]
    fn random_batch_matches_direct_summation() {
        let mut rng = RngStream::new(17, 0);
        let spec = NetworkSpec::uniform(vec![3, 5, 2], Activation::Tanh, 0.7, LossKind::Euclidean, 0.03).unwrap();
        let params = NetworkParams::init(&spec, &mut rng);
        let x = Matrix::from_fn(6, 3, |_, _| rng.normal());
        let y = Matrix::from_fn(6, 2, |_, _| rng.normal());
        let masks = MaskSet::sample(&spec, 6, &mut rng);
        let v = objective_dropout(&spec, &params, &x, &Targets::Regression(y.clone()), &masks).unwrap();
        let mut oracle = 0.0;
        for r in 0..6 {
            let (out, _) = crate::nn::forward_stochastic(&spec, &params, x.row(r), &masks.row(r)).unwrap();
            for d in 0..2 {
                oracle += 0.5 * (y.get(r, d) - out[d]).powi(2);
            }
        }
        oracle /= 6.0;
        let mut reg = 0.0;
        for (w, b) in params.weights.iter().zip(&params.biases) {
            for v in w.as_slice() {
                reg += v * v;
            }
            for v in b {
                reg += v * v;
            }
        }
        oracle += 0.03 * reg;
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_domain_error() {
        let (spec, params) = scalar_net(1.0, 0.0, 0.0);
        let x = Matrix::zeros(0, 1);
        let y = Targets::Regression(Matrix::zeros(0, 1));
        assert!(matches!(
            objective_dropout(&spec, &params, &x, &y, &MaskSet::ones(&spec, 0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gp_mc_rejects_bad_hyperparameters() {
        let (spec, params) = scalar_net(1.0, 0.0, 0.0);
        let x = Matrix::column_vector(&[1.0]);
        let y = Targets::Regression(Matrix::column_vector(&[1.0]));
        let m = MaskSet::ones(&spec, 1);
        assert!(matches!(objective_gp_mc(&spec, &params, &x, &y, &m, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(objective_gp_mc(&spec, &params, &x, &y, &m, 1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gp_mc_coefficient_arithmetic() {
        // τ = 1, l² = 2N, p = 1 → each regulariser coefficient is exactly 1
        let spec = NetworkSpec::uniform(vec![2, 3, 1], Activation::Relu, 1.0, LossKind::Euclidean, 0.0).unwrap();
        let n = 8;
        let reg = Regularizer::gp_prior(&spec, (2.0 * n as f64).sqrt(), 1.0, n);
        for c in reg.weight.iter().chain(&reg.bias) {
            assert!((c - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gp_mc_perfect_fit_first_term() {
        let (spec, _) = scalar_net(2.0, 0.0, 0.0);
        let zero = NetworkParams { weights: vec![Matrix::zeros(1, 1)], biases: vec![vec![0.0]] };
        let x = Matrix::column_vector(&[0.0, 0.0, 0.0]);
        let y = Targets::Regression(Matrix::column_vector(&[0.0, 0.0, 0.0]));
        let tau: f64 = 2.5;
        let v = objective_gp_mc(&spec, &zero, &x, &y, &MaskSet::ones(&spec, 3), tau, 1.0).unwrap();
        let expected = (-0.5 * tau.ln() + 0.5 * (2.0 * PI).ln()) / tau;
        assert!((v - expected).abs() < 1e-14);
    }
}
