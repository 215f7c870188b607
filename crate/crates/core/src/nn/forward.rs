use super::{MaskSet, NetworkParams, NetworkSpec};
use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

/// Everything backprop needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// Input of each weight layer after masking, `a_{i-1} ⊙ zᵢ`.
    pub layer_inputs: Vec<Matrix>,
    /// `hᵢ = (a_{i-1} ⊙ zᵢ) Wᵢᵀ + mᵢ` for every layer; the last one is the output.
    pub pre_activations: Vec<Matrix>,
    pub masks: MaskSet,
}

impl ForwardTrace {
    /// Network output, one row per input point.
    pub fn output(&self) -> &Matrix {
        self.pre_activations.last().expect("trace has at least one layer")
    }
}

fn check_input(spec: &NetworkSpec, params: &NetworkParams, x: &Matrix) -> Result<()> {
    params.check(spec)?;
    if x.cols() != spec.input_dim() {
        return Err(shape_err!(
            "input has {} features, network expects {}",
            x.cols(),
            spec.input_dim()
        ));
    }
    Ok(())
}

fn add_bias(h: &mut Matrix, bias: &[f64]) {
    for r in 0..h.rows() {
        for (v, b) in h.row_mut(r).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Batched stochastic pass: row `r` of `x` is propagated with row `r` of every mask.
pub fn forward_batch(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Matrix,
    masks: &MaskSet,
) -> Result<ForwardTrace> {
    check_input(spec, params, x)?;
    masks.check(spec, x.rows())?;
    let act = spec.activation();
    let last = spec.num_layers() - 1;
    let mut layer_inputs = Vec::with_capacity(spec.num_layers());
    let mut pre_activations = Vec::with_capacity(spec.num_layers());
    let mut a = x.clone();
    for (i, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let u = a.hadamard(&masks.layers()[i])?;
        let mut h = u.matmul_transposed(w)?;
        add_bias(&mut h, b);
        if i < last {
            a = h.map(|v| act.apply(v));
        }
        layer_inputs.push(u);
        pre_activations.push(h);
    }
    Ok(ForwardTrace {
        layer_inputs,
        pre_activations,
        masks: masks.clone(),
    })
}

/// Stochastic pass for one input point with the given masks.
pub fn forward_stochastic(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &[f64],
    masks: &MaskSet,
) -> Result<(Vec<f64>, ForwardTrace)> {
    let trace = forward_batch(spec, params, &Matrix::row_vector(x), masks)?;
    Ok((trace.output().row(0).to_vec(), trace))
}

/// Pass with every unit kept.
pub fn forward_deterministic(spec: &NetworkSpec, params: &NetworkParams, x: &Matrix) -> Result<Matrix> {
    let masks = MaskSet::ones(spec, x.rows());
    Ok(forward_batch(spec, params, x, &masks)?.pre_activations.pop().unwrap())
}

/// "Standard dropout" prediction for a batch: each `Wᵢ` scaled by `pᵢ`.
pub fn predict_weight_averaged(spec: &NetworkSpec, params: &NetworkParams, x: &Matrix) -> Result<Matrix> {
    check_input(spec, params, x)?;
    let act = spec.activation();
    let last = spec.num_layers() - 1;
    let mut a = x.clone();
    for (i, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let p = spec.keep_probs()[i];
        let u = if p < 1.0 { a.scale(p) } else { a };
        let mut h = u.matmul_transposed(w)?;
        add_bias(&mut h, b);
        a = if i < last { h.map(|v| act.apply(v)) } else { h };
    }
    Ok(a)
}

/// Weight-averaged prediction for one input point.
pub fn forward_weight_averaged(spec: &NetworkSpec, params: &NetworkParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(predict_weight_averaged(spec, params, &Matrix::row_vector(x))?.into_vec())
}

/// Gradients of a loss with respect to every weight and bias, given
/// `d_output = ∂loss/∂ŷ` (one row per point of the traced batch).
///
/// The masks stored in the trace are reused, so a dropped unit passes no
/// gradient to the column of `Wᵢ` it would have fed.
pub fn backward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    trace: &ForwardTrace,
    d_output: &Matrix,
) -> Result<NetworkParams> {
    let n_layers = spec.num_layers();
    if params.weights.len() != n_layers
        || trace.layer_inputs.len() != n_layers
        || trace.pre_activations.len() != n_layers
    {
        return Err(Error::State(format!(
            "trace has {} layers, parameters {}, spec {n_layers}",
            trace.layer_inputs.len(),
            params.weights.len()
        )));
    }
    for (i, w) in params.weights.iter().enumerate() {
        let u = &trace.layer_inputs[i];
        let h = &trace.pre_activations[i];
        if u.cols() != w.cols() || h.cols() != w.rows() || u.rows() != h.rows() {
            return Err(Error::State(format!(
                "trace layer {} does not match the {:?} weight matrix",
                i + 1,
                w.shape()
            )));
        }
    }
    if d_output.shape() != trace.output().shape() {
        return Err(shape_err!(
            "upstream gradient {:?} vs output {:?}",
            d_output.shape(),
            trace.output().shape()
        ));
    }

    let act = spec.activation();
    let mut grads = params.zeros_like();
    let mut delta = d_output.clone();
    for i in (0..n_layers).rev() {
        grads.weights[i] = delta.transposed_matmul(&trace.layer_inputs[i])?;
        grads.biases[i] = delta.sum_rows();
        if i == 0 {
            break;
        }
        let mut d_input = delta.matmul(&params.weights[i])?;
        let mask = &trace.masks.layers()[i];
        let h_prev = &trace.pre_activations[i - 1];
        for ((d, &z), &h) in d_input
            .as_mut_slice()
            .iter_mut()
            .zip(mask.as_slice())
            .zip(h_prev.as_slice())
        {
            *d *= z * act.derivative(h);
        }
        delta = d_input;
    }
    Ok(grads)
}
