#![allow(dead_code)]

use mcdrop::nn::{
    forward_stochastic, objective_dropout, objective_dropout_grad, Activation, LossKind, MaskSet, NetworkParams,
    NetworkSpec, Targets,
};
use mcdrop::{Matrix, RngStream};

/// One random gradient-check problem.
pub struct Instance {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub x: Matrix,
    pub targets: Targets,
    pub masks: MaskSet,
}

/// Widths in 1..=16, one to three weight layers, either nonlinearity and
/// either loss, a small batch and a random mask draw.
pub fn random_instance(rng: &mut RngStream) -> Instance {
    let layers = 1 + rng.below(3);
    let loss = if rng.bernoulli(0.5) { LossKind::Euclidean } else { LossKind::SoftmaxCe };
    let activation = if rng.bernoulli(0.5) { Activation::Relu } else { Activation::Tanh };
    let mut widths: Vec<usize> = (0..=layers).map(|_| 1 + rng.below(16)).collect();
    if loss == LossKind::SoftmaxCe {
        widths[layers] = widths[layers].max(2);
    }
    let keep: Vec<f64> = (0..layers).map(|_| rng.uniform_range(0.3, 1.0)).collect();
    let lambda = rng.uniform_range(0.0, 1e-2);
    let spec = NetworkSpec::new(widths.clone(), activation, keep, loss, lambda).unwrap();
    let mut params = NetworkParams::init(&spec, rng);
    for b in params.biases.iter_mut().flatten() {
        *b = 0.1 * rng.normal();
    }
    let rows = 1 + rng.below(4);
    let x = Matrix::from_fn(rows, widths[0], |_, _| rng.normal());
    let d = widths[layers];
    let targets = match loss {
        LossKind::Euclidean => Targets::Regression(Matrix::from_fn(rows, d, |_, _| rng.normal())),
        LossKind::SoftmaxCe => Targets::Labels((0..rows).map(|_| rng.below(d)).collect()),
    };
    let masks = MaskSet::sample(&spec, rows, rng);
    Instance {
        spec,
        params,
        x,
        targets,
        masks,
    }
}

/// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)` over
/// every parameter, with central differences of step `h` on the dropout
/// objective under the instance's fixed masks.
pub fn max_gradient_error(inst: &Instance, h: f64, floor: f64) -> f64 {
    let analytic = objective_dropout_grad(&inst.spec, &inst.params, &inst.x, &inst.targets, &inst.masks)
        .unwrap()
        .gradient;
    let f = |p: &NetworkParams| objective_dropout(&inst.spec, p, &inst.x, &inst.targets, &inst.masks).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = inst.params.clone();
    let flat_analytic: Vec<f64> = analytic.blocks().flatten().copied().collect();
    let count = flat_analytic.len();
    for (k, &a) in flat_analytic.iter().enumerate().take(count) {
        let orig = get_flat(&probe, k);
        set_flat(&mut probe, k, orig + h);
        let up = f(&probe);
        set_flat(&mut probe, k, orig - h);
        let down = f(&probe);
        set_flat(&mut probe, k, orig);
        let numeric = (up - down) / (2.0 * h);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}

pub fn get_flat(p: &NetworkParams, k: usize) -> f64 {
    *p.blocks().flatten().nth(k).unwrap()
}

pub fn set_flat(p: &mut NetworkParams, k: usize, v: f64) {
    *p.blocks_mut().flatten().nth(k).unwrap() = v;
}

/// Exact moments of a single-input network's output over every mask
/// configuration: `(mean, variance, fourth central moment)` per output.
pub fn enumerate_moments(spec: &NetworkSpec, params: &NetworkParams, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // (layer, unit, keep) for every unit that can be dropped
    let droppable: Vec<(usize, usize, f64)> = spec
        .keep_probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < 1.0)
        .flat_map(|(i, &p)| (0..spec.layer_widths()[i]).map(move |u| (i, u, p)))
        .collect();
    assert!(droppable.len() <= 16, "too many droppable units to enumerate");
    let d = spec.output_dim();
    let mut outcomes = Vec::with_capacity(1 << droppable.len());
    for bits in 0u32..(1 << droppable.len()) {
        let mut vectors: Vec<Vec<f64>> = spec.layer_widths()[..spec.num_layers()].iter().map(|&k| vec![1.0; k]).collect();
        let mut prob = 1.0;
        for (j, &(layer, unit, p)) in droppable.iter().enumerate() {
            if bits >> j & 1 == 1 {
                prob *= p;
            } else {
                prob *= 1.0 - p;
                vectors[layer][unit] = 0.0;
            }
        }
        let masks = MaskSet::from_vectors(&vectors).unwrap();
        let (y, _) = forward_stochastic(spec, params, x, &masks).unwrap();
        outcomes.push((prob, y));
    }
    let mut mean = vec![0.0; d];
    for (p, y) in &outcomes {
        for j in 0..d {
            mean[j] += p * y[j];
        }
    }
    let mut var = vec![0.0; d];
    let mut m4 = vec![0.0; d];
    for (p, y) in &outcomes {
        for j in 0..d {
            let c = y[j] - mean[j];
            var[j] += p * c * c;
            m4[j] += p * c.powi(4);
        }
    }
    (mean, var, m4)
}

/// Standard deviation of the biased sample variance of `t` i.i.d. draws.
pub fn sample_variance_se(var: f64, m4: f64, t: usize) -> f64 {
    let t = t as f64;
    let unbiased = (m4 - var * var * (t - 3.0) / (t - 1.0)) / t;
    (((t - 1.0) / t).powi(2) * unbiased).max(0.0).sqrt()
}

/// Gaussian-mixture log-density computed by summing densities directly
/// (no log-sum-exp), for inputs where the densities do not underflow.
pub fn direct_log_likelihood(samples: &Matrix, y: &[f64], tau: f64) -> f64 {
    let norm = (tau / (2.0 * std::f64::consts::PI)).sqrt();
    let mut total = 0.0;
    for row in samples.row_iter() {
        let mut density = 1.0;
        for (a, b) in row.iter().zip(y) {
            density *= norm * (-0.5 * tau * (a - b) * (a - b)).exp();
        }
        total += density;
    }
    (total / samples.rows() as f64).ln()
}

/// Inverse of a small dense matrix by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let pivot = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, pivot);
        let inv = 1.0 / m[c][c];
        for v in m[c].iter_mut() {
            *v *= inv;
        }
        for r in 0..n {
            if r != c {
                let factor = m[r][c];
                if factor != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= factor * m[c][k];
                    }
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| m[i][n + j])
}
