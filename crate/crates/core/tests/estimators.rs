mod common;

use common::{direct_log_likelihood, enumerate_moments, gauss_jordan_inverse, sample_variance_se};
use mcdrop::gp::{gp_fit, gp_predict, se_kernel, GpHyperparams};
use mcdrop::nn::{forward_weight_averaged, Activation, LossKind, NetworkParams, NetworkSpec};
use mcdrop::uncertainty::{mc_predict, predictive_log_likelihood};
use mcdrop::{Matrix, RngStream};
use proptest::prelude::*;

/// Random network with at most 12 droppable units.
fn small_net(rng: &mut RngStream, activation: Activation) -> (NetworkSpec, NetworkParams, Vec<f64>) {
    loop {
        let layers = 1 + rng.below(2);
        let widths: Vec<usize> = (0..=layers).map(|_| 1 + rng.below(6)).collect();
        let keep: Vec<f64> = (0..layers).map(|_| rng.uniform_range(0.3, 1.0)).collect();
        let droppable: usize = widths[..layers].iter().sum();
        if droppable > 12 {
            continue;
        }
        let spec = NetworkSpec::new(widths.clone(), activation, keep, LossKind::Euclidean, 0.0).unwrap();
        let mut params = NetworkParams::init(&spec, rng);
        for b in params.biases.iter_mut().flatten() {
            *b = 0.3 * rng.normal();
        }
        let x = (0..widths[0]).map(|_| rng.normal()).collect();
        return (spec, params, x);
    }
}

#[test]
fn mc_moments_agree_with_exact_enumeration() {
    let t = 20_000;
    for seed in 0..6 {
        let mut rng = RngStream::new(seed, 0);
        let act = if seed % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let (spec, params, x) = small_net(&mut rng, act);
        let (mean, var, m4) = enumerate_moments(&spec, &params, &x);
        let s = mc_predict(&spec, &params, &x, t, 1.0, &mut rng).unwrap();
        for j in 0..spec.output_dim() {
            let se_mean = (var[j] / t as f64).sqrt();
            assert!((s.mean[j] - mean[j]).abs() <= 5.0 * se_mean + 1e-12, "seed {seed} mean");
            let se_var = sample_variance_se(var[j], m4[j], t);
            assert!((s.variance[j] - 1.0 - var[j]).abs() <= 5.0 * se_var + 1e-12, "seed {seed} variance");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // For linear hidden layers the expectation over masks is the
    // weight-averaged network.
    #[test]
    fn linear_nets_average_exactly(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let (spec, params, x) = small_net(&mut rng, Activation::Identity);
        let (mean, _, _) = enumerate_moments(&spec, &params, &x);
        let avg = forward_weight_averaged(&spec, &params, &x).unwrap();
        for (a, b) in mean.iter().zip(&avg) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn log_likelihood_matches_direct_density_sum(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 2);
        let t = 1 + rng.below(50);
        let d = 1 + rng.below(5);
        let tau = rng.uniform_range(0.1, 10.0);
        let samples = Matrix::from_fn(t, d, |_, _| rng.normal());
        let y: Vec<f64> = (0..d).map(|_| 1.5 * rng.normal()).collect();
        let got = predictive_log_likelihood(&samples, &y, tau).unwrap();
        prop_assert!((got - direct_log_likelihood(&samples, &y, tau)).abs() < 1e-9);
    }

    #[test]
    fn variance_never_drops_below_the_noise_floor(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 3);
        let (spec, params, x) = small_net(&mut rng, Activation::Relu);
        let tau = rng.uniform_range(0.1, 100.0);
        let s = mc_predict(&spec, &params, &x, 1 + rng.below(30), tau, &mut rng).unwrap();
        prop_assert!(s.variance.iter().all(|v| *v >= 1.0 / tau - 1e-12));
    }
}

#[test]
fn gp_agrees_with_an_explicit_inverse() {
    let mut rng = RngStream::new(4, 0);
    for n in [1, 7, 30, 50] {
        let q = 1 + rng.below(3);
        let hyper = GpHyperparams::new(rng.uniform_range(0.5, 2.0), rng.uniform_range(0.3, 1.5), rng.uniform_range(0.01, 0.2)).unwrap();
        let x = Matrix::from_fn(n, q, |_, _| rng.uniform_range(-2.0, 2.0));
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let post = gp_fit(&x, &y, hyper).unwrap();
        let k = Matrix::from_fn(n, n, |i, j| {
            se_kernel(x.row(i), x.row(j), &hyper).unwrap() + if i == j { hyper.noise_variance } else { 0.0 }
        });
        let k_inv = gauss_jordan_inverse(&k);
        for _ in 0..5 {
            let xs: Vec<f64> = (0..q).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
            let ks: Vec<f64> = (0..n).map(|i| se_kernel(x.row(i), &xs, &hyper).unwrap()).collect();
            let kinv_ks = k_inv.matvec(&ks).unwrap();
            let mean: f64 = kinv_ks.iter().zip(&y).map(|(a, b)| a * b).sum();
            let var = hyper.signal_variance - ks.iter().zip(&kinv_ks).map(|(a, b)| a * b).sum::<f64>() + hyper.noise_variance;
            let (m, v) = gp_predict(&post, &xs).unwrap();
            assert!((m - mean).abs() < 1e-8 && (v - var).abs() < 1e-8, "n={n}: ({m}, {v}) vs ({mean}, {var})");
        }
        let far: Vec<f64> = vec![1e3; q];
        let (_, v) = gp_predict(&post, &far).unwrap();
        assert!((v - hyper.signal_variance - hyper.noise_variance).abs() < 1e-6);
    }
}
