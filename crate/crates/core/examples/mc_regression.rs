//! Train a small dropout network on noisy samples of `x sin x` and read
//! predictive uncertainty out of it with MC dropout.
//!
//! The printout covers twice the training interval, so the predictive std
//! inside it can be compared with the std away from the data.

use mcdrop::nn::{Activation, LossKind, NetworkParams, NetworkSpec, Targets};
use mcdrop::optim::{train, OptimizerConfig, TrainConfig};
use mcdrop::uncertainty::{mc_predict_batch, tau_from_weight_decay};
use mcdrop::{Matrix, RngStream};

fn main() -> mcdrop::Result<()> {
    let mut rng = RngStream::new(3, 0);
    let n = 120;
    let xs: Vec<f64> = (0..n).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x.sin() + 0.1 * rng.normal()).collect();
    let x = Matrix::column_vector(&xs);
    let y = Matrix::column_vector(&ys);

    let (keep, l, lambda) = (0.9, 1.0, 1e-4);
    let tau = tau_from_weight_decay(keep, l, n, lambda)?;
    let spec = NetworkSpec::uniform(vec![1, 100, 100, 1], Activation::Relu, keep, LossKind::Euclidean, lambda)?;
    let mut params = NetworkParams::init(&spec, &mut rng.fork(1));
    let cfg = TrainConfig { epochs: 600, batch_size: 16, optimizer: OptimizerConfig::adam(3e-3) };
    let log = train(&spec, &mut params, &x, &Targets::Regression(y), &cfg, &mut rng.fork(2))?;
    println!("tau = {tau:.1}, final objective {:.4}", log.epoch_losses.last().unwrap());

    let grid: Vec<f64> = (0..=16).map(|i| -6.0 + 0.75 * i as f64).collect();
    let preds = mc_predict_batch(&spec, &params, &Matrix::column_vector(&grid), 500, tau, &mut rng.fork(3))?;
    println!("{:>6} {:>9} {:>9} {:>8}", "x", "truth", "mean", "std");
    for (x, p) in grid.iter().zip(&preds) {
        println!("{x:6.2} {:9.3} {:9.3} {:8.3}", x * x.sin(), p.mean[0], p.std()[0]);
    }
    Ok(())
}
