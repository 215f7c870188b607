use mcdrop::data::normalize;
use mcdrop::data::synthetic::linear_gaussian;
use mcdrop::experiments::{grid_search_tau, run_regression_benchmark, tau_grid_around, RegressionProtocol};

const SIGMA: f64 = 0.5;

#[test]
fn benchmark_ll_approaches_the_generating_model() {
    let (data, _) = linear_gaussian(1000, 3, SIGMA, 5).unwrap();
    // expected log-density of N(0, σ²) noise under its own model
    let analytic = -0.5 * (2.0 * std::f64::consts::PI * SIGMA * SIGMA).ln() - 0.5;
    let protocol = RegressionProtocol { n_splits: 3, ..RegressionProtocol::default() };
    let r = run_regression_benchmark(&data, &protocol, 1).unwrap();
    assert!((r.ll_mean - analytic).abs() < 0.1, "LL {} vs {analytic}", r.ll_mean);
    assert!((r.rmse_mean - SIGMA).abs() < 0.05, "RMSE {}", r.rmse_mean);
}

#[test]
fn grid_search_finds_the_noise_precision() {
    let (data, _) = linear_gaussian(1000, 3, SIGMA, 5).unwrap();
    let norm = normalize(&data).unwrap();
    // precision of the noise in normalised target units
    let s = norm.stats.target_stds[0];
    let truth = s * s / (SIGMA * SIGMA);
    let grid = tau_grid_around(truth, 9);
    let step = grid[1] / grid[0];
    let protocol = RegressionProtocol {
        tau_grid: Some(grid),
        keep_prob_grid: vec![0.995],
        search_epochs: 100,
        search_samples: 200,
        ..RegressionProtocol::default()
    };
    for seed in 0..2 {
        let (best, cells) = grid_search_tau(&norm, &protocol, seed).unwrap();
        assert_eq!(cells.len(), 9);
        let ratio = best.tau / truth;
        assert!(ratio <= step * 1.0001 && ratio >= 1.0 / step / 1.0001, "picked {} for {truth}", best.tau);
    }
}
