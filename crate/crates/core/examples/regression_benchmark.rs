//! Split-based regression benchmark: precision grid search on a validation
//! split, retraining, and MC-dropout RMSE / log-likelihood in original units.
//!
//! `cargo run --release --example regression_benchmark [csv]`; without an
//! argument the bundled synthetic fixture is used with a short protocol.

use mcdrop::data::load_csv;
use mcdrop::experiments::{run_regression_benchmark, RegressionProtocol};

fn main() -> mcdrop::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/regression_synthetic.csv").into());
    let data = load_csv(&path, &[-1])?;
    let protocol = RegressionProtocol { n_splits: 5, epochs: 200, samples: 1000, ..RegressionProtocol::default() };
    let r = run_regression_benchmark(&data, &protocol, 1)?;
    for s in &r.splits {
        println!(
            "split {:2}: τ={:8.3} p={:.3}  RMSE {:.4}  LL {:7.4}  (weight-averaged RMSE {:.4})",
            s.split, s.tau, s.keep_prob, s.rmse, s.ll, s.rmse_weight_averaged
        );
    }
    println!("RMSE {:.4} ± {:.4}, LL {:.4} ± {:.4}", r.rmse_mean, r.rmse_stderr, r.ll_mean, r.ll_stderr);
    Ok(())
}
