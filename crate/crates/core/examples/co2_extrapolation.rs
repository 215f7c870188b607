//! Extrapolating a CO2-like monthly series with ReLU and TanH MC-dropout
//! networks and a GP, then comparing how uncertainty grows away from the data.
//!
//! Run with `cargo run --release --example co2_extrapolation [csv] [seed]`.
//! Without a CSV, the bundled synthetic series is used. Curves are written to
//! `co2_curves.csv` in the current directory.

use std::path::Path;
use std::time::Instant;

use mcdrop::data::{load_csv, synthetic::co2_like};
use mcdrop::experiments::{run_co2_experiment, Co2Config};

fn main() -> mcdrop::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = match args.first() {
        Some(path) => load_csv(path, &[-1])?,
        None => co2_like(204, 1958.0, 7)?,
    };
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut cfg = Co2Config::fast();
    if let Ok(e) = std::env::var("CO2_EPOCHS") {
        cfg.epochs = e.parse().expect("CO2_EPOCHS must be an integer");
    }
    let start = Instant::now();
    let result = run_co2_experiment(&data, &cfg, seed)?;
    println!("{} points, tau = {:.1}, {:.1?}", data.len(), result.tau, start.elapsed());
    for (name, loss) in &result.final_train_loss {
        println!("final training objective ({name}): {loss:.5}");
    }
    println!("far / train std ratio, ReLU: {:.3}", result.relu_std_ratio);
    println!("far / train std ratio, TanH: {:.3}", result.tanh_std_ratio);
    println!(
        "mean |mean(T={}) - mean(T={})|: {:.4}",
        cfg.few_samples, cfg.samples, result.few_sample_mean_deviation
    );
    result.write_curves_csv(Path::new("co2_curves.csv"))?;
    Ok(())
}
