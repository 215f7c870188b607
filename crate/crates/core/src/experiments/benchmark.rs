use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RESULTS_SCHEMA_VERSION;
use crate::data::{make_split, normalize, Dataset, SplitPlan};
use crate::error::{Error, Result};
use crate::nn::{predict_weight_averaged, Activation, LossKind, NetworkParams, NetworkSpec, Targets};
use crate::numerics::{mean, sample_std, Matrix, RngStream};
use crate::optim::{train, OptimizerConfig, TrainConfig};
use crate::uncertainty::{mc_samples, predictive_log_likelihood, weight_decay_from_tau};

/// Settings of the regression benchmark. Defaults: one hidden layer of 50
/// ReLU units, 20 random 90/10 splits, keep probabilities {0.95, 0.995},
/// prior length-scale 1e-2, batch size 32 and 10 000 test-time passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionProtocol {
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub n_splits: usize,
    pub train_fraction: f64,
    pub keep_prob_grid: Vec<f64>,
    pub length_scale: f64,
    /// Explicit precision grid (normalised target units); when absent, ten
    /// log-spaced values spanning four decades around `1/var(y)`.
    pub tau_grid: Option<Vec<f64>>,
    pub validation_fraction: f64,
    pub search_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    /// Stochastic passes used to score validation folds.
    pub search_samples: usize,
    /// Stochastic passes used on the test split.
    pub samples: usize,
}

impl Default for RegressionProtocol {
    fn default() -> Self {
        RegressionProtocol {
            hidden_units: 50,
            hidden_layers: 1,
            n_splits: 20,
            train_fraction: 0.9,
            keep_prob_grid: vec![0.95, 0.995],
            length_scale: 1e-2,
            tau_grid: None,
            validation_fraction: 0.2,
            search_epochs: 40,
            epochs: 400,
            batch_size: 32,
            step_size: 1e-3,
            search_samples: 100,
            samples: 10_000,
        }
    }
}

impl RegressionProtocol {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.keep_prob_grid.is_empty() || self.tau_grid.as_ref().is_some_and(Vec::is_empty) {
            return bad("precision and keep-probability grids must be non-empty");
        }
        if self.keep_prob_grid.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return bad("keep probabilities must lie in (0, 1]");
        }
        if self.tau_grid.iter().flatten().any(|t| !(*t > 0.0)) {
            return bad("precisions must be positive");
        }
        if self.epochs == 0 || self.search_epochs == 0 || self.batch_size == 0 || self.n_splits == 0 {
            return bad("epochs, batch size and split count must be positive");
        }
        if self.samples == 0 || self.search_samples == 0 || self.hidden_units == 0 {
            return bad("sample counts and hidden units must be positive");
        }
        Ok(())
    }

    fn spec(&self, q: usize, d: usize, keep_prob: f64, weight_decay: f64) -> Result<NetworkSpec> {
        let mut widths = vec![q];
        widths.extend(std::iter::repeat(self.hidden_units).take(self.hidden_layers));
        widths.push(d);
        NetworkSpec::uniform(widths, Activation::Relu, keep_prob, LossKind::Euclidean, weight_decay)
    }

    fn taus(&self, y: &Matrix) -> Vec<f64> {
        match &self.tau_grid {
            Some(g) => g.clone(),
            None => {
                let var = mean(&y.column(0).iter().map(|v| v * v).collect::<Vec<_>>())
                    - mean(&y.column(0)).powi(2);
                tau_grid_around(1.0 / var.max(1e-12), 10)
            }
        }
    }
}

/// `count` log-spaced values from `centre/100` to `centre·100`.
pub fn tau_grid_around(centre: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![centre];
    }
    (0..count)
        .map(|i| centre * 10f64.powf(-2.0 + 4.0 * i as f64 / (count - 1) as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub tau: f64,
    pub keep_prob: f64,
    /// Mean validation log-likelihood per point.
    pub validation_ll: f64,
}

/// Trains with weight decay set from `(p, l, N, τ)` and returns the network.
fn fit(
    protocol: &RegressionProtocol,
    train_set: &Dataset,
    keep_prob: f64,
    tau: f64,
    epochs: usize,
    rng: &mut RngStream,
) -> Result<(NetworkSpec, NetworkParams)> {
    let lambda = weight_decay_from_tau(keep_prob, protocol.length_scale, train_set.len(), tau)?;
    let spec = protocol.spec(train_set.input_dim(), train_set.output_dim(), keep_prob, lambda)?;
    let mut params = NetworkParams::init(&spec, rng);
    let cfg = TrainConfig {
        epochs,
        batch_size: protocol.batch_size,
        optimizer: OptimizerConfig::adam(protocol.step_size),
    };
    train(&spec, &mut params, &train_set.x, &Targets::Regression(train_set.y.clone()), &cfg, rng)?;
    Ok((spec, params))
}

struct Scores {
    rmse: f64,
    ll: f64,
    rmse_weight_averaged: f64,
}

/// MC-dropout RMSE and mean predictive log-likelihood on `test`, reported in
/// original target units. The log-likelihood gains `−log sᵈ` per point from
/// the change of variables `y = μ + s·ỹ`.
fn score(
    spec: &NetworkSpec,
    params: &NetworkParams,
    test: &Dataset,
    tau: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<Scores> {
    let passes = mc_samples(spec, params, &test.x, t, rng)?;
    let stds = &test.stats.target_stds;
    let log_jacobian: f64 = stds.iter().map(|s| s.ln()).sum();
    let d = test.output_dim();
    let wa = predict_weight_averaged(spec, params, &test.x)?;
    let (mut se, mut se_wa, mut ll) = (0.0, 0.0, 0.0);
    for n in 0..test.len() {
        let mut samples = Vec::with_capacity(t * d);
        for p in &passes {
            samples.extend_from_slice(p.row(n));
        }
        let samples = Matrix::new(t, d, samples)?;
        let y = test.y.row(n);
        ll += predictive_log_likelihood(&samples, y, tau)? - log_jacobian;
        let m = samples.mean_rows();
        for j in 0..d {
            se += ((m[j] - y[j]) * stds[j]).powi(2);
            se_wa += ((wa.get(n, j) - y[j]) * stds[j]).powi(2);
        }
    }
    let denom = (test.len() * d) as f64;
    Ok(Scores {
        rmse: (se / denom).sqrt(),
        ll: ll / test.len() as f64,
        rmse_weight_averaged: (se_wa / denom).sqrt(),
    })
}

/// Best cell by validation log-likelihood; equal scores go to the larger
/// precision, then to the earlier cell. Non-finite scores never win.
pub fn select_best(cells: &[GridCell]) -> Option<GridCell> {
    cells
        .iter()
        .filter(|c| c.validation_ll.is_finite())
        .fold(None, |best: Option<GridCell>, c| match best {
            Some(b) if b.validation_ll > c.validation_ll => Some(b),
            Some(b) if b.validation_ll == c.validation_ll && b.tau >= c.tau => Some(b),
            _ => Some(*c),
        })
}

/// Evaluates every `(τ, p)` cell on an inner validation fold of a normalised
/// training set. Returns the winning cell and all scored cells.
pub fn grid_search_tau(
    train_set: &Dataset,
    protocol: &RegressionProtocol,
    seed: u64,
) -> Result<(GridCell, Vec<GridCell>)> {
    protocol.validate()?;
    let taus = protocol.taus(&train_set.y);
    let cells: Vec<(f64, f64)> = protocol
        .keep_prob_grid
        .iter()
        .flat_map(|&p| taus.iter().map(move |&t| (t, p)))
        .collect();
    if cells.len() == 1 {
        let (tau, keep_prob) = cells[0];
        let only = GridCell { tau, keep_prob, validation_ll: f64::NAN };
        return Ok((only, vec![only]));
    }
    let plan = SplitPlan {
        seed,
        train_fraction: 1.0 - protocol.validation_fraction,
        split_index: u64::MAX,
    };
    let (inner, valid) = make_split(train_set, &plan)?;
    let master = RngStream::new(seed, 1);
    let scored: Vec<GridCell> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(tau, keep_prob))| {
            let mut rng = master.fork(i as u64);
            let validation_ll = fit(protocol, &inner, keep_prob, tau, protocol.search_epochs, &mut rng)
                .and_then(|(spec, params)| score(&spec, &params, &valid, tau, protocol.search_samples, &mut rng))
                .map_or(f64::NAN, |s| s.ll);
            GridCell { tau, keep_prob, validation_ll }
        })
        .collect();
    let best = select_best(&scored)
        .ok_or_else(|| Error::Experiment("no grid cell produced a finite validation log-likelihood".into()))?;
    Ok((best, scored))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: u64,
    pub tau: f64,
    pub keep_prob: f64,
    pub rmse: f64,
    pub ll: f64,
    pub rmse_weight_averaged: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub schema_version: u32,
    pub dataset: String,
    pub n: usize,
    pub q: usize,
    pub protocol: RegressionProtocol,
    pub seed: u64,
    pub splits: Vec<SplitResult>,
    pub rmse_mean: f64,
    pub rmse_stderr: f64,
    pub ll_mean: f64,
    pub ll_stderr: f64,
    pub rmse_weight_averaged_mean: f64,
    /// Whether averaging stochastic passes beat weight averaging on mean RMSE
    /// (reported, never enforced).
    pub mc_mean_beats_weight_averaging: bool,
}

/// Mean and standard error (`sample std / √n`).
fn summarise(values: &[f64]) -> (f64, f64) {
    (mean(values), sample_std(values) / (values.len() as f64).sqrt())
}

/// Runs the full protocol on a raw (un-normalised) dataset: for each split,
/// normalise with training statistics, search the grid, retrain on the full
/// training split and score the test split in original units.
pub fn run_regression_benchmark(data: &Dataset, protocol: &RegressionProtocol, seed: u64) -> Result<BenchmarkResult> {
    protocol.validate()?;
    let raw = data.denormalized();
    let splits: Vec<SplitResult> = (0..protocol.n_splits as u64)
        .into_par_iter()
        .map(|split| -> Result<SplitResult> {
            let plan = SplitPlan { seed, train_fraction: protocol.train_fraction, split_index: split };
            let (train_raw, test_raw) = make_split(&raw, &plan)?;
            let train_set = normalize(&train_raw)?;
            let test_set = test_raw.normalized_with(&train_set.stats)?;
            let stream = RngStream::new(seed, 1000 + split);
            let (best, _) = grid_search_tau(&train_set, protocol, stream.fork(0).seed())?;
            let mut rng = stream.fork(1);
            let (spec, params) = fit(protocol, &train_set, best.keep_prob, best.tau, protocol.epochs, &mut rng)?;
            let s = score(&spec, &params, &test_set, best.tau, protocol.samples, &mut rng)?;
            if !s.ll.is_finite() || !s.rmse.is_finite() {
                return Err(Error::Experiment(format!("split {split} produced non-finite scores")));
            }
            Ok(SplitResult {
                split,
                tau: best.tau,
                keep_prob: best.keep_prob,
                rmse: s.rmse,
                ll: s.ll,
                rmse_weight_averaged: s.rmse_weight_averaged,
            })
        })
        .collect::<Result<_>>()?;
    let (rmse_mean, rmse_stderr) = summarise(&splits.iter().map(|s| s.rmse).collect::<Vec<_>>());
    let (ll_mean, ll_stderr) = summarise(&splits.iter().map(|s| s.ll).collect::<Vec<_>>());
    let rmse_weight_averaged_mean = mean(&splits.iter().map(|s| s.rmse_weight_averaged).collect::<Vec<_>>());
    Ok(BenchmarkResult {
        schema_version: RESULTS_SCHEMA_VERSION,
        dataset: data.name.clone(),
        n: data.len(),
        q: data.input_dim(),
        protocol: protocol.clone(),
        seed,
        splits,
        rmse_mean,
        rmse_stderr,
        ll_mean,
        ll_stderr,
        rmse_weight_averaged_mean,
        mc_mean_beats_weight_averaging: rmse_mean < rmse_weight_averaged_mean,
    })
}
