use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt, write_csv, RESULTS_SCHEMA_VERSION};
use crate::data::{normalize, Dataset};
use crate::error::{Error, Result};
use crate::gp::{fit_by_grid_search, gp_predict, GpGrid};
use crate::nn::{predict_weight_averaged, Activation, LossKind, NetworkParams, NetworkSpec, Targets};
use crate::numerics::{mean, Matrix, RngStream};
use crate::optim::{train, InverseDecay, OptimizerConfig, TrainConfig};
use crate::uncertainty::{mc_predict_batch, tau_from_weight_decay};

/// Deep extrapolation networks on a scalar time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Co2Config {
    pub hidden_layers: usize,
    pub width: usize,
    pub keep_prob: f64,
    /// Keep probability of the scalar input itself. Dropping the only input
    /// makes a pass predict `f(0)` regardless of `x`, so it is off by default.
    pub input_keep_prob: f64,
    pub weight_decay: f64,
    /// Prior length-scale used only to turn the weight decay into a precision.
    pub length_scale: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    /// Stochastic passes for the reference curves.
    pub samples: usize,
    /// Stochastic passes for the cheap ReLU curve compared against the reference.
    pub few_samples: usize,
    pub grid_points: usize,
    /// The prediction grid extends this many training-range widths past the data.
    pub extrapolation: f64,
    /// Outer fraction of the extrapolation interval treated as "far" from the data.
    pub far_fraction: f64,
}

impl Default for Co2Config {
    fn default() -> Self {
        Co2Config {
            hidden_layers: 5,
            width: 1024,
            keep_prob: 0.9,
            input_keep_prob: 1.0,
            weight_decay: 1e-6,
            length_scale: 1.0,
            epochs: 300,
            batch_size: 32,
            step_size: 1e-3,
            samples: 1000,
            few_samples: 10,
            grid_points: 150,
            extrapolation: 1.0,
            far_fraction: 0.5,
        }
    }
}

impl Co2Config {
    /// Narrower networks for quick runs and CI.
    pub fn fast() -> Self {
        Co2Config {
            width: 256,
            ..Co2Config::default()
        }
    }

    fn spec(&self, activation: Activation) -> Result<NetworkSpec> {
        let mut widths = vec![1];
        widths.extend(std::iter::repeat(self.width).take(self.hidden_layers));
        widths.push(1);
        let mut keep = vec![self.keep_prob; widths.len() - 1];
        keep[0] = self.input_keep_prob;
        NetworkSpec::new(widths, activation, keep, LossKind::Euclidean, self.weight_decay)
    }
}

/// One model's predictive curve over the grid (normalised units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Co2Curve {
    pub name: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Co2Result {
    pub schema_version: u32,
    pub tau: f64,
    /// Normalised inputs at which every curve is evaluated.
    pub grid: Vec<f64>,
    pub train_range: (f64, f64),
    pub far_start: f64,
    pub curves: Vec<Co2Curve>,
    /// Mean predictive std over the far region divided by that over the
    /// training range, for the ReLU and TanH MC curves.
    pub relu_std_ratio: f64,
    pub tanh_std_ratio: f64,
    /// Mean absolute difference between the few-sample and reference ReLU mean curves.
    pub few_sample_mean_deviation: f64,
    pub final_train_loss: Vec<(String, f64)>,
}

impl Co2Result {
    pub fn curve(&self, name: &str) -> Option<&Co2Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// Ratio of mean std in the far region to mean std over the training range.
    pub fn std_ratio(&self, curve: &Co2Curve) -> f64 {
        let (lo, hi) = self.train_range;
        let pick = |keep: &dyn Fn(f64) -> bool| -> f64 {
            let v: Vec<f64> = self
                .grid
                .iter()
                .zip(&curve.std)
                .filter(|(x, _)| keep(**x))
                .map(|(_, s)| *s)
                .collect();
            mean(&v)
        };
        pick(&|x| x >= self.far_start) / pick(&|x| x >= lo && x <= hi)
    }

    /// Long-format CSV: `model,x,mean,std`.
    pub fn write_curves_csv(&self, path: &Path) -> Result<()> {
        let rows = self.curves.iter().flat_map(|c| {
            self.grid
                .iter()
                .zip(c.mean.iter().zip(&c.std))
                .map(move |(x, (m, s))| vec![c.name.clone(), fmt(*x), fmt(*m), fmt(*s)])
        });
        write_csv(path, &["model", "x", "mean", "std"], rows)
    }
}

fn train_variant(
    cfg: &Co2Config,
    activation: Activation,
    x: &Matrix,
    y: &Matrix,
    rng: &mut RngStream,
) -> Result<(NetworkSpec, NetworkParams, f64)> {
    let spec = cfg.spec(activation)?;
    let mut params = NetworkParams::init(&spec, rng);
    let steps_per_epoch = x.rows().div_ceil(cfg.batch_size) as f64;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        // decays the step to roughly a third by the final epoch
        optimizer: OptimizerConfig::adam(cfg.step_size).with_schedule(InverseDecay {
            gamma: 10.0 / (cfg.epochs as f64 * steps_per_epoch),
            power: 0.5,
        }),
    };
    let log = train(&spec, &mut params, x, &Targets::Regression(y.clone()), &train_cfg, rng)?;
    Ok((spec, params, *log.epoch_losses.last().unwrap_or(&f64::NAN)))
}

fn mc_curve(
    name: &str,
    spec: &NetworkSpec,
    params: &NetworkParams,
    grid: &Matrix,
    t: usize,
    tau: f64,
    rng: &mut RngStream,
) -> Result<Co2Curve> {
    let preds = mc_predict_batch(spec, params, grid, t, tau, rng)?;
    Ok(Co2Curve {
        name: name.into(),
        mean: preds.iter().map(|p| p.mean[0]).collect(),
        std: preds.iter().map(|p| p.variance[0].sqrt()).collect(),
    })
}

/// Fits ReLU and TanH MC-dropout networks and a GP to the (normalised)
/// series and evaluates all of them on a grid that runs past the data.
///
/// Curves: `weight_averaged` (ReLU net, deterministic, std 0), `mc_relu`,
/// `mc_relu_few`, `mc_tanh` and `gp`.
pub fn run_co2_experiment(data: &Dataset, cfg: &Co2Config, seed: u64) -> Result<Co2Result> {
    if data.input_dim() != 1 || data.output_dim() != 1 {
        return Err(Error::Experiment("the extrapolation experiment needs one input and one target".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.samples == 0 || cfg.few_samples == 0 || cfg.grid_points < 4 {
        return Err(Error::Config("epochs, batch size, sample counts and grid size must be positive".into()));
    }
    let norm = normalize(data)?;
    let (x, y) = (&norm.x, &norm.y);
    let xs = x.column(0);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let end = hi + cfg.extrapolation * (hi - lo);
    let far_start = end - cfg.far_fraction * (end - hi);
    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|i| lo + (end - lo) * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let gm = Matrix::column_vector(&grid);
    let tau = tau_from_weight_decay(cfg.keep_prob, cfg.length_scale, norm.len(), cfg.weight_decay)?;

    let master = RngStream::new(seed, 0);
    let (relu_spec, relu, relu_loss) = train_variant(cfg, Activation::Relu, x, y, &mut master.fork(1))?;
    let (tanh_spec, tanh, tanh_loss) = train_variant(cfg, Activation::Tanh, x, y, &mut master.fork(2))?;

    let wa = predict_weight_averaged(&relu_spec, &relu, &gm)?;
    let mut curves = vec![Co2Curve {
        name: "weight_averaged".into(),
        mean: wa.column(0),
        std: vec![0.0; grid.len()],
    }];
    curves.push(mc_curve("mc_relu", &relu_spec, &relu, &gm, cfg.samples, tau, &mut master.fork(3))?);
    curves.push(mc_curve("mc_relu_few", &relu_spec, &relu, &gm, cfg.few_samples, tau, &mut master.fork(4))?);
    curves.push(mc_curve("mc_tanh", &tanh_spec, &tanh, &gm, cfg.samples, tau, &mut master.fork(5))?);

    let post = fit_by_grid_search(x, &y.column(0), &GpGrid::default())?;
    let mut gp = Co2Curve {
        name: "gp".into(),
        mean: Vec::with_capacity(grid.len()),
        std: Vec::with_capacity(grid.len()),
    };
    for g in &grid {
        let (m, v) = gp_predict(&post, &[*g])?;
        gp.mean.push(m);
        gp.std.push(v.sqrt());
    }
    curves.push(gp);

    let mut result = Co2Result {
        schema_version: RESULTS_SCHEMA_VERSION,
        tau,
        grid,
        train_range: (lo, hi),
        far_start,
        curves,
        relu_std_ratio: 0.0,
        tanh_std_ratio: 0.0,
        few_sample_mean_deviation: 0.0,
        final_train_loss: vec![("mc_relu".into(), relu_loss), ("mc_tanh".into(), tanh_loss)],
    };
    let c = |n: &str| result.curve(n).expect("curve present").clone();
    let (relu_c, few_c, tanh_c) = (c("mc_relu"), c("mc_relu_few"), c("mc_tanh"));
    result.relu_std_ratio = result.std_ratio(&relu_c);
    result.tanh_std_ratio = result.std_ratio(&tanh_c);
    result.few_sample_mean_deviation = mean(
        &relu_c.mean.iter().zip(&few_c.mean).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>(),
    );
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::co2_like;

    fn tiny() -> Co2Config {
        Co2Config {
            hidden_layers: 2,
            width: 16,
            epochs: 5,
            samples: 20,
            grid_points: 20,
            ..Co2Config::default()
        }
    }

    #[test]
    fn produces_all_curves_on_the_grid() {
        let d = co2_like(60, 1960.0, 1).unwrap();
        let r = run_co2_experiment(&d, &tiny(), 3).unwrap();
        let names: Vec<&str> = r.curves.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["weight_averaged", "mc_relu", "mc_relu_few", "mc_tanh", "gp"]);
        for c in &r.curves {
            assert_eq!(c.mean.len(), 20);
            assert!(c.mean.iter().chain(&c.std).all(|v| v.is_finite()));
        }
        assert!(r.far_start > r.train_range.1);
        assert!(*r.grid.last().unwrap() > r.far_start);
        // the precision floor enters every MC std
        let floor = r.tau.recip().sqrt();
        assert!(r.curve("mc_tanh").unwrap().std.iter().all(|s| *s >= floor - 1e-12));
    }

    #[test]
    fn same_seed_same_curves() {
        let d = co2_like(40, 1960.0, 2).unwrap();
        let a = run_co2_experiment(&d, &tiny(), 8).unwrap();
        let b = run_co2_experiment(&d, &tiny(), 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_multivariate_input() {
        let d = Dataset::new("x", Matrix::zeros(5, 2), Matrix::zeros(5, 1)).unwrap();
        assert!(matches!(run_co2_experiment(&d, &tiny(), 0), Err(Error::Experiment(_))));
    }
}
