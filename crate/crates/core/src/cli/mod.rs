//! The `mcdrop` command line.
//!
//! Every subcommand resolves its settings in three layers: built-in
//! defaults, then an optional JSON `--config` file, then trailing
//! `key=value` overrides (dotted keys reach nested fields, values are parsed
//! as JSON and fall back to plain strings). Unknown keys are usage errors.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! All randomness derives from `--seed`; with `--threads 1` outputs are
//! byte-identical across runs, and the parallel code paths are written so
//! that other thread counts give the same bytes too.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::synthetic::{co2_like, synthetic_digits};
use crate::data::{parse_csv, Dataset, DatasetManifest, ImageDataset};
use crate::error::Error;
use crate::experiments::{
    run_co2_experiment, run_regression_benchmark, run_rotated_digit, train_digit_classifier, write_json, Co2Config,
    DigitConfig, RegressionProtocol, RESULTS_SCHEMA_VERSION,
};
use crate::nn::{Activation, LossKind, Network, NetworkSpec, Targets};
use crate::numerics::{Matrix, RngStream};
use crate::optim::{train, OptimizerConfig, TrainConfig};
use crate::rl::{run_comparison, RlConfig, Strategy};
use crate::uncertainty::{mc_predict_batch, PrecisionLink};

/// Master seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

const BUNDLED_REGRESSION: &str = include_str!("../../fixtures/regression_synthetic.csv");

#[derive(Debug, Parser)]
#[command(name = "mcdrop", version, about = "MC-dropout training, prediction and experiments")]
struct Cli {
    /// JSON file with settings for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "mcdrop-out", value_name = "DIR")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Number of stochastic forward passes.
    #[arg(short = 'T', global = true, value_name = "COUNT")]
    passes: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a regression network and write a checkpoint plus its loss log.
    Train(DataArgs),
    /// MC-dropout predictions from a checkpoint.
    Predict(PredictArgs),
    /// Regression benchmark over random splits with a precision grid search.
    Bench(DataArgs),
    /// Extrapolation of a monthly CO2-like series.
    Co2(DataArgs),
    /// Stochastic passes of a digit classifier over a rotated image.
    Digit(DataArgs),
    /// Epsilon-greedy vs Thompson-sampling agents in the foraging world.
    Rl(RlArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file; the last column is the target.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Dataset manifest (JSON) to pick `--dataset` from.
    #[arg(long, value_name = "PATH", requires = "dataset")]
    manifest: Option<PathBuf>,
    #[arg(long, value_name = "NAME", requires = "manifest")]
    dataset: Option<String>,
    /// Setting overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// CSV of inputs, optionally followed by target columns.
    #[arg(long, value_name = "PATH")]
    inputs: PathBuf,
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct RlArgs {
    /// Batches per strategy, burn-in included.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Settings for `train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Keep probability before every weight layer.
    pub keep_prob: f64,
    pub length_scale: f64,
    /// Weight decay λ; ignored when `tau` is set.
    pub weight_decay: f64,
    /// Target model precision; λ is then derived from it.
    pub tau: Option<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            hidden: vec![50],
            activation: Activation::Relu,
            keep_prob: 0.9,
            length_scale: 1e-2,
            weight_decay: 1e-6,
            tau: None,
            epochs: 400,
            batch_size: 32,
            step_size: 1e-3,
        }
    }
}

/// Settings for `predict`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictSettings {
    /// Overrides the precision stored in the checkpoint.
    pub tau: Option<f64>,
}

/// Settings for `digit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DigitSettings {
    /// Size of the generated training set when no dataset is given.
    pub train_size: usize,
    /// Class of the image that gets rotated.
    pub digit: u8,
    pub model: DigitConfig,
}

impl Default for DigitSettings {
    fn default() -> Self {
        DigitSettings {
            train_size: 2000,
            digit: 1,
            model: DigitConfig { epochs: 5, ..DigitConfig::default() },
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Messages go to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let passes = cli.passes;
    if passes == Some(0) {
        return usage("-T must be at least 1");
    }
    match &cli.command {
        Command::Train(a) => {
            no_passes(passes, "train")?;
            cmd_train(cli, a)
        }
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
        Command::Co2(a) => cmd_co2(cli, a),
        Command::Digit(a) => cmd_digit(cli, a),
        Command::Rl(a) => {
            no_passes(passes, "rl")?;
            cmd_rl(cli, a)
        }
    }
}

fn no_passes(passes: Option<usize>, cmd: &str) -> CliResult<()> {
    match passes {
        Some(_) => usage(format!("-T has no effect on `{cmd}`")),
        None => Ok(()),
    }
}

/// Defaults, then the config file, then `key=value` overrides.
fn resolve<T>(config: Option<&Path>, overrides: &[String]) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let mut value = serde_json::to_value(T::default()).map_err(Error::from)?;
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
        if !file.is_object() {
            return usage("--config must hold a JSON object");
        }
        merge(&mut value, file);
    }
    for o in overrides {
        let Some((key, raw)) = o.split_once('=') else {
            return usage(format!("expected KEY=VALUE, got {o:?}"));
        };
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut value;
        for part in key.split('.') {
            slot = match slot.as_object_mut().and_then(|m| m.get_mut(part)) {
                Some(v) => v,
                None => return usage(format!("unknown setting {key:?}")),
            };
        }
        *slot = parsed;
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid settings: {e}")))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn regression_data(a: &DataArgs) -> CliResult<Option<Dataset>> {
    if let Some(path) = &a.data {
        if a.manifest.is_some() {
            return usage("use either --data or --manifest, not both");
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--data {}: {e}", path.display())))?;
        let name = path.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
        return Ok(Some(parse_csv(&text, &[-1], name)?));
    }
    match (&a.manifest, &a.dataset) {
        (Some(m), Some(name)) => Ok(Some(DatasetManifest::load(m)?.regression(name)?)),
        _ => Ok(None),
    }
}

fn image_data(a: &DataArgs) -> CliResult<Option<ImageDataset>> {
    if a.data.is_some() {
        return usage("`digit` reads IDX files through --manifest and --dataset");
    }
    match (&a.manifest, &a.dataset) {
        (Some(m), Some(name)) => Ok(Some(DatasetManifest::load(m)?.images(name)?)),
        _ => Ok(None),
    }
}

fn out_file(cli: &Cli, name: &str) -> PathBuf {
    cli.out.join(name)
}

fn cmd_train(cli: &Cli, a: &DataArgs) -> CliResult<()> {
    let s: TrainSettings = resolve(cli.config.as_deref(), &a.overrides)?;
    let Some(data) = regression_data(a)? else {
        return usage("`train` needs --data <PATH> (or --manifest with --dataset)");
    };
    let n = data.len();
    let precision = match s.tau {
        Some(tau) => Some(PrecisionLink::from_tau(s.keep_prob, s.length_scale, n, tau)?),
        None if s.weight_decay > 0.0 => Some(PrecisionLink::from_weight_decay(
            s.keep_prob,
            s.length_scale,
            n,
            s.weight_decay,
        )?),
        None => None,
    };
    let lambda = precision.as_ref().map_or(s.weight_decay, |p| p.weight_decay);
    let mut widths = vec![data.input_dim()];
    widths.extend(&s.hidden);
    widths.push(data.output_dim());
    let spec = NetworkSpec::uniform(widths, s.activation, s.keep_prob, LossKind::Euclidean, lambda)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let master = RngStream::new(cli.seed, 0);
    let mut net = Network::init(spec, &mut master.fork(0));
    let cfg = TrainConfig {
        epochs: s.epochs,
        batch_size: s.batch_size,
        optimizer: OptimizerConfig::adam(s.step_size),
    };
    let log = train(
        &net.spec,
        &mut net.params,
        &data.x,
        &Targets::Regression(data.y.clone()),
        &cfg,
        &mut master.fork(1),
    )?;
    net.training_steps = log.steps;
    net.precision = precision;

    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let ckpt = out_file(cli, "checkpoint.json");
    net.save(&ckpt)?;
    let rows = log
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(i, l)| vec![(i + 1).to_string(), crate::experiments::fmt(*l)]);
    crate::experiments::write_csv(&out_file(cli, "train_loss.csv"), &["epoch", "loss"], rows)?;
    println!(
        "trained {} steps on {} points, final objective {:.6}; wrote {}",
        log.steps,
        n,
        log.epoch_losses.last().copied().unwrap_or(f64::NAN),
        ckpt.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow {
    mean: Vec<f64>,
    variance: Vec<f64>,
    std: Vec<f64>,
    /// Smallest and largest pass output per dimension.
    pass_min: Vec<f64>,
    pass_max: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_likelihood: Option<f64>,
}

#[derive(Serialize)]
struct PredictOutput {
    schema_version: u32,
    passes: usize,
    tau: f64,
    predictions: Vec<PredictionRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_log_likelihood: Option<f64>,
}

fn cmd_predict(cli: &Cli, a: &PredictArgs) -> CliResult<()> {
    let s: PredictSettings = resolve(cli.config.as_deref(), &a.overrides)?;
    let net = Network::load(&a.checkpoint)
        .map_err(|e| CliError::Usage(format!("--checkpoint {}: {e}", a.checkpoint.display())))?;
    let tau = match s.tau.or(net.tau()) {
        Some(t) if t > 0.0 => t,
        Some(t) => return usage(format!("tau must be positive, got {t}")),
        None => return usage("the checkpoint has no precision; pass tau=<value>"),
    };
    let text = fs::read_to_string(&a.inputs)
        .map_err(|e| CliError::Usage(format!("--inputs {}: {e}", a.inputs.display())))?;
    let (q, d) = (net.spec.input_dim(), net.spec.output_dim());
    let probe = parse_csv(&text, &[-1], "inputs")?;
    let width = probe.input_dim() + 1;
    let (x, y) = if width == q {
        let x = Matrix::from_fn(probe.len(), q, |i, j| {
            if j < q - 1 { probe.x.get(i, j) } else { probe.y.get(i, 0) }
        });
        (x, None)
    } else if width == q + d {
        let targets: Vec<isize> = (0..d as isize).map(|k| k - d as isize).collect();
        let full = parse_csv(&text, &targets, "inputs")?;
        (full.x, Some(full.y))
    } else {
        return usage(format!(
            "--inputs has {width} columns; the checkpoint expects {q} inputs (plus {d} optional targets)"
        ));
    };
    let t = cli.passes.unwrap_or(100);
    let summaries = mc_predict_batch(&net.spec, &net.params, &x, t, tau, &mut RngStream::new(cli.seed, 0))?;
    let mut rows = Vec::with_capacity(summaries.len());
    let mut total_ll = 0.0;
    for (i, s) in summaries.iter().enumerate() {
        let ll = match &y {
            Some(y) => Some(s.log_likelihood(y.row(i))?),
            None => None,
        };
        total_ll += ll.unwrap_or(0.0);
        rows.push(PredictionRow {
            mean: s.mean.clone(),
            variance: s.variance.clone(),
            std: s.std(),
            pass_min: (0..d).map(|j| s.samples.column(j).into_iter().fold(f64::INFINITY, f64::min)).collect(),
            pass_max: (0..d).map(|j| s.samples.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect(),
            log_likelihood: ll,
        });
    }
    let out = PredictOutput {
        schema_version: RESULTS_SCHEMA_VERSION,
        passes: t,
        tau,
        mean_log_likelihood: y.as_ref().map(|_| total_ll / rows.len() as f64),
        predictions: rows,
    };
    let path = out_file(cli, "predictions.json");
    write_json(&path, &out)?;
    match out.mean_log_likelihood {
        Some(ll) => println!("{} predictions, mean log-likelihood {ll:.4}; wrote {}", out.predictions.len(), path.display()),
        None => println!("{} predictions; wrote {}", out.predictions.len(), path.display()),
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, a: &DataArgs) -> CliResult<()> {
    let mut protocol: RegressionProtocol = resolve(cli.config.as_deref(), &a.overrides)?;
    if let Some(t) = cli.passes {
        protocol.samples = t;
    }
    let data = match regression_data(a)? {
        Some(d) => d,
        None => parse_csv(BUNDLED_REGRESSION, &[-1], "synthetic")?,
    };
    let result = run_regression_benchmark(&data, &protocol, cli.seed)?;
    let path = out_file(cli, "benchmark.json");
    write_json(&path, &result)?;
    println!(
        "{}: RMSE {:.4} ± {:.4}, log-likelihood {:.4} ± {:.4} over {} splits; wrote {}",
        result.dataset,
        result.rmse_mean,
        result.rmse_stderr,
        result.ll_mean,
        result.ll_stderr,
        result.splits.len(),
        path.display()
    );
    Ok(())
}

fn cmd_co2(cli: &Cli, a: &DataArgs) -> CliResult<()> {
    let mut cfg: Co2Config = resolve(cli.config.as_deref(), &a.overrides)?;
    if let Some(t) = cli.passes {
        cfg.samples = t;
    }
    let data = match regression_data(a)? {
        Some(d) => d,
        None => co2_like(204, 1958.0, cli.seed)?,
    };
    let result = run_co2_experiment(&data, &cfg, cli.seed)?;
    write_json(&out_file(cli, "co2.json"), &result)?;
    result.write_curves_csv(&out_file(cli, "co2_curves.csv"))?;
    println!(
        "far/train std ratio: ReLU {:.3}, TanH {:.3}; wrote {}",
        result.relu_std_ratio,
        result.tanh_std_ratio,
        cli.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AngleSummary {
    angle: f64,
    top_classes: [usize; 3],
    top_mean_prob: f64,
    top_two_envelopes_overlap: bool,
    predictive_entropy: f64,
    variation_ratio: f64,
    mean_probs: Vec<f64>,
}

#[derive(Serialize)]
struct DigitSummary {
    schema_version: u32,
    settings: DigitSettings,
    train_accuracy: f64,
    angles: Vec<AngleSummary>,
}

fn cmd_digit(cli: &Cli, a: &DataArgs) -> CliResult<()> {
    let mut s: DigitSettings = resolve(cli.config.as_deref(), &a.overrides)?;
    if let Some(t) = cli.passes {
        s.model.passes = t;
    }
    if s.digit > 9 {
        return usage(format!("digit must be 0..=9, got {}", s.digit));
    }
    let master = RngStream::new(cli.seed, 0);
    let data = match image_data(a)? {
        Some(d) => d,
        None => synthetic_digits(s.train_size, master.fork(0).seed())?,
    };
    if data.rows != 28 || data.cols != 28 {
        return Err(Error::Experiment(format!("expected 28x28 images, got {}x{}", data.rows, data.cols)).into());
    }
    let net = train_digit_classifier(&data, &s.model, master.fork(1).seed())?;
    let probe_set = synthetic_digits(10, master.fork(2).seed())?;
    let probe = (0..probe_set.len())
        .find(|&i| probe_set.labels[i] == s.digit)
        .expect("ten generated digits cover every class");
    let scatter = run_rotated_digit(&net, probe_set.image(probe), &s.model.angles, s.model.passes, master.fork(3).seed())?;

    let logits = crate::nn::predict_weight_averaged(&net.spec, &net.params, &data.images)?;
    let hits = (0..data.len())
        .filter(|&i| crate::uncertainty::argmax(logits.row(i)) == data.labels[i] as usize)
        .count();
    let summary = DigitSummary {
        schema_version: RESULTS_SCHEMA_VERSION,
        train_accuracy: hits as f64 / data.len() as f64,
        angles: scatter
            .angles
            .iter()
            .map(|a| AngleSummary {
                angle: a.angle,
                top_classes: a.top_classes,
                top_mean_prob: a.top_mean_prob(),
                top_two_envelopes_overlap: a.top_two_envelopes_overlap(),
                predictive_entropy: a.predictive_entropy,
                variation_ratio: a.variation_ratio,
                mean_probs: a.mean_probs.clone(),
            })
            .collect(),
        settings: s,
    };
    write_json(&out_file(cli, "digit_summary.json"), &summary)?;
    scatter.write_csv(&out_file(cli, "digit_scatter.csv"))?;
    println!(
        "training accuracy {:.3}; {} angles x {} passes; wrote {}",
        summary.train_accuracy,
        summary.angles.len(),
        scatter.passes,
        cli.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RlSummary {
    schema_version: u32,
    seed: u64,
    config: RlConfig,
    /// Post-burn-in batches until the average reward first beats the threshold.
    batches_to_threshold: Vec<(String, Option<usize>)>,
    median_learning_reward: Vec<(String, f64)>,
}

fn cmd_rl(cli: &Cli, a: &RlArgs) -> CliResult<()> {
    let mut cfg: RlConfig = resolve(cli.config.as_deref(), &a.overrides)?;
    if let Some(b) = a.batches {
        cfg.batches = b;
    }
    let result = run_comparison(&cfg, cli.seed)?;
    result.write_csv(&out_file(cli, "rl_rewards.csv"))?;
    let strategies = [Strategy::EpsilonGreedy, Strategy::Thompson];
    let summary = RlSummary {
        schema_version: RESULTS_SCHEMA_VERSION,
        seed: cli.seed,
        batches_to_threshold: strategies
            .iter()
            .map(|&s| (s.name().to_string(), result.batches_to_threshold(s)))
            .collect(),
        median_learning_reward: strategies
            .iter()
            .map(|&s| (s.name().to_string(), result.median_learning_reward(s)))
            .collect(),
        config: cfg,
    };
    write_json(&out_file(cli, "rl_summary.json"), &summary)?;
    for (name, b) in &summary.batches_to_threshold {
        match b {
            Some(b) => println!("{name}: reward above threshold after {b} batches"),
            None => println!("{name}: threshold not reached"),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields_and_reject_unknown_keys() {
        let cfg: RlConfig = resolve(None, &["world.num_items=7".into(), "hidden=[4,4]".into()]).unwrap();
        assert_eq!(cfg.world.num_items, 7);
        assert_eq!(cfg.hidden, vec![4, 4]);
        let s: TrainSettings = resolve(None, &["activation=tanh".into(), "tau=2.5".into()]).unwrap();
        assert_eq!(s.activation, Activation::Tanh);
        assert_eq!(s.tau, Some(2.5));
        assert!(matches!(resolve::<RlConfig>(None, &["nope=1".into()]), Err(CliError::Usage(_))));
        assert!(matches!(resolve::<RlConfig>(None, &["world.nope=1".into()]), Err(CliError::Usage(_))));
        assert!(matches!(resolve::<RlConfig>(None, &["gamma".into()]), Err(CliError::Usage(_))));
        assert!(matches!(resolve::<RlConfig>(None, &["gamma=fast".into()]), Err(CliError::Usage(_))));
    }

    #[test]
    fn config_file_is_layered_under_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"epochs": 7, "batch_size": 4}"#).unwrap();
        let s: TrainSettings = resolve(Some(&p), &["epochs=9".into()]).unwrap();
        assert_eq!((s.epochs, s.batch_size), (9, 4));
        fs::write(&p, r#"{"epochz": 7}"#).unwrap();
        assert!(matches!(resolve::<TrainSettings>(Some(&p), &[]), Err(CliError::Usage(_))));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["mcdrop", "frobnicate"]), 2);
        assert_eq!(run(["mcdrop", "train", "epochs=1"]), 2);
        assert_eq!(run(["mcdrop", "--help"]), 0);
    }
}
