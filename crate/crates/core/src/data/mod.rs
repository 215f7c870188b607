//! Dataset ingestion, normalisation, splitting and image handling.

mod csv;
mod idx;
mod image;
mod manifest;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Result};
use crate::numerics::{Matrix, RngStream};

pub use self::csv::{load_csv, parse_csv};
pub use self::idx::{encode_idx, load_idx, parse_idx, write_idx, ImageDataset};
pub use self::image::rotate_image;
pub use self::manifest::{DatasetManifest, ManifestEntry};

/// Per-column affine statistics: a stored value `v` stands for `mean + std·v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_means: Vec<f64>,
    pub target_stds: Vec<f64>,
}

impl NormStats {
    pub fn identity(q: usize, d: usize) -> Self {
        NormStats {
            feature_means: vec![0.0; q],
            feature_stds: vec![1.0; q],
            target_means: vec![0.0; d],
            target_stds: vec![1.0; d],
        }
    }
}

/// Regression data: `x` is `N × Q`, `y` is `N × D`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub y: Matrix,
    pub stats: NormStats,
}

/// Population mean and standard deviation of every column; constant columns
/// get standard deviation 1.
fn column_stats(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows() as f64;
    let means = m.mean_rows();
    let mut vars = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for ((v, &x), &mu) in vars.iter_mut().zip(row).zip(&means) {
            *v += (x - mu) * (x - mu);
        }
    }
    let stds = vars
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 * (1.0 + means.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
                s
            } else {
                1.0
            }
        })
        .collect();
    (means, stds)
}

fn standardize(m: &Matrix, means: &[f64], stds: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        for ((v, &mu), &s) in out.row_mut(r).iter_mut().zip(means).zip(stds) {
            *v = (*v - mu) / s;
        }
    }
    out
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(shape_err!("{} inputs but {} targets", x.rows(), y.rows()));
        }
        let stats = NormStats::identity(x.cols(), y.cols());
        Ok(Dataset {
            name: name.into(),
            x,
            y,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: self.x.select_rows(indices),
            y: self.y.select_rows(indices),
            stats: self.stats.clone(),
        }
    }

    /// Standardises with externally supplied statistics expressed in the
    /// original units (typically those of a training split).
    pub fn normalized_with(&self, stats: &NormStats) -> Result<Dataset> {
        if stats.feature_means.len() != self.x.cols() || stats.target_means.len() != self.y.cols() {
            return Err(shape_err!("statistics do not match the dataset's columns"));
        }
        let raw = self.denormalized();
        Ok(Dataset {
            name: self.name.clone(),
            x: standardize(&raw.x, &stats.feature_means, &stats.feature_stds),
            y: standardize(&raw.y, &stats.target_means, &stats.target_stds),
            stats: stats.clone(),
        })
    }

    /// Values back in original units, with identity statistics.
    pub fn denormalized(&self) -> Dataset {
        let s = &self.stats;
        Dataset {
            name: self.name.clone(),
            x: destandardize(&self.x, &s.feature_means, &s.feature_stds),
            y: self.denormalize_targets(&self.y),
            stats: NormStats::identity(self.x.cols(), self.y.cols()),
        }
    }

    /// Maps target rows from stored units back to original units.
    pub fn denormalize_targets(&self, y: &Matrix) -> Matrix {
        destandardize(y, &self.stats.target_means, &self.stats.target_stds)
    }
}

fn destandardize(m: &Matrix, means: &[f64], stds: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        for ((v, &mu), &s) in out.row_mut(r).iter_mut().zip(means).zip(stds) {
            *v = mu + s * *v;
        }
    }
    out
}

/// Centres every feature and target column and scales it to unit population
/// standard deviation. Statistics are stored (composed with any existing
/// ones) so predictions can be mapped back to original units.
pub fn normalize(dataset: &Dataset) -> Result<Dataset> {
    if dataset.len() < 2 {
        return Err(domain_err!("normalisation needs at least two rows"));
    }
    let (fm, fs) = column_stats(&dataset.x);
    let (tm, ts) = column_stats(&dataset.y);
    let old = &dataset.stats;
    let compose = |om: &[f64], os: &[f64], m: &[f64], s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            om.iter().zip(os).zip(m).map(|((a, b), c)| a + b * c).collect(),
            os.iter().zip(s).map(|(a, b)| a * b).collect(),
        )
    };
    let (feature_means, feature_stds) = compose(&old.feature_means, &old.feature_stds, &fm, &fs);
    let (target_means, target_stds) = compose(&old.target_means, &old.target_stds, &tm, &ts);
    Ok(Dataset {
        name: dataset.name.clone(),
        x: standardize(&dataset.x, &fm, &fs),
        y: standardize(&dataset.y, &tm, &ts),
        stats: NormStats {
            feature_means,
            feature_stds,
            target_means,
            target_stds,
        },
    })
}

/// Reproducible train/test partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train_fraction: f64,
    pub split_index: u64,
}

impl SplitPlan {
    /// Row indices `(train, test)` for a dataset of `n` rows.
    pub fn indices(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(domain_err!("train fraction {} outside (0, 1)", self.train_fraction));
        }
        if n < 2 {
            return Err(domain_err!("cannot split {n} rows"));
        }
        let mut rng = RngStream::new(self.seed, self.split_index);
        let perm = rng.permutation(n);
        let n_train = ((self.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let (train, test) = perm.split_at(n_train);
        Ok((train.to_vec(), test.to_vec()))
    }
}

pub fn make_split(dataset: &Dataset, plan: &SplitPlan) -> Result<(Dataset, Dataset)> {
    let (train, test) = plan.indices(dataset.len())?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(x: &[[f64; 2]], y: &[f64]) -> Dataset {
        Dataset::new("t", Matrix::from_rows(x).unwrap(), Matrix::column_vector(y)).unwrap()
    }

    #[test]
    fn two_point_column() {
        let d = ds(&[[2.0, 5.0], [4.0, 5.0]], &[1.0, 3.0]);
        let n = normalize(&d).unwrap();
        assert_eq!(n.x.column(0), vec![-1.0, 1.0]);
        // constant column is centred only
        assert_eq!(n.x.column(1), vec![0.0, 0.0]);
        assert_eq!(n.stats.feature_stds[1], 1.0);
        assert_eq!(n.y.column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn normalization_is_idempotent_and_invertible() {
        let mut rng = RngStream::new(3, 1);
        let x = Matrix::from_fn(50, 4, |_, j| 10.0 * j as f64 + (j + 1) as f64 * rng.normal());
        let y = Matrix::from_fn(50, 1, |_, _| 100.0 + 5.0 * rng.normal());
        let d = Dataset::new("r", x, y).unwrap();
        let n = normalize(&d).unwrap();
        for j in 0..4 {
            let c = n.x.column(j);
            let mu = c.iter().sum::<f64>() / 50.0;
            let sd = (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 50.0).sqrt();
            assert!(mu.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
        }
        let twice = normalize(&n).unwrap();
        assert!(twice.x.max_abs_diff(&n.x) < 1e-12);
        let back = twice.denormalized();
        for (a, b) in back.x.as_slice().iter().zip(d.x.as_slice()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        for (a, b) in back.y.as_slice().iter().zip(d.y.as_slice()) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let d = ds(&[[0.0, 0.0]; 10], &[0.0; 10]);
        let plan = SplitPlan { seed: 4, train_fraction: 0.9, split_index: 0 };
        let (tr, te) = make_split(&d, &plan).unwrap();
        assert_eq!((tr.len(), te.len()), (9, 1));
        assert_eq!(plan.indices(10).unwrap(), plan.indices(10).unwrap());
        let bad = SplitPlan { train_fraction: 1.0, ..plan };
        assert!(make_split(&d, &bad).is_err());
    }

    #[test]
    fn splits_partition_the_rows() {
        for k in 0..100 {
            let plan = SplitPlan { seed: 11, train_fraction: 0.1 + 0.008 * k as f64, split_index: k };
            let n = 37 + k as usize;
            let (tr, te) = plan.indices(n).unwrap();
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
