//! Exact Gaussian-process regression with a squared-exponential kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, Error, Result};
use crate::numerics::{cholesky_factor, dot, solve_lower, solve_lower_transposed, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

impl GpHyperparams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self> {
        let h = GpHyperparams {
            signal_variance,
            length_scale,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    /// Signal variance and length-scale must be positive; noise may be zero
    /// for noiseless interpolation.
    fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0) || !(self.length_scale > 0.0) || !(self.noise_variance >= 0.0) {
            return Err(domain_err!("invalid GP hyperparameters {self:?}"));
        }
        Ok(())
    }
}

/// `σ_f² exp(−‖x1 − x2‖² / (2ℓ²))`.
pub fn se_kernel(x1: &[f64], x2: &[f64], hyper: &GpHyperparams) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(shape_err!("kernel inputs of length {} and {}", x1.len(), x2.len()));
    }
    Ok(se(x1, x2, hyper))
}

#[inline]
fn se(x1: &[f64], x2: &[f64], hyper: &GpHyperparams) -> f64 {
    let d2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    hyper.signal_variance * (-d2 / (2.0 * hyper.length_scale * hyper.length_scale)).exp()
}

/// Fitted GP: Cholesky factor of `K + σ_n²I` and `α = (K + σ_n²I)⁻¹ y`.
#[derive(Clone, Debug)]
pub struct GpPosterior {
    pub hyper: GpHyperparams,
    pub inputs: Matrix,
    pub factor: Matrix,
    pub alpha: Vec<f64>,
    log_marginal: f64,
}

pub fn gp_fit(x: &Matrix, y: &[f64], hyper: GpHyperparams) -> Result<GpPosterior> {
    hyper.validate()?;
    let n = x.rows();
    if n == 0 || n != y.len() {
        return Err(shape_err!("{n} inputs for {} targets", y.len()));
    }
    let mut k = Matrix::from_fn(n, n, |i, j| se(x.row(i), x.row(j), &hyper));
    for i in 0..n {
        k.set(i, i, k.get(i, i) + hyper.noise_variance);
    }
    let factor = cholesky_factor(&k).map_err(|e| {
        Error::Decomposition(format!(
            "kernel matrix is ill-conditioned ({e}); try a larger noise variance"
        ))
    })?;
    let z = solve_lower(&factor, y)?;
    let alpha = solve_lower_transposed(&factor, &z)?;
    let log_det: f64 = (0..n).map(|i| factor.get(i, i).ln()).sum::<f64>() * 2.0;
    let log_marginal = -0.5 * dot(y, &alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln();
    Ok(GpPosterior {
        hyper,
        inputs: x.clone(),
        factor,
        alpha,
        log_marginal,
    })
}

impl GpPosterior {
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal
    }
}

/// Predictive mean and noise-inclusive variance at `x_star`.
pub fn gp_predict(post: &GpPosterior, x_star: &[f64]) -> Result<(f64, f64)> {
    if x_star.len() != post.inputs.cols() {
        return Err(shape_err!(
            "test input of length {}, model has {} features",
            x_star.len(),
            post.inputs.cols()
        ));
    }
    let k_star: Vec<f64> = post.inputs.row_iter().map(|r| se(r, x_star, &post.hyper)).collect();
    let mean = dot(&k_star, &post.alpha);
    let v = solve_lower(&post.factor, &k_star)?;
    let latent = (post.hyper.signal_variance - dot(&v, &v)).max(0.0);
    Ok((mean, latent + post.hyper.noise_variance))
}

/// Candidate values for the marginal-likelihood grid search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpGrid {
    pub signal_variance: Vec<f64>,
    pub length_scale: Vec<f64>,
    pub noise_variance: Vec<f64>,
}

impl Default for GpGrid {
    /// Coarse log grid suited to centred, unit-variance targets.
    fn default() -> Self {
        GpGrid {
            signal_variance: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            length_scale: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 2.0],
            noise_variance: vec![1e-4, 1e-3, 1e-2, 3e-2, 0.1],
        }
    }
}

/// Exhaustive search for the hyperparameters with the largest log marginal
/// likelihood. Cells whose kernel matrix cannot be factored are skipped.
pub fn fit_by_grid_search(x: &Matrix, y: &[f64], grid: &GpGrid) -> Result<GpPosterior> {
    let mut best: Option<GpPosterior> = None;
    for &sf in &grid.signal_variance {
        for &ls in &grid.length_scale {
            for &sn in &grid.noise_variance {
                let Ok(post) = gp_fit(x, y, GpHyperparams::new(sf, ls, sn)?) else {
                    continue;
                };
                if best
                    .as_ref()
                    .map_or(true, |b| post.log_marginal > b.log_marginal)
                {
                    best = Some(post);
                }
            }
        }
    }
    best.ok_or_else(|| Error::Decomposition("no grid cell produced a valid GP fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn h(sf: f64, l: f64, sn: f64) -> GpHyperparams {
        GpHyperparams::new(sf, l, sn).unwrap()
    }

    #[test]
    fn kernel_values() {
        let hyp = h(1.7, 0.4, 0.1);
        assert_eq!(se_kernel(&[0.3, 1.0], &[0.3, 1.0], &hyp).unwrap(), 1.7);
        let r = 0.4 * 2f64.sqrt();
        let v = se_kernel(&[0.0], &[r], &hyp).unwrap();
        assert!((v - 1.7 * (-1f64).exp()).abs() < 1e-15);
        assert!(se_kernel(&[0.0], &[0.0, 1.0], &hyp).is_err());
    }

    #[test]
    fn kernel_matches_direct_formula() {
        let mut rng = RngStream::new(4, 4);
        for _ in 0..100 {
            let a: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
            let hyp = h(rng.uniform_range(0.1, 3.0), rng.uniform_range(0.2, 2.0), 0.1);
            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            let direct = hyp.signal_variance * (-0.5 * d2 / hyp.length_scale.powi(2)).exp();
            assert!((se_kernel(&a, &b, &hyp).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn single_point_closed_forms() {
        let x = Matrix::from_rows(&[[0.5]]).unwrap();
        let post = gp_fit(&x, &[2.0], h(1.5, 1.0, 0.0)).unwrap();
        let (m, v) = gp_predict(&post, &[0.5]).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        assert!(v.abs() < 1e-15);
        let post = gp_fit(&x, &[2.0], h(1.5, 1.0, 0.5)).unwrap();
        let (m, _) = gp_predict(&post, &[0.5]).unwrap();
        assert!((m - 2.0 * 1.5 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn far_field_reverts_to_prior() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [0.3]]).unwrap();
        let post = gp_fit(&x, &[0.5, -0.2, 0.1], h(2.0, 0.2, 0.05)).unwrap();
        let (m, v) = gp_predict(&post, &[50.0]).unwrap();
        assert!(m.abs() < 1e-6);
        assert!((v - 2.05).abs() < 1e-6);
    }

    #[test]
    fn ill_conditioned_fit_reports_decomposition_error() {
        let x = Matrix::from_rows(&[[0.0], [0.0]]).unwrap();
        assert!(matches!(
            gp_fit(&x, &[1.0, 2.0], h(1.0, 1.0, 0.0)),
            Err(Error::Decomposition(_))
        ));
    }

    #[test]
    fn grid_search_prefers_generating_length_scale() {
        let mut rng = RngStream::new(9, 0);
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin() + 0.05 * rng.normal()).collect();
        let x = Matrix::column_vector(&xs);
        let post = fit_by_grid_search(&x, &ys, &GpGrid::default()).unwrap();
        assert!(post.hyper.length_scale >= 0.1 && post.hyper.length_scale <= 0.5);
    }
}
