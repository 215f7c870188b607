//! Exact GP regression with a squared-exponential kernel whose
//! hyperparameters are picked by marginal likelihood over a grid.

use mcdrop::gp::{fit_by_grid_search, gp_predict, GpGrid};
use mcdrop::{Matrix, RngStream};

fn main() -> mcdrop::Result<()> {
    let mut rng = RngStream::new(11, 0);
    let xs: Vec<f64> = (0..40).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() + 0.05 * rng.normal()).collect();

    let post = fit_by_grid_search(&Matrix::column_vector(&xs), &ys, &GpGrid::default())?;
    let h = post.hyper;
    println!(
        "signal variance {}, length-scale {}, noise variance {}, log evidence {:.3}",
        h.signal_variance,
        h.length_scale,
        h.noise_variance,
        post.log_marginal_likelihood()
    );
    // the predictive std reverts to the prior far from the data
    for x in [-0.5, 0.0, 0.5, 1.5, 3.0] {
        let (m, v) = gp_predict(&post, &[x])?;
        println!("x = {x:4.1}: mean {m:7.3}, std {:.3}", v.sqrt());
    }
    Ok(())
}
