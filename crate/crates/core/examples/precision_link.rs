//! The link between weight decay and model precision, and what τ does to
//! the predictive log-likelihood of a fixed set of MC samples.

use mcdrop::uncertainty::{predictive_log_likelihood, PrecisionLink};
use mcdrop::Matrix;

fn main() -> mcdrop::Result<()> {
    for (p, l, n, lambda) in [(0.9, 1.0, 1000, 1e-4), (0.995, 1e-2, 455, 1e-6), (0.5, 1.0, 60_000, 5e-4)] {
        let link = PrecisionLink::from_weight_decay(p, l, n, lambda)?;
        let back = PrecisionLink::from_tau(p, l, n, link.tau)?;
        println!(
            "p={p}, l={l}, N={n}, λ={lambda:e}  ->  τ={:.4}  (λ recovered {:e}, residual {:.1e})",
            link.tau,
            back.weight_decay,
            link.residual()
        );
    }

    // Samples spread around 1.0; the observation sits at 1.3.
    let samples = Matrix::column_vector(&[0.8, 0.9, 1.0, 1.1, 1.2]);
    for tau in [0.1, 1.0, 10.0, 100.0] {
        let ll = predictive_log_likelihood(&samples, &[1.3], tau)?;
        println!("τ = {tau:6.1}: log p(y) = {ll:8.4}");
    }
    Ok(())
}
