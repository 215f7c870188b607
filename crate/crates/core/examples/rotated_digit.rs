//! Rotate a digit image and watch the stochastic softmax passes of a
//! dropout classifier: confident when upright, scattered when rotated.

use mcdrop::data::synthetic::synthetic_digits;
use mcdrop::experiments::{rotation_angles, run_rotated_digit, train_digit_classifier, DigitConfig};

fn main() -> mcdrop::Result<()> {
    let data = synthetic_digits(2000, 5)?;
    let cfg = DigitConfig { epochs: 5, ..DigitConfig::default() };
    let net = train_digit_classifier(&data, &cfg, 1)?;

    let probe = synthetic_digits(10, 99)?;
    let one = (0..10).find(|&i| probe.labels[i] == 1).unwrap();
    let s = run_rotated_digit(&net, probe.image(one), &rotation_angles(), 100, 2)?;
    println!("{:>6}  {:>9}  {:>6}  {:>7}  {:>6}  overlap", "angle", "top 3", "p(top)", "entropy", "VR");
    for a in &s.angles {
        println!(
            "{:6.0}  {:?}  {:6.3}  {:7.3}  {:6.2}  {}",
            a.angle,
            a.top_classes,
            a.top_mean_prob(),
            a.predictive_entropy,
            a.variation_ratio,
            a.top_two_envelopes_overlap()
        );
    }
    Ok(())
}
