//! Small generated datasets used as fixtures, examples and test oracles.

use std::f64::consts::PI;

use super::{Dataset, ImageDataset};
use crate::error::Result;
use crate::numerics::{Matrix, RngStream};

/// Monthly atmospheric-CO2-like series: quadratic trend, annual and
/// semi-annual cycles and small white noise. Columns: decimal year, ppm.
pub fn co2_like(n_months: usize, start_year: f64, seed: u64) -> Result<Dataset> {
    let mut rng = RngStream::new(seed, 0);
    let t: Vec<f64> = (0..n_months).map(|m| start_year + (m as f64 + 0.5) / 12.0).collect();
    let y: Vec<f64> = t
        .iter()
        .map(|&t| {
            let u = t - start_year;
            315.0 + 0.8 * u + 0.012 * u * u
                + 2.8 * (2.0 * PI * t).sin()
                + 0.7 * (4.0 * PI * t + 0.6).sin()
                + 0.25 * rng.normal()
        })
        .collect();
    Dataset::new("co2", Matrix::column_vector(&t), Matrix::column_vector(&y))
}

/// `y = X w + σ ε` with standard-normal inputs; returns the dataset and `w`.
pub fn linear_gaussian(n: usize, q: usize, sigma: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    let mut rng = RngStream::new(seed, 0);
    let w: Vec<f64> = (0..q).map(|_| rng.normal()).collect();
    let x = Matrix::from_fn(n, q, |_, _| rng.normal());
    let y: Vec<f64> = x
        .row_iter()
        .map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + sigma * rng.normal())
        .collect();
    Ok((Dataset::new("linear", x, Matrix::column_vector(&y))?, w))
}

type Stroke = Vec<(f64, f64)>;

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, n: usize) -> Stroke {
    (0..=n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

/// Glyph skeletons in a unit box (x right, y down).
fn glyph(digit: u8, rng: &mut RngStream) -> Vec<Stroke> {
    match digit {
        0 => vec![ellipse(0.5, 0.5, 0.42, 0.5, 20)],
        1 => {
            let mut s = vec![vec![(0.55, 0.0), (0.45, 1.0)]];
            if rng.bernoulli(0.4) {
                s.push(vec![(0.3, 0.2), (0.55, 0.0)]);
            }
            s
        }
        2 => vec![vec![
            (0.1, 0.25), (0.3, 0.02), (0.7, 0.02), (0.9, 0.25), (0.8, 0.5), (0.1, 1.0), (0.95, 1.0),
        ]],
        3 => vec![vec![
            (0.1, 0.1), (0.5, 0.0), (0.85, 0.15), (0.85, 0.35), (0.45, 0.5),
            (0.9, 0.65), (0.9, 0.85), (0.5, 1.0), (0.1, 0.9),
        ]],
        4 => vec![
            vec![(0.7, 1.0), (0.7, 0.0)],
            vec![(0.7, 0.0), (0.05, 0.65), (0.95, 0.65)],
        ],
        5 => vec![vec![
            (0.9, 0.0), (0.2, 0.0), (0.15, 0.45), (0.6, 0.4), (0.9, 0.6),
            (0.85, 0.9), (0.5, 1.0), (0.1, 0.9),
        ]],
        6 => vec![vec![
            (0.8, 0.05), (0.4, 0.1), (0.15, 0.5), (0.15, 0.8), (0.4, 1.0),
            (0.75, 0.95), (0.85, 0.7), (0.6, 0.5), (0.3, 0.55), (0.15, 0.7),
        ]],
        7 => vec![vec![(0.05, 0.0), (0.95, 0.0), (0.35, 1.0)]],
        8 => vec![ellipse(0.5, 0.25, 0.3, 0.25, 16), ellipse(0.5, 0.72, 0.38, 0.28, 16)],
        _ => vec![ellipse(0.5, 0.3, 0.35, 0.3, 16), vec![(0.85, 0.3), (0.75, 1.0)]],
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (p.0 - a.0 - t * vx, p.1 - a.1 - t * vy);
    (dx * dx + dy * dy).sqrt()
}

/// Renders one jittered 28×28 digit (pixels in [0, 1]).
pub fn render_digit(digit: u8, rng: &mut RngStream) -> Vec<f64> {
    let strokes = glyph(digit % 10, rng);
    let scale = rng.uniform_range(0.85, 1.1);
    let (w, h) = (12.0 * scale * rng.uniform_range(0.85, 1.15), 19.0 * scale);
    let slant = rng.uniform_range(-0.25, 0.25);
    let angle = rng.uniform_range(-0.15, 0.15);
    let (sa, ca) = angle.sin_cos();
    let (ox, oy) = (13.5 + rng.uniform_range(-1.5, 1.5), 13.5 + rng.uniform_range(-1.5, 1.5));
    let thickness = rng.uniform_range(1.0, 1.8);

    let to_pixels = |(u, v): (f64, f64)| -> (f64, f64) {
        let x = (u - 0.5) * w - slant * (v - 0.5) * h;
        let y = (v - 0.5) * h;
        (ox + ca * x - sa * y, oy + sa * x + ca * y)
    };
    let segments: Vec<((f64, f64), (f64, f64))> = strokes
        .iter()
        .flat_map(|s| s.windows(2).map(|p| (to_pixels(p[0]), to_pixels(p[1]))).collect::<Vec<_>>())
        .collect();

    let mut img = vec![0.0; 28 * 28];
    for (i, px) in img.iter_mut().enumerate() {
        let p = ((i % 28) as f64, (i / 28) as f64);
        let d = segments
            .iter()
            .map(|&(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min);
        *px = (1.0 + thickness - d).clamp(0.0, 1.0);
    }
    img
}

/// `n` digits with labels cycling through 0–9, rendered with random jitter.
pub fn synthetic_digits(n: usize, seed: u64) -> Result<ImageDataset> {
    let mut rng = RngStream::new(seed, 0);
    let mut pixels = Vec::with_capacity(n * 784);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 10) as u8;
        pixels.extend(render_digit(label, &mut rng));
        labels.push(label);
    }
    ImageDataset::new(28, 28, Matrix::new(n, 784, pixels)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn co2_series_has_about_two_hundred_points_and_rises() {
        let d = co2_like(204, 1958.0, 1).unwrap();
        assert_eq!((d.len(), d.input_dim(), d.output_dim()), (204, 1, 1));
        let y = d.y.column(0);
        assert!(y[200..].iter().sum::<f64>() > y[..4].iter().sum::<f64>() + 40.0);
    }

    #[test]
    fn linear_data_noise_level() {
        let (d, w) = linear_gaussian(5000, 3, 0.5, 2).unwrap();
        let resid: Vec<f64> = (0..d.len())
            .map(|i| d.y.get(i, 0) - d.x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((var - 0.25).abs() < 0.02);
    }

    #[test]
    fn digits_are_deterministic_and_in_range() {
        let a = synthetic_digits(20, 3).unwrap();
        assert_eq!(a, synthetic_digits(20, 3).unwrap());
        assert!(a.images.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        for i in 0..20 {
            let ink: f64 = a.image(i).iter().sum();
            assert!(ink > 20.0 && ink < 300.0, "digit {} ink {ink}", a.labels[i]);
        }
    }
}
