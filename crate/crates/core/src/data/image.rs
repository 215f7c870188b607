use crate::error::{shape_err, Result};

/// Rotates a row-major `width × height` image by `angle_deg` degrees
/// (counter-clockwise as displayed, y pointing down) about the image centre.
///
/// Each output pixel is sampled from the inverse-rotated source position with
/// bilinear interpolation; samples that fall outside the source are zero.
pub fn rotate_image(image: &[f64], width: usize, height: usize, angle_deg: f64) -> Result<Vec<f64>> {
    if image.len() != width * height {
        return Err(shape_err!("{} pixels for a {width}×{height} image", image.len()));
    }
    if angle_deg == 0.0 {
        return Ok(image.to_vec());
    }
    let (s, c) = angle_deg.to_radians().sin_cos();
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let pixel = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
            0.0
        } else {
            image[y as usize * width + x as usize]
        }
    };
    let mut out = vec![0.0; image.len()];
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = cx + c * dx - s * dy;
            let sy = cy + s * dx + c * dy;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            out[y * width + x] = (1.0 - fx) * (1.0 - fy) * pixel(x0, y0)
                + fx * (1.0 - fy) * pixel(x0 + 1, y0)
                + (1.0 - fx) * fy * pixel(x0, y0 + 1)
                + fx * fy * pixel(x0 + 1, y0 + 1);
        }
    }
    Ok(out)
}
