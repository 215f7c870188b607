//! IDX image and label files (big-endian headers, one byte per pixel).

use std::fs;
use std::path::Path;

use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Grayscale images as rows of `images` (row-major pixels scaled to [0, 1]).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageDataset {
    pub rows: usize,
    pub cols: usize,
    pub images: Matrix,
    pub labels: Vec<u8>,
}

impl ImageDataset {
    pub fn new(rows: usize, cols: usize, images: Matrix, labels: Vec<u8>) -> Result<Self> {
        if images.cols() != rows * cols || images.rows() != labels.len() {
            return Err(shape_err!(
                "{} images of {} pixels with {} labels for {rows}×{cols}",
                images.rows(),
                images.cols(),
                labels.len()
            ));
        }
        Ok(ImageDataset {
            rows,
            cols,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        self.images.row(i)
    }

    pub fn labels_usize(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> ImageDataset {
        ImageDataset {
            rows: self.rows,
            cols: self.cols,
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("{} file truncated at byte {}", self.what, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<ImageDataset> {
    let mut img = Cursor { bytes: image_bytes, pos: 0, what: "image" };
    let magic = img.u32()?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!("image magic number {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let n = img.u32()? as usize;
    let rows = img.u32()? as usize;
    let cols = img.u32()? as usize;
    let pixels = img.take(n * rows * cols)?;

    let mut lab = Cursor { bytes: label_bytes, pos: 0, what: "label" };
    let magic = lab.u32()?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!("label magic number {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let n_labels = lab.u32()? as usize;
    if n_labels != n {
        return Err(Error::Format(format!("{n} images but {n_labels} labels")));
    }
    let labels = lab.take(n)?.to_vec();

    let images = Matrix::new(n, rows * cols, pixels.iter().map(|&b| b as f64 / 255.0).collect())?;
    ImageDataset::new(rows, cols, images, labels)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<ImageDataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = fs::read(lp).map_err(|e| Error::io(lp, e))?;
    parse_idx(&images, &labels)
}

/// Encodes a dataset as an IDX pair; pixels are quantised to `round(255 v)`.
pub fn encode_idx(data: &ImageDataset) -> (Vec<u8>, Vec<u8>) {
    let n = data.len() as u32;
    let mut img = Vec::with_capacity(16 + data.images.as_slice().len());
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    img.extend_from_slice(&n.to_be_bytes());
    img.extend_from_slice(&(data.rows as u32).to_be_bytes());
    img.extend_from_slice(&(data.cols as u32).to_be_bytes());
    img.extend(data.images.as_slice().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));

    let mut lab = Vec::with_capacity(8 + data.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&n.to_be_bytes());
    lab.extend_from_slice(&data.labels);
    (img, lab)
}

pub fn write_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>, data: &ImageDataset) -> Result<()> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (img, lab) = encode_idx(data);
    fs::write(ip, img).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, lab).map_err(|e| Error::io(lp, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_images() -> ImageDataset {
        let px: Vec<f64> = (0..2 * 28 * 28).map(|i| ((i * 37) % 256) as f64 / 255.0).collect();
        ImageDataset::new(28, 28, Matrix::new(2, 784, px).unwrap(), vec![7, 1]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let d = two_images();
        let (img, lab) = encode_idx(&d);
        let back = parse_idx(&img, &lab).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.labels[0], 7);
    }

    #[test]
    fn truncated_and_wrong_magic() {
        let (img, lab) = encode_idx(&two_images());
        assert!(matches!(parse_idx(&img[..img.len() - 1], &lab), Err(Error::Format(_))));
        assert!(matches!(parse_idx(&img, &lab[..9]), Err(Error::Format(_))));
        assert!(matches!(parse_idx(&img[..3], &lab), Err(Error::Format(_))));
        assert!(matches!(parse_idx(&lab, &img), Err(Error::Format(_))));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        write_idx(&ip, &lp, &two_images()).unwrap();
        assert_eq!(load_idx(&ip, &lp).unwrap(), two_images());
    }
}
