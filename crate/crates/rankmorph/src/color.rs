//! Vector color values and rectangular color images.
//!
//! Channels are stored normalized to `[0, 1]`; 8-bit inputs are divided by
//! 255 on ingestion. Images keep their pixels in a flat row-major buffer
//! with interleaved channels.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A single d-channel vector value with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorValue {
    channels: Vec<f64>,
}

impl ColorValue {
    /// Builds a color after validating that every channel is finite and in `[0, 1]`.
    pub fn new(channels: Vec<f64>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidValue("color needs at least one channel".into()));
        }
        for &c in &channels {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidValue(format!(
                    "channel value {c} outside [0, 1]"
                )));
            }
        }
        Ok(Self { channels })
    }

    /// RGB color from normalized components.
    pub fn rgb(r: f64, g: f64, b: f64) -> Result<Self> {
        Self::new(vec![r, g, b])
    }

    /// RGB color from 8-bit components, normalized by 255.
    pub fn rgb8(r: u8, g: u8, b: u8) -> Self {
        Self {
            channels: vec![r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }

    /// L1 distance between two colors of the same dimension.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(l1_distance_slices(&self.channels, &other.channels))
    }

    /// Total lexicographic comparison on raw channel values (channel 0 first).
    pub fn channel_cmp(&self, other: &Self) -> Ordering {
        channel_cmp_slices(&self.channels, &other.channels)
    }

    /// Bit-pattern key for exact hashing of channel values.
    pub(crate) fn bit_key(&self) -> Vec<u64> {
        bit_key_slice(&self.channels)
    }
}

pub(crate) fn l1_distance_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub(crate) fn channel_cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn bit_key_slice(channels: &[f64]) -> Vec<u64> {
    channels.iter().map(|c| c.to_bits()).collect()
}

/// A rectangular d-channel image over the full grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ColorImage {
    /// Builds an image from interleaved channel data (`width * height * dim` values).
    pub fn new(width: usize, height: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue("image dimensions must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidValue("image needs at least one channel".into()));
        }
        if data.len() != width * height * dim {
            return Err(Error::InvalidValue(format!(
                "pixel buffer has {} values, expected {}",
                data.len(),
                width * height * dim
            )));
        }
        for &c in &data {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidValue(format!(
                    "channel value {c} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            dim,
            data,
        })
    }

    /// Builds an image from a row-major list of colors sharing one dimension.
    pub fn from_pixels(width: usize, height: usize, pixels: &[ColorValue]) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidValue(format!(
                "{} pixels given for a {width}x{height} grid",
                pixels.len()
            )));
        }
        let dim = pixels.first().map(|p| p.dim()).unwrap_or(0);
        let mut data = Vec::with_capacity(pixels.len() * dim);
        for p in pixels {
            if p.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.dim(),
                });
            }
            data.extend_from_slice(p.channels());
        }
        Self::new(width, height, dim, data)
    }

    /// Constant image filled with one color.
    pub fn constant(width: usize, height: usize, color: &ColorValue) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * color.dim());
        for _ in 0..width * height {
            data.extend_from_slice(color.channels());
        }
        Self::new(width, height, color.dim(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Channel slice of the pixel at `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        self.pixel_at(y * self.width + x)
    }

    /// Channel slice of the pixel at a flat row-major index.
    pub fn pixel_at(&self, index: usize) -> &[f64] {
        let start = index * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn pixel_value(&self, x: usize, y: usize) -> ColorValue {
        ColorValue {
            channels: self.pixel(x, y).to_vec(),
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Iterator over pixel channel slices in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Unique colors of the image, sorted by channel-lexicographic order.
    pub fn unique_colors(&self) -> Vec<ColorValue> {
        let mut slices: Vec<&[f64]> = self.pixels().collect();
        slices.sort_unstable_by(|a, b| channel_cmp_slices(a, b));
        slices.dedup();
        slices
            .into_iter()
            .map(|s| ColorValue {
                channels: s.to_vec(),
            })
            .collect()
    }
}

/// The sixteen basic colors used for ranking strips.
pub fn basic_palette16() -> Vec<ColorValue> {
    [
        (0x00, 0x00, 0x00), // black
        (0x80, 0x00, 0x00), // maroon
        (0x00, 0x80, 0x00), // green
        (0x80, 0x80, 0x00), // olive
        (0x00, 0x00, 0x80), // navy
        (0x80, 0x00, 0x80), // purple
        (0x00, 0x80, 0x80), // teal
        (0xc0, 0xc0, 0xc0), // silver
        (0x80, 0x80, 0x80), // gray
        (0xff, 0x00, 0x00), // red
        (0x00, 0xff, 0x00), // lime
        (0xff, 0xff, 0x00), // yellow
        (0x00, 0x00, 0xff), // blue
        (0xff, 0x00, 0xff), // fuchsia
        (0x00, 0xff, 0xff), // cyan
        (0xff, 0xff, 0xff), // white
    ]
    .iter()
    .map(|&(r, g, b)| ColorValue::rgb8(r, g, b))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_channels() {
        assert!(ColorValue::new(vec![0.0, 1.1, 0.0]).is_err());
        assert!(ColorValue::new(vec![f64::NAN]).is_err());
        assert!(ColorValue::new(vec![]).is_err());
        assert!(ColorValue::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn rgb8_normalizes_by_255() {
        let c = ColorValue::rgb8(255, 0, 51);
        assert_eq!(c.channels(), &[1.0, 0.0, 51.0 / 255.0]);
    }

    #[test]
    fn image_shape_validation() {
        assert!(ColorImage::new(0, 3, 3, vec![]).is_err());
        assert!(ColorImage::new(2, 1, 3, vec![0.0; 5]).is_err());
        let img = ColorImage::new(2, 1, 3, vec![0.0; 6]).unwrap();
        assert_eq!(img.pixel(1, 0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn unique_colors_sorted_and_deduped() {
        let b = ColorValue::rgb8(0, 0, 0);
        let w = ColorValue::rgb8(255, 255, 255);
        let img =
            ColorImage::from_pixels(2, 2, &[w.clone(), b.clone(), w.clone(), b.clone()]).unwrap();
        let uniq = img.unique_colors();
        assert_eq!(uniq, vec![b, w]);
    }

    #[test]
    fn channel_cmp_is_lexicographic() {
        let a = ColorValue::rgb(0.0, 1.0, 0.0).unwrap();
        let b = ColorValue::rgb(0.0, 1.0, 0.5).unwrap();
        assert_eq!(a.channel_cmp(&b), Ordering::Less);
        assert_eq!(b.channel_cmp(&a), Ordering::Greater);
        assert_eq!(a.channel_cmp(&a), Ordering::Equal);
    }
}
