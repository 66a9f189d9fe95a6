//! Real-valued grayscale images and their forward-difference gradient.
//!
//! Axis convention: `x` is the column index, `y` the row index. Pixels are
//! stored row-major.

use crate::error::{Error, Result};

/// A grayscale image with real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels for {height}x{width}, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite intensity at row {}, col {}",
                i / width,
                i % width
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Image filled with a single value.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(height, width, pixels)
    }

    /// Promotes 8-bit samples to real intensities.
    pub fn from_u8(height: usize, width: usize, samples: &[u8]) -> Result<Self> {
        Self::new(height, width, samples.iter().map(|&s| f64::from(s)).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Copies the `height x width` window whose top-left pixel is `(row, col)`.
    pub fn sub_image(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::GeometryMismatch(format!(
                "window {height}x{width} at ({row}, {col}) exceeds image {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(height * width);
        for r in row..row + height {
            let start = r * self.width + col;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        Self::new(height, width, pixels)
    }

    /// Rounds and clamps every intensity into `0..=255`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|p| p.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), height * width);
        Self {
            height,
            width,
            pixels,
        }
    }
}

/// Horizontal and vertical forward differences plus their Euclidean magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: GrayImage,
    pub gy: GrayImage,
    pub magnitude: GrayImage,
}

/// Applies the `(-1, 1)` mask along rows and its transpose along columns.
///
/// The difference across the last column (for `gx`) and the last row (for
/// `gy`) is taken as zero, so the field keeps the source dimensions.
pub fn forward_differences(img: &GrayImage) -> GradientField {
    let (h, w) = (img.height(), img.width());
    let p = img.pixels();
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    let mut mag = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let dx = if c + 1 < w { p[i + 1] - p[i] } else { 0.0 };
            let dy = if r + 1 < h { p[i + w] - p[i] } else { 0.0 };
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    GradientField {
        gx: GrayImage::from_parts_unchecked(h, w, gx),
        gy: GrayImage::from_parts_unchecked(h, w, gy),
        magnitude: GrayImage::from_parts_unchecked(h, w, mag),
    }
}

/// The gradient magnitude image every later stage works on.
pub fn gradient_space(img: &GrayImage) -> GrayImage {
    forward_differences(img).magnitude
}
