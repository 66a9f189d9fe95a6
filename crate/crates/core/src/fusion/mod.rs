//! Fusion of per-crop detections into one full-image defect region.
//!
//! Block outlines from every crop are drawn onto one canvas, the enclosed
//! zones are filled, and the filled region is traced with [`canny_edges`].

mod canny;

pub use canny::{canny_detailed, canny_edges, CannyParams, CannyStages};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::tiling::{BlockGrid, Rect};

/// Intensity burnt into overlays.
pub const OVERLAY_INTENSITY: f64 = 255.0;

/// Binary mask in full-image coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl DefectMask {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::GeometryMismatch(format!(
                "{} bits for a {height}x{width} mask",
                bits.len()
            )));
        }
        Ok(Self { height, width, bits })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Any set pixel inside `rect`.
    pub fn intersects(&self, rect: &Rect) -> bool {
        (rect.row..rect.row + rect.height)
            .any(|r| (rect.col..rect.col + rect.width).any(|c| self.get(r, c)))
    }

    /// Set pixels become `on`, others `off`.
    pub fn to_image(&self, off: f64, on: f64) -> GrayImage {
        GrayImage::new(
            self.height,
            self.width,
            self.bits.iter().map(|&b| if b { on } else { off }).collect(),
        )
        .expect("mask dimensions are positive")
    }

    /// 0 / 255 samples.
    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    fn draw_outline(&mut self, rect: &Rect) {
        let (r0, r1) = (rect.row, rect.row + rect.height - 1);
        let (c0, c1) = (rect.col, rect.col + rect.width - 1);
        for c in c0..=c1 {
            self.set(r0, c, true);
            self.set(r1, c, true);
        }
        for r in r0..=r1 {
            self.set(r, c0, true);
            self.set(r, c1, true);
        }
    }
}

/// Draws a 1-pixel outline around every detected block of every crop,
/// unioned on an `height x width` canvas.
pub fn rasterize_boundaries(detections: &[(BlockGrid, Vec<usize>)], height: usize, width: usize) -> Result<DefectMask> {
    let mut mask = DefectMask::new(height, width);
    for (grid, blocks) in detections {
        let crop = &grid.crop;
        if crop.row_offset + crop.crop_height > height || crop.col_offset + crop.crop_width > width {
            return Err(Error::GeometryMismatch(format!(
                "{} crop extends past the {height}x{width} image",
                crop.corner.name()
            )));
        }
        for &k in blocks {
            mask.draw_outline(&grid.block_rect(k)?);
        }
    }
    Ok(mask)
}

/// Sets every background pixel that cannot reach the image border through
/// 4-connected background.
pub fn fill_holes(mask: &DefectMask) -> DefectMask {
    let (h, w) = (mask.height, mask.width);
    let mut outside = vec![false; h * w];
    let mut queue = VecDeque::new();
    let seed = |r: usize, c: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        let i = r * w + c;
        if !mask.bits[i] && !outside[i] {
            outside[i] = true;
            queue.push_back((r, c));
        }
    };
    for c in 0..w {
        seed(0, c, &mut outside, &mut queue);
        seed(h - 1, c, &mut outside, &mut queue);
    }
    for r in 0..h {
        seed(r, 0, &mut outside, &mut queue);
        seed(r, w - 1, &mut outside, &mut queue);
    }
    while let Some((r, c)) = queue.pop_front() {
        if r > 0 {
            seed(r - 1, c, &mut outside, &mut queue);
        }
        if r + 1 < h {
            seed(r + 1, c, &mut outside, &mut queue);
        }
        if c > 0 {
            seed(r, c - 1, &mut outside, &mut queue);
        }
        if c + 1 < w {
            seed(r, c + 1, &mut outside, &mut queue);
        }
    }
    DefectMask {
        height: h,
        width: w,
        bits: outside.into_iter().map(|o| !o).collect(),
    }
}

/// Copy of `base` with every edge pixel set to [`OVERLAY_INTENSITY`].
pub fn overlay(base: &GrayImage, edges: &DefectMask) -> Result<GrayImage> {
    if base.height() != edges.height || base.width() != edges.width {
        return Err(Error::GeometryMismatch(format!(
            "overlay base {}x{} vs mask {}x{}",
            base.height(),
            base.width(),
            edges.height,
            edges.width
        )));
    }
    let pixels = base
        .pixels()
        .iter()
        .zip(&edges.bits)
        .map(|(&p, &e)| if e { OVERLAY_INTENSITY } else { p })
        .collect();
    GrayImage::new(base.height(), base.width(), pixels)
}

/// Filled defect region and its traced contour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fused {
    pub filled: DefectMask,
    pub edges: DefectMask,
}

/// Outline, fill, then trace the filled region (scaled to 0/255) with Canny.
pub fn fuse(detections: &[(BlockGrid, Vec<usize>)], height: usize, width: usize, params: &CannyParams) -> Result<Fused> {
    let outlines = rasterize_boundaries(detections, height, width)?;
    let filled = fill_holes(&outlines);
    let edges = canny_edges(&filled.to_image(0.0, 255.0), params)?;
    Ok(Fused { filled, edges })
}
