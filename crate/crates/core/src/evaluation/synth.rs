//! Seeded synthetic patterned textures with known defects.
//!
//! A spec is a small TOML document:
//!
//! ```toml
//! pattern = "dot"          # dot | star | box
//! period_rows = 25         # height of one periodic unit
//! period_cols = 30         # width of one periodic unit
//! repeat_rows = 8
//! repeat_cols = 8
//! margin_rows = 6          # partial unit appended below, < period_rows
//! margin_cols = 4          # partial unit appended right, < period_cols
//! noise = 2.0              # uniform noise amplitude
//! seed = 7
//!
//! [[defects]]
//! shape = "blob"           # blob | scratch | missing_motif
//! row = 60
//! col = 75
//! size = 6
//! delta = 50.0
//! ```
//!
//! * `blob`: disc of radius `size` centred at `(row, col)`, intensity shifted by `delta`.
//! * `scratch`: 2-pixel-high horizontal bar starting at `(row, col)`, `size` pixels long.
//! * `missing_motif`: the unit containing `(row, col)` loses its motif; `size`
//!   and `delta` are ignored.
//!
//! Noise is drawn from ChaCha8 seeded with `seed`, one uniform sample in
//! `[-noise, noise)` per pixel in row-major order. The final image is rounded
//! and clamped to `0..=255`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::DefectMask;
use crate::image::GrayImage;
use crate::tiling::BlockGrid;

pub const BACKGROUND: f64 = 80.0;
pub const MOTIF_AMPLITUDE: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Dot,
    Star,
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectShape {
    Blob,
    Scratch,
    MissingMotif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    pub shape: DefectShape,
    pub row: usize,
    pub col: usize,
    #[serde(default)]
    pub size: usize,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub pattern: Pattern,
    pub period_rows: usize,
    pub period_cols: usize,
    pub repeat_rows: usize,
    pub repeat_cols: usize,
    #[serde(default)]
    pub margin_rows: usize,
    #[serde(default)]
    pub margin_cols: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub defects: Vec<DefectSpec>,
}

impl SyntheticSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn height(&self) -> usize {
        self.repeat_rows * self.period_rows + self.margin_rows
    }

    pub fn width(&self) -> usize {
        self.repeat_cols * self.period_cols + self.margin_cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.period_rows < 4 || self.period_cols < 4 {
            return Err(Error::Spec(format!(
                "periods must be at least 4x4, got {}x{}",
                self.period_rows, self.period_cols
            )));
        }
        if self.repeat_rows == 0 || self.repeat_cols == 0 {
            return Err(Error::Spec("repetitions must be at least 1 along each axis".into()));
        }
        if self.margin_rows >= self.period_rows || self.margin_cols >= self.period_cols {
            return Err(Error::Spec("margins must be shorter than one period".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::Spec(format!("noise must be a nonnegative number, got {}", self.noise)));
        }
        let (h, w) = (self.height(), self.width());
        for (i, d) in self.defects.iter().enumerate() {
            let inside = match d.shape {
                DefectShape::Blob => d.size >= 1 && d.row >= d.size && d.col >= d.size && d.row + d.size < h && d.col + d.size < w,
                DefectShape::Scratch => d.size >= 1 && d.row + 2 <= h && d.col + d.size <= w,
                DefectShape::MissingMotif => d.row < h && d.col < w,
            };
            if !inside {
                return Err(Error::Spec(format!(
                    "defect {} ({:?} at ({}, {}), size {}) does not fit inside the {h}x{w} image",
                    i + 1,
                    d.shape,
                    d.row,
                    d.col,
                    d.size
                )));
            }
            if !d.delta.is_finite() {
                return Err(Error::Spec(format!("defect {} has a non-finite delta", i + 1)));
            }
        }
        Ok(())
    }
}

/// Motif intensity above background at `(r, c)` of one unit, or `None`
/// outside the motif's support.
fn motif(pattern: Pattern, pr: usize, pc: usize, r: usize, c: usize) -> Option<f64> {
    let cy = (pr as f64 - 1.0) / 2.0;
    let cx = (pc as f64 - 1.0) / 2.0;
    let (dy, dx) = (r as f64 - cy, c as f64 - cx);
    match pattern {
        Pattern::Dot => {
            let radius = (pr.min(pc) as f64 / 2.0 - 2.0).max(1.0);
            let sigma = radius / 3.0;
            let d2 = dy * dy + dx * dx;
            (d2 <= radius * radius).then(|| MOTIF_AMPLITUDE * (-d2 / (2.0 * sigma * sigma)).exp())
        }
        Pattern::Star => {
            let (ly, lx) = (0.35 * pr as f64, 0.35 * pc as f64);
            let on = (dy.abs() <= 1.0 && dx.abs() <= lx) || (dx.abs() <= 1.0 && dy.abs() <= ly);
            on.then_some(MOTIF_AMPLITUDE)
        }
        Pattern::Box => {
            let (iy, ix) = ((pr / 5).max(2), (pc / 5).max(2));
            let (top, bottom, left, right) = (iy, pr - 1 - iy, ix, pc - 1 - ix);
            let inside = (top..=bottom).contains(&r) && (left..=right).contains(&c);
            let ring = inside && (r < top + 2 || r + 2 > bottom || c < left + 2 || c + 2 > right);
            ring.then_some(MOTIF_AMPLITUDE)
        }
    }
}

/// Renders the texture and the exact mask of defect pixels.
pub fn generate_texture(spec: &SyntheticSpec) -> Result<(GrayImage, DefectMask)> {
    spec.validate()?;
    let (h, w) = (spec.height(), spec.width());
    let (pr, pc) = (spec.period_rows, spec.period_cols);

    let unit: Vec<Option<f64>> = (0..pr * pc).map(|i| motif(spec.pattern, pr, pc, i / pc, i % pc)).collect();
    let mut px = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            px[r * w + c] = BACKGROUND + unit[(r % pr) * pc + c % pc].unwrap_or(0.0);
        }
    }

    let mut mask = DefectMask::new(h, w);
    for d in &spec.defects {
        match d.shape {
            DefectShape::MissingMotif => {
                let (r0, c0) = (d.row / pr * pr, d.col / pc * pc);
                for r in r0..(r0 + pr).min(h) {
                    for c in c0..(c0 + pc).min(w) {
                        if unit[(r - r0) * pc + (c - c0)].is_some() {
                            px[r * w + c] = BACKGROUND;
                            mask.set(r, c, true);
                        }
                    }
                }
            }
            DefectShape::Blob => {
                let rad = d.size as isize;
                for dr in -rad..=rad {
                    for dc in -rad..=rad {
                        if dr * dr + dc * dc <= rad * rad {
                            let (r, c) = ((d.row as isize + dr) as usize, (d.col as isize + dc) as usize);
                            px[r * w + c] += d.delta;
                            mask.set(r, c, true);
                        }
                    }
                }
            }
            DefectShape::Scratch => {
                for r in d.row..d.row + 2 {
                    for c in d.col..d.col + d.size {
                        px[r * w + c] += d.delta;
                        mask.set(r, c, true);
                    }
                }
            }
        }
    }

    if spec.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for p in px.iter_mut() {
            *p += rng.gen_range(-spec.noise..spec.noise);
        }
    }
    for p in px.iter_mut() {
        *p = p.round().clamp(0.0, 255.0);
    }
    Ok((GrayImage::new(h, w, px)?, mask))
}

/// Blocks whose rectangle contains at least one defect pixel, ascending.
pub fn ground_truth_blocks(defects: &DefectMask, grid: &BlockGrid) -> Result<Vec<usize>> {
    let crop = &grid.crop;
    if crop.row_offset + crop.crop_height > defects.height() || crop.col_offset + crop.crop_width > defects.width() {
        return Err(Error::GeometryMismatch(format!(
            "grid extends past the {}x{} defect mask",
            defects.height(),
            defects.width()
        )));
    }
    Ok((1..=grid.n_blocks)
        .filter(|&k| defects.intersects(&grid.block_rect(k).expect("index in range")))
        .collect())
}
