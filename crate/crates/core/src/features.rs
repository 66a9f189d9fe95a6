//! Per-block L1 energy of a gradient-space crop.

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::tiling::BlockGrid;

/// One energy per block, index `k - 1` holding block `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector(Vec<f64>);

impl EnergyVector {
    /// Energies must be finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Clustering(format!("invalid block energy {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Sums `|g|` over every block of `g_crop`, the crop window described by
/// `grid` (crop-local coordinates).
///
/// Each block is reduced row by row, left to right, so the result does not
/// depend on how blocks are scheduled.
pub fn block_energies(g_crop: &GrayImage, grid: &BlockGrid) -> Result<EnergyVector> {
    if g_crop.height() != grid.crop.crop_height || g_crop.width() != grid.crop.crop_width {
        return Err(Error::GeometryMismatch(format!(
            "crop image is {}x{} but grid expects {}x{}",
            g_crop.height(),
            g_crop.width(),
            grid.crop.crop_height,
            grid.crop.crop_width
        )));
    }
    let (pc, pr) = (grid.period.unit_rows(), grid.period.unit_cols());
    let w = g_crop.width();
    let px = g_crop.pixels();
    let mut energies = Vec::with_capacity(grid.n_blocks);
    for br in 0..grid.rows_of_blocks {
        for bc in 0..grid.cols_of_blocks {
            let mut sum = 0.0;
            for r in br * pc..(br + 1) * pc {
                let row = &px[r * w + bc * pr..r * w + (bc + 1) * pr];
                for v in row {
                    sum += v.abs();
                }
            }
            energies.push(sum);
        }
    }
    Ok(EnergyVector(energies))
}
