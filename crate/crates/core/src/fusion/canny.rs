use serde::Serialize;

use super::DefectMask;
use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CannyParams {
    /// Standard deviation of the Gaussian pre-smoothing, in pixels.
    pub sigma: f64,
    /// Percentile (0, 100] of the nonzero gradient magnitudes used as the high threshold.
    pub high_percentile: f64,
    /// Low threshold as a fraction of the high one.
    pub low_ratio: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            high_percentile: 90.0,
            low_ratio: 0.4,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::CannyParams(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.high_percentile > 0.0 && self.high_percentile <= 100.0) {
            return Err(Error::CannyParams(format!(
                "high percentile must be in (0, 100], got {}",
                self.high_percentile
            )));
        }
        if !(self.low_ratio > 0.0 && self.low_ratio <= 1.0) {
            return Err(Error::CannyParams(format!(
                "low ratio must be in (0, 1], got {}",
                self.low_ratio
            )));
        }
        Ok(())
    }

    pub fn kernel_radius(&self) -> usize {
        (3.0 * self.sigma).ceil() as usize
    }
}

/// Intermediate fields of one detector run, row-major.
#[derive(Debug, Clone)]
pub struct CannyStages {
    pub smoothed: Vec<f64>,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Magnitude where the pixel survived non-maximum suppression, else 0.
    pub suppressed: Vec<f64>,
    pub high: f64,
    pub low: f64,
    pub edges: DefectMask,
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Separable Gaussian blur with replicated borders.
fn smooth(img: &GrayImage, kernel: &[f64]) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let r = (kernel.len() / 2) as isize;
    let src = img.pixels();
    let mut tmp = vec![0.0; h * w];
    for row in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, wt) in kernel.iter().enumerate() {
                acc += wt * src[row * w + clamp_index(c as isize + k as isize - r, w)];
            }
            tmp[row * w + c] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for row in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (k, wt) in kernel.iter().enumerate() {
                acc += wt * tmp[clamp_index(row as isize + k as isize - r, h) * w + c];
            }
            out[row * w + c] = acc;
        }
    }
    out
}

/// Neighbour step `(drow, dcol)` along the quantized gradient direction.
pub(crate) fn quantized_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (0, 1)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (1, 0)
    } else {
        (1, -1)
    }
}

/// Canny edge map of `img`.
pub fn canny_edges(img: &GrayImage, params: &CannyParams) -> Result<DefectMask> {
    Ok(canny_detailed(img, params)?.edges)
}

/// Runs every detector stage and keeps the intermediates.
///
/// A pixel survives suppression when it is nonzero, at least as large as its
/// backward neighbour and strictly larger than its forward neighbour along
/// the gradient direction, so a symmetric two-pixel ridge yields one pixel.
/// Neighbours outside the image count as 0.
pub fn canny_detailed(img: &GrayImage, params: &CannyParams) -> Result<CannyStages> {
    params.validate()?;
    let radius = params.kernel_radius();
    let size = 2 * radius + 1;
    let (h, w) = (img.height(), img.width());
    if h < size || w < size {
        return Err(Error::KernelTooLarge {
            height: h,
            width: w,
            kernel: size,
        });
    }

    let smoothed = smooth(img, &gaussian_kernel(params.sigma, radius));

    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    let mut magnitude = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let right = smoothed[r * w + clamp_index(c as isize + 1, w)];
            let left = smoothed[r * w + clamp_index(c as isize - 1, w)];
            let down = smoothed[clamp_index(r as isize + 1, h) * w + c];
            let up = smoothed[clamp_index(r as isize - 1, h) * w + c];
            gx[i] = (right - left) / 2.0;
            gy[i] = (down - up) / 2.0;
            magnitude[i] = gx[i].hypot(gy[i]);
        }
    }

    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            magnitude[r as usize * w + c as usize]
        }
    };
    let mut suppressed = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let m = magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dr, dc) = quantized_step(gx[i], gy[i]);
            let (ri, ci) = (r as isize, c as isize);
            let forward = at(ri + dr, ci + dc);
            let backward = at(ri - dr, ci - dc);
            if m >= backward && m > forward {
                suppressed[i] = m;
            }
        }
    }

    let mut nonzero: Vec<f64> = magnitude.iter().copied().filter(|&m| m > 0.0).collect();
    let mut edges = DefectMask::new(h, w);
    if nonzero.is_empty() {
        return Ok(CannyStages {
            smoothed,
            gx,
            gy,
            magnitude,
            suppressed,
            high: 0.0,
            low: 0.0,
            edges,
        });
    }
    nonzero.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));
    // nearest-rank percentile
    let rank = ((params.high_percentile / 100.0) * nonzero.len() as f64).ceil() as usize;
    let high = nonzero[rank.clamp(1, nonzero.len()) - 1];
    let low = params.low_ratio * high;

    let mut stack = Vec::new();
    for i in 0..h * w {
        if suppressed[i] >= high && !edges.bits[i] {
            edges.bits[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (r, c) = ((j / w) as isize, (j % w) as isize);
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (nr, nc) = (r + dr, c + dc);
                        if (dr == 0 && dc == 0) || nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                            continue;
                        }
                        let k = nr as usize * w + nc as usize;
                        if !edges.bits[k] && suppressed[k] > 0.0 && suppressed[k] >= low {
                            edges.bits[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }

    Ok(CannyStages {
        smoothed,
        gx,
        gy,
        magnitude,
        suppressed,
        high,
        low,
        edges,
    })
}
