//! End-to-end inspection of one image.

use std::thread;

use serde::Serialize;

use crate::error::Result;
use crate::evaluation::{ground_truth_blocks, score_crop, CropMetrics, MetricsReport};
use crate::features::{block_energies, EnergyVector};
use crate::fusion::{fuse, overlay, CannyParams, DefectMask, Fused};
use crate::image::{gradient_space, GrayImage};
use crate::tiling::{block_grid, crop_image, four_crops, BlockGrid, CropSpec, Periodicity};
use crate::ward::{classify_blocks, LinkageMatrix, TwoClusterCut};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InspectParams {
    pub period: Periodicity,
    pub canny: CannyParams,
    /// Linkage-ratio guard; 0 disables it.
    pub tau: f64,
}

impl InspectParams {
    pub fn new(period: Periodicity) -> Self {
        Self {
            period,
            canny: CannyParams::default(),
            tau: 0.0,
        }
    }
}

/// Clustering outcome for one corner crop.
#[derive(Debug, Clone)]
pub struct CropAnalysis {
    pub grid: BlockGrid,
    pub energies: EnergyVector,
    pub linkage: LinkageMatrix,
    pub cut: TwoClusterCut,
}

impl CropAnalysis {
    pub fn defective_blocks(&self) -> &[usize] {
        &self.cut.defective_blocks
    }
}

#[derive(Debug, Clone)]
pub struct Inspection {
    pub gradient: GrayImage,
    /// In corner order: top-left, bottom-left, top-right, bottom-right.
    pub crops: Vec<CropAnalysis>,
    pub fused: Fused,
    /// Input image with the traced contour burnt in.
    pub overlay: GrayImage,
}

impl Inspection {
    pub fn detections(&self) -> Vec<(BlockGrid, Vec<usize>)> {
        self.crops
            .iter()
            .map(|c| (c.grid, c.cut.defective_blocks.clone()))
            .collect()
    }

    /// Scores each crop against the blocks touched by `defects`.
    pub fn score_against_mask(&self, defects: &DefectMask) -> Result<MetricsReport> {
        let truth = self
            .crops
            .iter()
            .map(|c| ground_truth_blocks(defects, &c.grid))
            .collect::<Result<Vec<_>>>()?;
        self.score(&truth)
    }

    /// Scores each crop against per-crop true block lists (same corner order).
    pub fn score(&self, truth: &[Vec<usize>]) -> Result<MetricsReport> {
        let rows = self
            .crops
            .iter()
            .zip(truth)
            .map(|(c, t)| {
                Ok(CropMetrics {
                    corner: c.grid.crop.corner,
                    n_blocks: c.grid.n_blocks,
                    score: score_crop(&c.cut.defective_blocks, t, c.grid.n_blocks)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricsReport::new(rows))
    }
}

fn analyse_crop(g: &GrayImage, crop: CropSpec, period: Periodicity, tau: f64) -> Result<CropAnalysis> {
    let grid = block_grid(crop, period)?;
    let energies = block_energies(&crop_image(g, &crop)?, &grid)?;
    let (linkage, cut) = classify_blocks(energies.values(), tau)?;
    Ok(CropAnalysis {
        grid,
        energies,
        linkage,
        cut,
    })
}

/// Worker count for the crop analyses: `requested`, or the machine's
/// parallelism when 0, capped at the four crops.
pub fn worker_count(requested: usize) -> usize {
    let n = if requested == 0 {
        thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        requested
    };
    n.clamp(1, 4)
}

/// Runs the full inspection. The four crops are analysed on up to
/// `threads` workers (0 = auto); results do not depend on the count.
pub fn inspect_image(img: &GrayImage, params: &InspectParams, threads: usize) -> Result<Inspection> {
    params.canny.validate()?;
    let crops = four_crops(img.height(), img.width(), params.period)?;
    let g = gradient_space(img);

    let workers = worker_count(threads);
    let mut slots: Vec<Option<Result<CropAnalysis>>> = (0..crops.len()).map(|_| None).collect();
    if workers == 1 {
        for (slot, crop) in slots.iter_mut().zip(crops) {
            *slot = Some(analyse_crop(&g, crop, params.period, params.tau));
        }
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|worker| {
                    let g = &g;
                    s.spawn(move || {
                        crops
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| i % workers == worker)
                            .map(|(i, crop)| (i, analyse_crop(g, *crop, params.period, params.tau)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("crop worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
    }
    let analyses = slots
        .into_iter()
        .map(|s| s.expect("every crop analysed"))
        .collect::<Result<Vec<_>>>()?;

    let detections: Vec<_> = analyses
        .iter()
        .map(|c| (c.grid, c.cut.defective_blocks.clone()))
        .collect();
    let fused = fuse(&detections, img.height(), img.width(), &params.canny)?;
    let overlay = overlay(img, &fused.edges)?;
    Ok(Inspection {
        gradient: g,
        crops: analyses,
        fused,
        overlay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{generate_texture, DefectShape, DefectSpec, Pattern, SyntheticSpec};
    use crate::Error;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            pattern: Pattern::Dot,
            period_rows: 25,
            period_cols: 30,
            repeat_rows: 8,
            repeat_cols: 8,
            margin_rows: 0,
            margin_cols: 0,
            noise: 0.0,
            seed: 3,
            defects: vec![],
        }
    }

    #[test]
    fn defect_free_with_guard_reports_nothing() {
        let (img, _) = generate_texture(&spec()).unwrap();
        let mut p = InspectParams::new(Periodicity::new(25, 30).unwrap());
        p.tau = 0.05;
        let out = inspect_image(&img, &p, 1).unwrap();
        assert!(out.crops.iter().all(|c| c.cut.defective_blocks.is_empty()));
        assert!(out.fused.filled.is_empty() && out.fused.edges.is_empty());
        assert_eq!(out.overlay, img);
    }

    #[test]
    fn blob_is_found_and_outlined() {
        let mut s = spec();
        s.noise = 2.0;
        s.margin_rows = 4;
        s.margin_cols = 3;
        s.defects.push(DefectSpec { shape: DefectShape::Blob, row: 87, col: 104, size: 5, delta: 70.0 });
        let (img, mask) = generate_texture(&s).unwrap();
        let out = inspect_image(&img, &InspectParams::new(Periodicity::new(25, 30).unwrap()), 2).unwrap();
        for c in &out.crops {
            let truth = ground_truth_blocks(&mask, &c.grid).unwrap();
            assert_eq!(c.cut.defective_blocks, truth, "{:?}", c.grid.crop.corner);
            for &k in &truth {
                let rect = c.grid.block_rect(k).unwrap();
                for r in rect.row..rect.row + rect.height {
                    for col in rect.col..rect.col + rect.width {
                        assert!(out.fused.filled.get(r, col));
                    }
                }
            }
        }
        let changed = (0..img.pixels().len())
            .filter(|&i| out.overlay.pixels()[i] != img.pixels()[i])
            .count();
        assert_eq!(changed, out.fused.edges.count());
        let report = out.score_against_mask(&mask).unwrap();
        assert_eq!(report.averaged.precision, Some(1.0));
        assert_eq!(report.averaged.recall, Some(1.0));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut s = spec();
        s.noise = 3.0;
        s.margin_rows = 9;
        s.margin_cols = 13;
        s.defects.push(DefectSpec { shape: DefectShape::Scratch, row: 40, col: 20, size: 40, delta: 50.0 });
        let (img, _) = generate_texture(&s).unwrap();
        let p = InspectParams::new(Periodicity::new(25, 30).unwrap());
        let one = inspect_image(&img, &p, 1).unwrap();
        for t in [0, 2, 3, 4, 16] {
            let other = inspect_image(&img, &p, t).unwrap();
            assert_eq!(other.fused, one.fused);
            for (a, b) in other.crops.iter().zip(&one.crops) {
                assert_eq!(a.linkage, b.linkage);
                assert_eq!(a.cut, b.cut);
            }
        }
    }

    #[test]
    fn too_small_for_two_periods() {
        let img = GrayImage::filled(49, 120, 0.0).unwrap();
        let err = inspect_image(&img, &InspectParams::new(Periodicity::new(25, 30).unwrap()), 1).unwrap_err();
        assert!(matches!(err, Error::TooFewPeriods { dimension: "height", .. }));
    }
}
