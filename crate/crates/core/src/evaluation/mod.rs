//! Block-level scoring against ground truth, and the synthetic texture
//! generator used as a stand-in for real fabric captures.

pub mod synth;

pub use synth::{generate_texture, ground_truth_blocks, DefectShape, DefectSpec, Pattern, SyntheticSpec};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tiling::Corner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `TP / (TP + FP)`; `None` when nothing was predicted defective.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`; `None` when nothing is truly defective.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `(TP + TN) / (TP + TN + FP + FN)`.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts and metrics for one crop. Undefined metrics are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CropScore {
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Membership vector, or the first out-of-range index.
fn membership(blocks: &[usize], n_blocks: usize) -> std::result::Result<Vec<bool>, usize> {
    let mut set = vec![false; n_blocks];
    for &k in blocks {
        if k == 0 || k > n_blocks {
            return Err(k);
        }
        set[k - 1] = true;
    }
    Ok(set)
}

/// Scores predicted against true defective blocks (1-based indices).
pub fn score_crop(predicted: &[usize], truth: &[usize], n_blocks: usize) -> Result<CropScore> {
    let p = membership(predicted, n_blocks).map_err(|index| Error::BlockOutOfRange { index, n_blocks })?;
    let t = membership(truth, n_blocks)
        .map_err(|index| Error::Truth(format!("block index {index} out of range 1..={n_blocks}")))?;
    let mut counts = ConfusionCounts::default();
    for (&pk, &tk) in p.iter().zip(&t) {
        match (pk, tk) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(CropScore {
        counts,
        precision: counts.precision(),
        recall: counts.recall(),
        accuracy: counts.accuracy(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CropMetrics {
    pub corner: Corner,
    pub n_blocks: usize,
    pub score: CropScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AveragedMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Per-crop rows plus their unweighted means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_crop: Vec<CropMetrics>,
    pub averaged: AveragedMetrics,
}

/// Arithmetic mean of the defined values; `None` if none are defined.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.into_iter().flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

impl MetricsReport {
    pub fn new(per_crop: Vec<CropMetrics>) -> Self {
        let averaged = AveragedMetrics {
            precision: mean_defined(per_crop.iter().map(|c| c.score.precision)),
            recall: mean_defined(per_crop.iter().map(|c| c.score.recall)),
            accuracy: mean_defined(per_crop.iter().map(|c| c.score.accuracy)),
        };
        Self { per_crop, averaged }
    }

    pub fn total_blocks(&self) -> usize {
        self.per_crop.iter().map(|c| c.n_blocks).sum()
    }
}

/// A metric as a percentage with one decimal, or `-` when undefined.
pub fn format_percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "-".to_string(),
    }
}
