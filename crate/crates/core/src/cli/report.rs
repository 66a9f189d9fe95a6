//! JSON report layout and the plain-text truth file.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::MetricsReport;
use crate::fusion::CannyParams;
use crate::pipeline::{CropAnalysis, Inspection, InspectParams};
use crate::tiling::Corner;
use crate::ward::ClusterLabel;

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub input: InputInfo,
    pub parameters: Parameters,
    pub crops: Vec<CropReport>,
    pub fused: FusedInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<&'static str, f64>>,
}

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Serialize)]
pub struct Parameters {
    pub period_rows: usize,
    pub period_cols: usize,
    pub canny: CannyParams,
    pub tau: f64,
}

#[derive(Debug, Serialize)]
pub struct CropReport {
    pub corner: Corner,
    pub row_offset: usize,
    pub col_offset: usize,
    pub crop_height: usize,
    pub crop_width: usize,
    pub rows_of_blocks: usize,
    pub cols_of_blocks: usize,
    pub n_blocks: usize,
    pub energies: Vec<f64>,
    /// `[left, right, distance]` per merge, 1-based cluster ids.
    pub linkage: Vec<(usize, usize, f64)>,
    pub final_distance: f64,
    pub penultimate_distance: f64,
    pub defective_cluster: Option<ClusterLabel>,
    pub ambiguous: bool,
    pub defective_blocks: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct FusedInfo {
    pub filled_pixels: usize,
    pub edge_pixels: usize,
}

#[derive(Debug, Serialize)]
pub struct MetricsRow {
    pub corner: Option<Corner>,
    pub n_blocks: usize,
    pub tp: Option<usize>,
    pub tn: Option<usize>,
    pub fp: Option<usize>,
    #[serde(rename = "fn")]
    pub fn_: Option<usize>,
    pub precision_pct: Option<f64>,
    pub recall_pct: Option<f64>,
    pub accuracy_pct: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct MetricsTable {
    pub per_crop: Vec<MetricsRow>,
    pub averaged: MetricsRow,
}

/// Percentage rounded to one decimal.
pub fn pct(value: Option<f64>) -> Option<f64> {
    value.map(|v| (v * 1000.0).round() / 10.0)
}

impl MetricsTable {
    pub fn from_report(m: &MetricsReport) -> Self {
        let per_crop = m
            .per_crop
            .iter()
            .map(|c| MetricsRow {
                corner: Some(c.corner),
                n_blocks: c.n_blocks,
                tp: Some(c.score.counts.tp),
                tn: Some(c.score.counts.tn),
                fp: Some(c.score.counts.fp),
                fn_: Some(c.score.counts.fn_),
                precision_pct: pct(c.score.precision),
                recall_pct: pct(c.score.recall),
                accuracy_pct: pct(c.score.accuracy),
            })
            .collect();
        let averaged = MetricsRow {
            corner: None,
            n_blocks: m.total_blocks(),
            tp: None,
            tn: None,
            fp: None,
            fn_: None,
            precision_pct: pct(m.averaged.precision),
            recall_pct: pct(m.averaged.recall),
            accuracy_pct: pct(m.averaged.accuracy),
        };
        Self { per_crop, averaged }
    }
}

fn crop_report(c: &CropAnalysis) -> CropReport {
    let crop = &c.grid.crop;
    CropReport {
        corner: crop.corner,
        row_offset: crop.row_offset,
        col_offset: crop.col_offset,
        crop_height: crop.crop_height,
        crop_width: crop.crop_width,
        rows_of_blocks: c.grid.rows_of_blocks,
        cols_of_blocks: c.grid.cols_of_blocks,
        n_blocks: c.grid.n_blocks,
        energies: c.energies.values().to_vec(),
        linkage: c.linkage.rows.iter().map(|r| (r.left, r.right, r.distance)).collect(),
        final_distance: c.cut.final_distance,
        penultimate_distance: c.cut.penultimate_distance,
        defective_cluster: c.cut.defective_cluster,
        ambiguous: c.cut.ambiguous,
        defective_blocks: c.cut.defective_blocks.clone(),
    }
}

impl Report {
    pub fn new(path: &str, inspection: &Inspection, params: &InspectParams) -> Self {
        Self {
            tool: "gi",
            version: env!("CARGO_PKG_VERSION"),
            input: InputInfo {
                path: path.to_string(),
                height: inspection.overlay.height(),
                width: inspection.overlay.width(),
            },
            parameters: Parameters {
                period_rows: params.period.unit_rows(),
                period_cols: params.period.unit_cols(),
                canny: params.canny,
                tau: params.tau,
            },
            crops: inspection.crops.iter().map(crop_report).collect(),
            fused: FusedInfo {
                filled_pixels: inspection.fused.filled.count(),
                edge_pixels: inspection.fused.edges.count(),
            },
            metrics: None,
            timings_ms: None,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}

/// Table layout: one row per crop plus the average.
pub fn metrics_text(m: &MetricsReport) -> String {
    use crate::evaluation::format_percent;
    let mut s = format!(
        "{:<14}{:>10}{:>15}{:>12}{:>15}\n",
        "crop", "blocks", "precision(%)", "recall(%)", "accuracy(%)"
    );
    for c in &m.per_crop {
        s.push_str(&format!(
            "{:<14}{:>10}{:>15}{:>12}{:>15}\n",
            c.corner.name(),
            c.n_blocks,
            format_percent(c.score.precision),
            format_percent(c.score.recall),
            format_percent(c.score.accuracy)
        ));
    }
    s.push_str(&format!(
        "{:<14}{:>10}{:>15}{:>12}{:>15}\n",
        "average",
        m.total_blocks(),
        format_percent(m.averaged.precision),
        format_percent(m.averaged.recall),
        format_percent(m.averaged.accuracy)
    ));
    s
}

/// Per-crop defective block lists as TOML, keyed by corner name.
pub fn truth_to_text(truth: &[(Corner, Vec<usize>)]) -> String {
    let mut s = String::from("# defective blocks per corner crop (1-based, row-major)\n");
    for (corner, blocks) in truth {
        let list: Vec<String> = blocks.iter().map(|b| b.to_string()).collect();
        s.push_str(&format!("{} = [{}]\n", corner.name(), list.join(", ")));
    }
    s
}

/// Parses a truth document; every corner must be present.
pub fn parse_truth(text: &str) -> Result<Vec<(Corner, Vec<usize>)>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Truth(e.to_string()))?;
    for key in table.keys() {
        if Corner::parse(key).is_none() {
            return Err(Error::Truth(format!("unknown key `{key}`")));
        }
    }
    Corner::ALL
        .iter()
        .map(|corner| {
            let value = table
                .get(corner.name())
                .ok_or_else(|| Error::Truth(format!("missing `{}`", corner.name())))?;
            let items = value
                .as_array()
                .ok_or_else(|| Error::Truth(format!("`{}` must be a list", corner.name())))?;
            let blocks = items
                .iter()
                .map(|v| match v.as_integer() {
                    Some(k) if k >= 1 => Ok(k as usize),
                    _ => Err(Error::Truth(format!(
                        "`{}` holds {v}, block indices are 1-based positive integers",
                        corner.name()
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((*corner, blocks))
        })
        .collect()
}
