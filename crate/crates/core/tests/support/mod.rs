//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use gi_core::evaluation::{DefectShape, DefectSpec, Pattern, SyntheticSpec};
use gi_core::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct per-pixel evaluation of the forward differences and magnitude.
pub fn reference_gradient(img: &GrayImage) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (h, w) = (img.height(), img.width());
    let mut gx = Vec::with_capacity(h * w);
    let mut gy = Vec::with_capacity(h * w);
    let mut mag = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let f = img.get(y, x);
            let dx = if x == w - 1 { 0.0 } else { img.get(y, x + 1) - f };
            let dy = if y == h - 1 { 0.0 } else { img.get(y + 1, x) - f };
            gx.push(dx);
            gy.push(dy);
            mag.push((dx * dx + dy * dy).sqrt());
        }
    }
    (gx, gy, mag)
}

/// `floor(extent / period) * period` by repeated subtraction.
pub fn whole_period_extent(extent: usize, period: usize) -> usize {
    let mut rest = extent;
    let mut covered = 0;
    while rest >= period {
        rest -= period;
        covered += period;
    }
    covered
}

/// One step of the exhaustive Ward oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    /// Merged ids, smaller first.
    pub pair: (usize, usize),
    pub increase: f64,
    /// Leaves of the merged cluster, ascending.
    pub members: Vec<usize>,
}

fn sse(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

fn total_sse(features: &[f64], clusters: &[(usize, Vec<usize>)]) -> f64 {
    clusters
        .iter()
        .map(|(_, m)| sse(&m.iter().map(|&k| features[k - 1]).collect::<Vec<_>>()))
        .sum()
}

/// Greedy minimum-variance agglomeration that recomputes the total
/// within-cluster sum of squares of every candidate partition. Increases
/// within a relative 1e-9 of each other count as tied and go to the
/// lexicographically smaller id pair.
pub fn brute_force_ward(features: &[f64]) -> Vec<OracleMerge> {
    let n = features.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (1..=n).map(|k| (k, vec![k])).collect();
    let mut merges = Vec::new();
    for step in 1..n {
        let base = total_sse(features, &clusters);
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let mut trial: Vec<(usize, Vec<usize>)> = clusters
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, c)| c.clone())
                    .collect();
                let mut merged = clusters[i].1.clone();
                merged.extend(&clusters[j].1);
                trial.push((0, merged));
                let inc = total_sse(features, &trial) - base;
                let (a, b) = (clusters[i].0, clusters[j].0);
                let key = (a.min(b), a.max(b));
                let better = match best {
                    None => true,
                    Some((bi, bk, _, _)) => {
                        let tol = 1e-9 * bi.abs().max(1.0);
                        inc < bi - tol || ((inc - bi).abs() <= tol && key < bk)
                    }
                };
                if better {
                    best = Some((inc, key, i, j));
                }
            }
        }
        let (inc, key, i, j) = best.unwrap();
        let mut members = clusters[i].1.clone();
        members.extend(&clusters[j].1);
        members.sort_unstable();
        clusters.remove(j);
        clusters.remove(i);
        clusters.push((n + step, members.clone()));
        merges.push(OracleMerge { pair: key, increase: inc, members });
    }
    merges
}

/// Two-cluster partition implied by the oracle's merge sequence: the two
/// clusters alive before the final merge, as sorted leaf lists, the one
/// containing leaf 1 first.
pub fn oracle_partition(features: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = features.len();
    let merges = brute_force_ward(features);
    let mut alive: Vec<(usize, Vec<usize>)> = (1..=n).map(|k| (k, vec![k])).collect();
    for (step, m) in merges.iter().enumerate().take(n - 2) {
        alive.retain(|(id, _)| *id != m.pair.0 && *id != m.pair.1);
        alive.push((n + step + 1, m.members.clone()));
    }
    assert_eq!(alive.len(), 2);
    let mut a = alive[0].1.clone();
    let mut b = alive[1].1.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a.contains(&1) {
        (a, b)
    } else {
        (b, a)
    }
}

/// 8-connected components of `true` cells.
pub fn components8(bits: &[bool], h: usize, w: usize) -> usize {
    let mut seen = vec![false; h * w];
    let mut count = 0;
    for s in 0..h * w {
        if !bits[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w {
                        let j = nr as usize * w + nc as usize;
                        if bits[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
    count
}

/// Fixed 30-image corpus: 10 each of dot, star and box textures with 1-3
/// defects placed near unit centres.
///
/// Every fifth image carries only missing motifs (energy drops); the rest
/// carry blobs and scratches (energy rises), so the defects of one image
/// deviate from the background energy in the same direction. Scratches run
/// through flat background: below the horizontal arm of a star, inside the
/// ring of a box. Margins stay within the flat unit border so the image edge
/// never cuts through a motif.
pub fn corpus() -> Vec<SyntheticSpec> {
    let patterns = [Pattern::Dot, Pattern::Star, Pattern::Box];
    let periods = [(25usize, 30usize), (24, 24), (22, 28)];
    (0..30)
        .map(|i| {
            let family = i / 10;
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i as u64);
            let (pr, pc) = periods[family];
            let (repeat_rows, repeat_cols) = (8, 8);
            let mut spec = SyntheticSpec {
                pattern: patterns[family],
                period_rows: pr,
                period_cols: pc,
                repeat_rows,
                repeat_cols,
                margin_rows: rng.gen_range(0..=2),
                margin_cols: rng.gen_range(0..=2),
                noise: 3.0,
                seed: 1000 + i as u64,
                defects: Vec::new(),
            };
            let n_defects = 1 + i % 3;
            let mut used: Vec<(usize, usize)> = Vec::new();
            while spec.defects.len() < n_defects {
                let tile = (rng.gen_range(1..repeat_rows - 1), rng.gen_range(1..repeat_cols - 1));
                if used.iter().any(|&(r, c)| r.abs_diff(tile.0) <= 1 && c.abs_diff(tile.1) <= 1) {
                    continue;
                }
                used.push(tile);
                let (cy, cx) = (tile.0 * pr + pr / 2, tile.1 * pc + pc / 2);
                let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-2i64..=2);
                let (row, col) = ((cy as i64 + jitter(&mut rng)) as usize, (cx as i64 + jitter(&mut rng)) as usize);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let kind = if i % 5 == 4 { 2 } else { rng.gen_range(0..2) };
                let defect = match kind {
                    0 => DefectSpec { shape: DefectShape::Blob, row, col, size: rng.gen_range(4..=6), delta: sign * rng.gen_range(60.0..90.0) },
                    1 => {
                        let (row, len) = match spec.pattern {
                            Pattern::Star => (row + pr / 4, pc - 12),
                            Pattern::Box => (row, pc / 3),
                            Pattern::Dot => (row, pc - 12),
                        };
                        DefectSpec { shape: DefectShape::Scratch, row, col: col - len / 2, size: len, delta: sign * rng.gen_range(60.0..90.0) }
                    }
                    _ => DefectSpec { shape: DefectShape::MissingMotif, row, col, size: 0, delta: 0.0 },
                };
                spec.defects.push(defect);
            }
            spec
        })
        .collect()
}
