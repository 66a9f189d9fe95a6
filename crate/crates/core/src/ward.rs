//! Ward agglomeration of scalar block energies, the two-cluster cut and the
//! minority rule.
//!
//! Cluster ids are 1-based: leaves are `1..=n`, and the cluster created by
//! linkage row `i` (1-based) gets id `n + i`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

/// One merge: the two cluster ids joined and the Ward distance of the join.
///
/// `left` is the child with the lower centroid (lower id on equal centroids).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkageRow {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

/// Merge history with `n - 1` rows for `n` observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkageMatrix {
    pub n: usize,
    pub rows: Vec<LinkageRow>,
}

impl LinkageMatrix {
    /// Leaf ids (1-based) under cluster `id`, ascending.
    pub fn leaves(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c <= self.n {
                out.push(c);
            } else {
                let row = &self.rows[c - self.n - 1];
                stack.push(row.left);
                stack.push(row.right);
            }
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    id: usize,
    size: usize,
    sum: f64,
}

impl Cluster {
    fn centroid(&self) -> f64 {
        self.sum / self.size as f64
    }
}

/// Increase in total within-cluster sum of squares caused by merging `u`, `v`.
fn ward_distance(u: &Cluster, v: &Cluster) -> f64 {
    let (nu, nv) = (u.size as f64, v.size as f64);
    let d = u.centroid() - v.centroid();
    nu * nv / (nu + nv) * d * d
}

/// Agglomerates scalar features with Ward's minimum-variance criterion.
///
/// Each step merges the pair with the smallest distance
/// `|U||V| / (|U| + |V|) * (c_U - c_V)^2`; equal distances go to the pair
/// with the lexicographically smallest `(min id, max id)`.
pub fn ward_linkage(features: &[f64]) -> Result<LinkageMatrix> {
    let n = features.len();
    if n < 2 {
        return Err(Error::Clustering(format!("need at least 2 observations, got {n}")));
    }
    if let Some(i) = features.iter().position(|f| !f.is_finite()) {
        return Err(Error::Clustering(format!("feature {} is not finite", i + 1)));
    }

    let mut active: Vec<Cluster> = features
        .iter()
        .enumerate()
        .map(|(i, &f)| Cluster { id: i + 1, size: 1, sum: f })
        .collect();
    let mut rows = Vec::with_capacity(n - 1);

    for step in 1..n {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let d = ward_distance(&active[i], &active[j]);
                let key = (active[i].id.min(active[j].id), active[i].id.max(active[j].id));
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _, _)) => match d.partial_cmp(bd).expect("finite distances") {
                        Ordering::Less => true,
                        Ordering::Equal => key < *bkey,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((d, key, i, j));
                }
            }
        }
        let (distance, _, i, j) = best.expect("at least two active clusters");
        let (u, v) = (active[i], active[j]);
        let (left, right) = match u.centroid().partial_cmp(&v.centroid()).expect("finite") {
            Ordering::Less => (u, v),
            Ordering::Greater => (v, u),
            Ordering::Equal if u.id < v.id => (u, v),
            Ordering::Equal => (v, u),
        };
        rows.push(LinkageRow {
            left: left.id,
            right: right.id,
            distance,
        });
        // j > i, so removing j first keeps i valid
        active.swap_remove(j);
        active[i] = Cluster {
            id: n + step,
            size: u.size + v.size,
            sum: u.sum + v.sum,
        };
    }

    Ok(LinkageMatrix { n, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClusterLabel {
    A,
    B,
}

/// The partition obtained by undoing the final merge, plus the decision
/// taken on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoClusterCut {
    /// Label of block `k` at index `k - 1`. `A` is the left child of the final merge.
    pub labels: Vec<ClusterLabel>,
    pub defective_cluster: Option<ClusterLabel>,
    /// 1-based block indices, ascending.
    pub defective_blocks: Vec<usize>,
    /// Both clusters had the same size and the tie rule decided.
    pub ambiguous: bool,
    /// Distance of the last merge.
    pub final_distance: f64,
    /// Distance of the last-but-one merge (0 when `n = 2`).
    pub penultimate_distance: f64,
}

impl TwoClusterCut {
    pub fn members(&self, label: ClusterLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Splits the leaves into the two subtrees joined by the last row of `z`.
pub fn cut_two_clusters(z: &LinkageMatrix) -> Result<TwoClusterCut> {
    if z.n < 2 || z.rows.len() != z.n - 1 {
        return Err(Error::Clustering(format!(
            "linkage has {} rows for {} observations",
            z.rows.len(),
            z.n
        )));
    }
    let last = z.rows[z.rows.len() - 1];
    let mut labels = vec![ClusterLabel::B; z.n];
    for leaf in z.leaves(last.left) {
        labels[leaf - 1] = ClusterLabel::A;
    }
    let penultimate_distance = if z.rows.len() >= 2 {
        z.rows[z.rows.len() - 2].distance
    } else {
        0.0
    };
    Ok(TwoClusterCut {
        labels,
        defective_cluster: None,
        defective_blocks: Vec::new(),
        ambiguous: false,
        final_distance: last.distance,
        penultimate_distance,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Ratio of the last-but-one to the last merge distance; 0 when every
/// feature is identical.
pub fn linkage_ratio(cut: &TwoClusterCut) -> f64 {
    if cut.final_distance > 0.0 {
        cut.penultimate_distance / cut.final_distance
    } else {
        0.0
    }
}

/// Marks the smaller cluster as defective.
///
/// On equal sizes the cluster whose centroid lies farther from the median
/// energy wins, then the one with the higher centroid, and `ambiguous` is
/// set. With `tau > 0`, a linkage ratio below `tau` yields no defective
/// cluster.
pub fn minority_rule(cut: &TwoClusterCut, features: &[f64], tau: f64) -> Result<TwoClusterCut> {
    if features.len() != cut.labels.len() {
        return Err(Error::GeometryMismatch(format!(
            "{} features for {} labels",
            features.len(),
            cut.labels.len()
        )));
    }
    let a = cut.members(ClusterLabel::A);
    let b = cut.members(ClusterLabel::B);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Clustering("two-cluster cut has an empty cluster".into()));
    }

    let mut out = cut.clone();
    out.ambiguous = false;
    out.defective_cluster = None;
    out.defective_blocks.clear();

    if tau > 0.0 && linkage_ratio(cut) < tau {
        return Ok(out);
    }

    let chosen = match a.len().cmp(&b.len()) {
        Ordering::Less => ClusterLabel::A,
        Ordering::Greater => ClusterLabel::B,
        Ordering::Equal => {
            out.ambiguous = true;
            let centroid = |ids: &[usize]| ids.iter().map(|&k| features[k - 1]).sum::<f64>() / ids.len() as f64;
            let (ca, cb) = (centroid(&a), centroid(&b));
            let med = median(features);
            let (da, db) = ((ca - med).abs(), (cb - med).abs());
            match da.partial_cmp(&db).expect("finite") {
                Ordering::Greater => ClusterLabel::A,
                Ordering::Less => ClusterLabel::B,
                Ordering::Equal if cb > ca => ClusterLabel::B,
                Ordering::Equal => ClusterLabel::A,
            }
        }
    };
    out.defective_cluster = Some(chosen);
    out.defective_blocks = if chosen == ClusterLabel::A { a } else { b };
    Ok(out)
}

/// Linkage, cut and minority rule in one call.
pub fn classify_blocks(features: &[f64], tau: f64) -> Result<(LinkageMatrix, TwoClusterCut)> {
    let z = ward_linkage(features)?;
    let cut = cut_two_clusters(&z)?;
    let decided = minority_rule(&cut, features, tau)?;
    Ok((z, decided))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn partition(features: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let cut = cut_two_clusters(&ward_linkage(features).unwrap()).unwrap();
        let (a, b) = (cut.members(ClusterLabel::A), cut.members(ClusterLabel::B));
        // canonical order: the side holding block 1 first
        if a.contains(&1) {
            (a, b)
        } else {
            (b, a)
        }
    }

    #[test]
    fn three_point_hand_example() {
        let z = ward_linkage(&[0.0, 1.0, 10.0]).unwrap();
        assert_eq!(z.rows.len(), 2);
        assert_eq!((z.rows[0].left, z.rows[0].right), (1, 2));
        assert_eq!(z.rows[0].distance, 0.5);
        assert_eq!((z.rows[1].left, z.rows[1].right), (4, 3));
        let expect = 2.0 / 3.0 * 9.5f64.powi(2);
        assert!((z.rows[1].distance - expect).abs() < 1e-12);
        assert!((z.rows[1].distance - 60.1667).abs() < 1e-4);
    }

    #[test]
    fn identical_pair_merges_at_zero() {
        let z = ward_linkage(&[5.0, 5.0]).unwrap();
        assert_eq!(z.rows, vec![LinkageRow { left: 1, right: 2, distance: 0.0 }]);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(ward_linkage(&[1.0]).is_err());
        assert!(ward_linkage(&[]).is_err());
        assert!(ward_linkage(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn equal_distances_merge_smallest_ids_first() {
        let z = ward_linkage(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        let pairs: Vec<_> = z.rows.iter().map(|r| (r.left, r.right)).collect();
        assert_eq!(pairs, vec![(1, 2), (3, 4), (5, 6)]);
    }

    #[test]
    fn cuts() {
        assert_eq!(partition(&[0.0, 1.0, 10.0]), (vec![1, 2], vec![3]));
        assert_eq!(partition(&[3.0, 8.0]), (vec![1], vec![2]));
        assert_eq!(partition(&[1.0, 1.0, 9.0, 9.0]), (vec![1, 2], vec![3, 4]));
    }

    #[test]
    fn strict_minority_is_defective() {
        let mut f = vec![100.0; 80];
        f[41] = 180.0;
        let (_, cut) = classify_blocks(&f, 0.0).unwrap();
        assert_eq!(cut.defective_blocks, vec![42]);
        assert!(!cut.ambiguous);
    }

    #[test]
    fn equal_sizes_use_tie_rule() {
        let f = [1.0, 1.0, 9.0, 9.0];
        let (_, cut) = classify_blocks(&f, 0.0).unwrap();
        assert!(cut.ambiguous);
        assert_eq!(cut.defective_blocks, vec![3, 4]);

        // farther from the median wins regardless of energy direction
        let f = [0.0, 2.0, 9.0, 9.5, 10.0, 10.5];
        let (_, cut) = classify_blocks(&f, 0.0).unwrap();
        assert!(!cut.ambiguous);
        assert_eq!(cut.defective_blocks, vec![1, 2]);
        let f = [0.0, 1.0, 9.0, 9.5];
        let (_, cut) = classify_blocks(&f, 0.0).unwrap();
        // median 5, centroids 0.5 and 9.25
        assert!(cut.ambiguous);
        assert_eq!(cut.defective_blocks, vec![1, 2]);
    }

    #[test]
    fn tau_guard() {
        let flat = vec![42.0; 16];
        let (_, cut) = classify_blocks(&flat, 0.05).unwrap();
        assert_eq!(cut.defective_cluster, None);
        assert!(cut.defective_blocks.is_empty());
        // disabled guard always decides
        let (_, cut) = classify_blocks(&flat, 0.0).unwrap();
        assert!(cut.defective_cluster.is_some());

        let f = [10.0, 10.5, 11.0, 10.2, 30.0];
        let (_, cut) = classify_blocks(&f, 0.0).unwrap();
        let ratio = linkage_ratio(&cut);
        let (_, above) = classify_blocks(&f, ratio * 0.5).unwrap();
        assert_eq!(above.defective_blocks, vec![5]);
        let (_, below) = classify_blocks(&f, ratio * 2.0).unwrap();
        assert!(below.defective_blocks.is_empty());
    }

    #[test]
    fn leaves_of_root_are_everything() {
        let z = ward_linkage(&[4.0, 1.0, 7.0, 2.0, 2.5]).unwrap();
        assert_eq!(z.leaves(2 * z.n - 1), vec![1, 2, 3, 4, 5]);
    }

    fn features() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1000.0, 2..40)
    }

    proptest! {
        #[test]
        fn ids_are_consumed_once(f in features()) {
            let z = ward_linkage(&f).unwrap();
            let n = f.len();
            let mut seen = vec![false; 2 * n];
            for (i, row) in z.rows.iter().enumerate() {
                let new_id = n + i + 1;
                for id in [row.left, row.right] {
                    prop_assert!(id >= 1 && id < new_id);
                    prop_assert!(!seen[id]);
                    seen[id] = true;
                }
                prop_assert!(row.distance >= 0.0);
            }
            let max = z.rows.iter().map(|r| r.distance).fold(0.0, f64::max);
            prop_assert_eq!(z.rows.last().unwrap().distance, max);
        }

        #[test]
        fn distances_never_decrease(f in features()) {
            let z = ward_linkage(&f).unwrap();
            for w in z.rows.windows(2) {
                prop_assert!(w[0].distance <= w[1].distance, "{:?}", z.rows);
            }
        }

        #[test]
        fn partition_invariant_under_affine_maps(f in features(), a in 0.01f64..100.0, b in -500.0f64..500.0) {
            let base = partition(&f);
            let scaled: Vec<f64> = f.iter().map(|x| a * x).collect();
            let shifted: Vec<f64> = f.iter().map(|x| x + b).collect();
            prop_assert_eq!(&partition(&scaled), &base);
            prop_assert_eq!(&partition(&shifted), &base);
        }

        #[test]
        fn deterministic(f in features()) {
            prop_assert_eq!(ward_linkage(&f).unwrap(), ward_linkage(&f).unwrap());
        }
    }
}
