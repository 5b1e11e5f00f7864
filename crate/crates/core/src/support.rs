//! k-NN ball support estimation and the Precision/Recall counts.
//!
//! A set's support is the union of closed balls centred on its points, each
//! with radius equal to the distance to that point's k-th nearest neighbour
//! in the same set (the point itself excluded). Precision is the share of
//! output points inside the reference support; recall is the share of
//! reference points inside the output support.
//!
//! Search is exact and brute force. Every radius and every membership flag
//! is a per-row reduction, so results do not depend on thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::{sq_euclidean, Points};
use crate::preprocess::ReducedSet;

pub const DEFAULT_K: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportEstimate {
    pub points: Points,
    pub radii: Vec<f64>,
    pub k: usize,
}

impl SupportEstimate {
    pub fn new(points: Points, k: usize) -> Result<Self> {
        let radii = kth_radii(&points, k)?;
        Ok(Self { points, radii, k })
    }

    /// Whether `z` lies in at least one closed ball.
    pub fn contains(&self, z: &[f64]) -> bool {
        self.points
            .rows()
            .zip(&self.radii)
            .any(|(center, &radius)| sq_euclidean(z, center).sqrt() <= radius)
    }
}

/// Distance from each point to its k-th nearest neighbour among the others.
pub fn kth_radii(points: &Points, k: usize) -> Result<Vec<f64>> {
    let n = points.n_rows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewPoints { needed: k, actual: n });
    }
    let radii = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |buf, i| {
                buf.clear();
                let zi = points.row(i);
                buf.extend(
                    points
                        .rows()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, zj)| sq_euclidean(zi, zj)),
                );
                let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
                // sqrt is monotone, so the k-th distance is the root of the k-th squared one
                kth.sqrt()
            },
        )
        .collect();
    Ok(radii)
}

/// Per-query membership flags in the estimated support.
pub fn membership(queries: &Points, support: &SupportEstimate) -> Result<Vec<bool>> {
    if queries.n_cols() != support.points.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: support.points.n_cols(),
            actual: queries.n_cols(),
        });
    }
    Ok(queries
        .data()
        .par_chunks_exact(queries.n_cols())
        .map(|z| support.contains(z))
        .collect())
}

/// Number of query points inside the estimated support.
pub fn count_in_support(queries: &Points, support: &SupportEstimate) -> Result<usize> {
    Ok(membership(queries, support)?.into_iter().filter(|&m| m).count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PRResult {
    pub precision: f64,
    pub recall: f64,
    pub n_ref: usize,
    pub n_out: usize,
    pub k: usize,
    /// Output points inside the reference support.
    pub out_in_ref_support: usize,
    /// Reference points inside the output support.
    pub ref_in_out_support: usize,
    pub metadata: BTreeMap<String, String>,
}

pub fn precision_recall(reference: &ReducedSet, output: &ReducedSet, k: usize) -> Result<PRResult> {
    precision_recall_points(&reference.points, &output.points, k)
}

pub fn precision_recall_points(reference: &Points, output: &Points, k: usize) -> Result<PRResult> {
    if reference.n_cols() != output.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: reference.n_cols(),
            actual: output.n_cols(),
        });
    }
    let ref_support = SupportEstimate::new(reference.clone(), k)?;
    let out_support = SupportEstimate::new(output.clone(), k)?;
    let out_in_ref = count_in_support(output, &ref_support)?;
    let ref_in_out = count_in_support(reference, &out_support)?;
    Ok(PRResult {
        precision: out_in_ref as f64 / output.n_rows() as f64,
        recall: ref_in_out as f64 / reference.n_rows() as f64,
        n_ref: reference.n_rows(),
        n_out: output.n_rows(),
        k,
        out_in_ref_support: out_in_ref,
        ref_in_out_support: ref_in_out,
        metadata: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn pts(rows: &[&[f64]]) -> Points {
        Points::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_points(n: usize, d: usize, seed: u64, scale: f64) -> Points {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Points::new(n, d, (0..n * d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    #[test]
    fn line_radii() {
        let p = pts(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(kth_radii(&p, 1).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(kth_radii(&p, 2).unwrap(), vec![3.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicates_have_zero_radius() {
        let p = pts(&[&[0.5, 0.5], &[3.0, 1.0], &[0.5, 0.5], &[-2.0, 4.0]]);
        let r = kth_radii(&p, 1).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn too_few_points() {
        let p = pts(&[&[0.0], &[1.0]]);
        assert!(matches!(kth_radii(&p, 2), Err(Error::TooFewPoints { .. })));
        assert!(kth_radii(&p, 0).is_err());
    }

    #[test]
    fn self_membership_and_separation() {
        let p = random_points(60, 3, 1, 1.0);
        let s = SupportEstimate::new(p.clone(), 3).unwrap();
        assert_eq!(count_in_support(&p, &s).unwrap(), 60);

        let max_r = s.radii.iter().cloned().fold(0.0, f64::max);
        let far = p.map_rows(|r| r.iter().map(|v| v + 2.0 + 10.0 * max_r).collect()).unwrap();
        assert_eq!(count_in_support(&far, &s).unwrap(), 0);

        let wrong_dim = random_points(5, 2, 2, 1.0);
        assert!(matches!(count_in_support(&wrong_dim, &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn boundary_is_inclusive() {
        let s = SupportEstimate::new(pts(&[&[0.0], &[2.0]]), 1).unwrap();
        assert_eq!(s.radii, vec![2.0, 2.0]);
        assert!(s.contains(&[4.0]));
        assert!(!s.contains(&[4.000001]));
    }

    #[test]
    fn identical_and_disjoint_sets() {
        let p = random_points(100, 4, 3, 1.0);
        let same = precision_recall_points(&p, &p, 4).unwrap();
        assert_eq!((same.precision, same.recall), (1.0, 1.0));

        let far = p.map_rows(|r| r.iter().map(|v| v + 1000.0).collect()).unwrap();
        let apart = precision_recall_points(&p, &far, 4).unwrap();
        assert_eq!((apart.precision, apart.recall), (0.0, 0.0));
    }

    fn oracle_radii(p: &Points, k: usize) -> Vec<f64> {
        (0..p.n_rows())
            .map(|i| {
                let mut d: Vec<f64> = (0..p.n_rows())
                    .filter(|&j| j != i)
                    .map(|j| sq_euclidean(p.row(i), p.row(j)).sqrt())
                    .collect();
                d.sort_by(f64::total_cmp);
                d[k - 1]
            })
            .collect()
    }

    fn oracle_count(q: &Points, centers: &Points, radii: &[f64]) -> usize {
        let mut count = 0;
        for a in 0..q.n_rows() {
            let mut inside = false;
            for (c, &r) in centers.rows().zip(radii) {
                if sq_euclidean(q.row(a), c).sqrt() <= r {
                    inside = true;
                }
            }
            count += inside as usize;
        }
        count
    }

    #[test]
    fn radii_match_full_sort_oracle() {
        let p = random_points(500, 8, 4, 1.0);
        assert_eq!(kth_radii(&p, 4).unwrap(), oracle_radii(&p, 4));
    }

    #[test]
    fn counts_match_double_loop_oracle() {
        let support = random_points(300, 4, 5, 1.0);
        let queries = random_points(300, 4, 6, 1.2);
        let s = SupportEstimate::new(support.clone(), 3).unwrap();
        let radii = oracle_radii(&support, 3);
        assert_eq!(count_in_support(&queries, &s).unwrap(), oracle_count(&queries, &support, &radii));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_in_k_and_role_symmetric(seed in any::<u64>(), d in 1usize..6) {
            let a = random_points(40, d, seed, 1.0);
            let b = random_points(35, d, seed.wrapping_add(1), 1.3);
            let mut prev = (0.0, 0.0);
            for k in 1..=8 {
                let r = precision_recall_points(&a, &b, k).unwrap();
                prop_assert!(r.precision >= prev.0 && r.recall >= prev.1);
                prev = (r.precision, r.recall);
                let swapped = precision_recall_points(&b, &a, k).unwrap();
                prop_assert_eq!(r.precision, swapped.recall);
                prop_assert_eq!(r.recall, swapped.precision);
                prop_assert_eq!(r.precision, r.out_in_ref_support as f64 / 35.0);
            }
        }

        #[test]
        fn rigid_motion_keeps_counts(seed in any::<u64>(), angle in 0.0f64..std::f64::consts::TAU, shift in -5.0f64..5.0) {
            let a = random_points(50, 2, seed, 1.0);
            let b = random_points(50, 2, seed ^ 7, 1.0);
            let (s, c) = angle.sin_cos();
            let mv = |p: &Points| p.map_rows(|r| vec![c * r[0] - s * r[1] + shift, s * r[0] + c * r[1] - shift]).unwrap();
            let before = precision_recall_points(&a, &b, 3).unwrap();
            let after = precision_recall_points(&mv(&a), &mv(&b), 3).unwrap();
            prop_assert_eq!(before.out_in_ref_support, after.out_in_ref_support);
            prop_assert_eq!(before.ref_in_out_support, after.ref_in_out_support);
        }
    }
}
