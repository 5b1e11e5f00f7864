//! PCA on the union of the reference and output embeddings.
//!
//! Exact sample-covariance eigendecomposition (denominator `n - 1`), keeping
//! the fewest leading components whose cumulative explained-variance ratio
//! reaches the target. Eigenvector signs are fixed so that each component's
//! largest-magnitude entry is positive.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataio::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::points::{dot, Points};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One principal axis per entry, each of length `d`.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub variance_target: f64,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn explained_ratio(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    /// Short hex digest of the fitted parameters.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in self
            .mean
            .iter()
            .chain(self.components.iter().flatten())
            .chain(&self.explained_variance)
        {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSet {
    pub points: Points,
    pub source_label: String,
    pub model_fingerprint: String,
}

impl ReducedSet {
    /// Wraps already-projected points, e.g. for callers that skip PCA.
    pub fn from_points(points: Points, source_label: impl Into<String>) -> Self {
        Self {
            points,
            source_label: source_label.into(),
            model_fingerprint: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.n_rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.n_cols()
    }
}

pub fn fit_pca(reference: &EmbeddingMatrix, output: &EmbeddingMatrix, variance_target: f64) -> Result<PcaModel> {
    if reference.n_cols() != output.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: reference.n_cols(),
            actual: output.n_cols(),
        });
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance target {variance_target} outside (0, 1]"
        )));
    }
    let n = reference.n_rows() + output.n_rows();
    let d = reference.n_cols();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 1, actual: n });
    }
    let rows = || reference.rows().chain(output.rows());

    let first = reference.row(0);
    if rows().all(|r| r == first) {
        return Err(Error::DegenerateData("all rows are identical".into()));
    }

    let mut mean = vec![0.0f64; d];
    for row in rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_row_iterator(
        n,
        d,
        rows().flat_map(|r| r.iter().zip(&mean).map(|(&v, m)| v as f64 - m)),
    );
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    let trace = cov.trace();
    if trace <= 0.0 {
        return Err(Error::DegenerateData("total variance is zero".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = sorted.iter().sum();

    let mut cumulative = 0.0;
    let mut keep = d;
    for (i, v) in sorted.iter().enumerate() {
        cumulative += v;
        if cumulative / total >= variance_target {
            keep = i + 1;
            break;
        }
    }

    let components = order[..keep]
        .iter()
        .map(|&i| {
            let mut axis: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let pivot = axis
                .iter()
                .enumerate()
                .fold(0, |best, (j, v)| if v.abs() > axis[best].abs() { j } else { best });
            if axis[pivot] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            axis
        })
        .collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance: sorted[..keep].to_vec(),
        variance_target,
        total_variance: total,
    })
}

pub fn apply_pca(model: &PcaModel, matrix: &EmbeddingMatrix) -> Result<ReducedSet> {
    if matrix.n_cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: matrix.n_cols(),
        });
    }
    let r = model.n_components();
    let mut data = vec![0.0f64; matrix.n_rows() * r];
    data.par_chunks_mut(r).enumerate().for_each(|(i, out)| {
        let centered: Vec<f64> = matrix.row(i).iter().zip(&model.mean).map(|(&v, m)| v as f64 - m).collect();
        for (o, axis) in out.iter_mut().zip(&model.components) {
            *o = dot(axis, &centered);
        }
    });
    Ok(ReducedSet {
        points: Points::new(matrix.n_rows(), r, data)?,
        source_label: matrix.label().unwrap_or_default().to_string(),
        model_fingerprint: model.fingerprint(),
    })
}

/// Fits on the union and projects both sets.
pub fn reduce_pair(
    reference: &EmbeddingMatrix,
    output: &EmbeddingMatrix,
    variance_target: f64,
) -> Result<(PcaModel, ReducedSet, ReducedSet)> {
    let model = fit_pca(reference, output, variance_target)?;
    let r = apply_pca(&model, reference)?;
    let o = apply_pca(&model, output)?;
    Ok((model, r, o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-3.0f32..3.0)).collect();
        EmbeddingMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn rank_one_line() {
        let dir = [1.0f32, -2.0, 0.5, 3.0, 1.0];
        let line = |ts: &[f32]| {
            let rows: Vec<Vec<f32>> = ts.iter().map(|t| dir.iter().map(|d| 1.0 + t * d).collect()).collect();
            EmbeddingMatrix::from_rows(&rows).unwrap()
        };
        let m = fit_pca(&line(&[0.0, 1.0, -2.0, 4.0]), &line(&[2.5, -1.0, 3.0]), 0.9).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!((m.explained_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let m = EmbeddingMatrix::from_rows(&vec![vec![0.1, 0.2, 0.3]; 5]).unwrap();
        assert!(matches!(fit_pca(&m, &m, 0.9), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let a = random_matrix(4, 3, 1);
        let b = random_matrix(4, 2, 2);
        assert!(matches!(fit_pca(&a, &b, 0.9), Err(Error::DimensionMismatch { .. })));
        let m = fit_pca(&a, &a, 0.9).unwrap();
        assert!(matches!(apply_pca(&m, &b), Err(Error::DimensionMismatch { .. })));
    }

    /// 2x2 symmetric eigenvalues in closed form, used as the oracle below.
    fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
        let mid = (a + c) / 2.0;
        let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
        (mid + rad, mid - rad)
    }

    #[test]
    fn anisotropic_gaussian_component_count() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let wide = Normal::new(0.0, 3.0).unwrap();
        let narrow = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f32>> = (0..200)
            .map(|_| vec![wide.sample(&mut rng) as f32, narrow.sample(&mut rng) as f32])
            .collect();
        let (a_rows, b_rows) = rows.split_at(100);
        let a = EmbeddingMatrix::from_rows(a_rows).unwrap();
        let b = EmbeddingMatrix::from_rows(b_rows).unwrap();

        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r[0] as f64).sum::<f64>() / n;
        let my = rows.iter().map(|r| r[1] as f64).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for r in &rows {
            let (x, y) = (r[0] as f64 - mx, r[1] as f64 - my);
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        let (l1, l2) = eig2(sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0));
        let expected_r = if l1 / (l1 + l2) >= 0.9 { 1 } else { 2 };

        let m = fit_pca(&a, &b, 0.9).unwrap();
        assert_eq!(m.n_components(), expected_r);
        assert!((m.explained_variance[0] - l1).abs() < 1e-9 * l1);
    }

    #[test]
    fn projection_of_mean_is_zero_and_identity_model_is_identity() {
        let a = random_matrix(30, 4, 3);
        let b = random_matrix(30, 4, 4);
        let model = fit_pca(&a, &b, 0.9).unwrap();
        let mean_row: Vec<f32> = model.mean.iter().map(|&v| v as f32).collect();
        // f32 rounding of the mean leaves a residual below 1e-6
        let z = apply_pca(&model, &EmbeddingMatrix::new(1, 4, mean_row).unwrap()).unwrap();
        assert!(z.points.data().iter().all(|v| v.abs() < 1e-6));

        let identity = PcaModel {
            mean: vec![0.0; 4],
            components: (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            explained_variance: vec![1.0; 4],
            variance_target: 1.0,
            total_variance: 4.0,
        };
        let out = apply_pca(&identity, &a).unwrap();
        let expect: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
        assert_eq!(out.points.data(), expect.as_slice());
    }

    #[test]
    fn projection_matches_matrix_product() {
        let a = random_matrix(40, 3, 5);
        let b = random_matrix(25, 3, 6);
        let model = fit_pca(&a, &b, 1.0).unwrap();
        let z = apply_pca(&model, &b).unwrap();
        for (i, row) in b.rows().enumerate() {
            for (j, axis) in model.components.iter().enumerate() {
                let mut s = 0.0;
                for k in 0..3 {
                    s += axis[k] * (row[k] as f64 - model.mean[k]);
                }
                assert!((z.points.row(i)[j] - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_fit() {
        let a = random_matrix(50, 6, 7);
        let b = random_matrix(50, 6, 8);
        let m1 = fit_pca(&a, &b, 0.9).unwrap();
        let m2 = fit_pca(&a, &b, 0.9).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.fingerprint(), m2.fingerprint());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn model_invariants(seed in any::<u64>(), d in 2usize..9, target in 0.3f64..1.0) {
            let a = random_matrix(25, d, seed);
            let b = random_matrix(20, d, seed ^ 0x9e37);
            let m = fit_pca(&a, &b, target).unwrap();
            let r = m.n_components();

            for i in 0..r {
                for j in 0..r {
                    let ip: f64 = m.components[i].iter().zip(&m.components[j]).map(|(x, y)| x * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((ip - want).abs() < 1e-8);
                }
                let c = &m.components[i];
                let pivot = c.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
                prop_assert!(pivot > 0.0);
            }
            prop_assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(m.explained_ratio() >= target);
            let without_last: f64 = m.explained_variance[..r - 1].iter().sum();
            prop_assert!(without_last / m.total_variance < target);

            // projected union variance per component equals explained variance
            let za = apply_pca(&m, &a).unwrap();
            let zb = apply_pca(&m, &b).unwrap();
            let n = (a.n_rows() + b.n_rows()) as f64;
            for j in 0..r {
                let vals: Vec<f64> = za.points.rows().chain(zb.points.rows()).map(|row| row[j]).collect();
                let mu = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
                prop_assert!((var - m.explained_variance[j]).abs() <= 1e-6 * m.explained_variance[j].max(1e-12));
            }
        }
    }
}
