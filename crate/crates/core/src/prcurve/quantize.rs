use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{sq_euclidean, Points};
use crate::preprocess::ReducedSet;

pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Aligned discrete densities of the reference (`p_hat`) and output
/// (`q_hat`) sets over shared bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub bins: usize,
    pub p_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    /// Cluster centres; absent for histograms built directly from masses.
    pub centroids: Option<Points>,
    pub kmeans_seed: u64,
    pub iterations: usize,
}

impl HistogramPair {
    /// Builds a pair from explicit bin masses.
    pub fn new(p_hat: Vec<f64>, q_hat: Vec<f64>) -> Result<Self> {
        if p_hat.len() != q_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: p_hat.len(),
                actual: q_hat.len(),
            });
        }
        if p_hat.len() < 2 {
            return Err(Error::InvalidParameter("a histogram needs at least 2 bins".into()));
        }
        for (name, h) in [("p_hat", &p_hat), ("q_hat", &q_hat)] {
            if h.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(format!("{name} has a negative or non-finite mass")));
            }
            let total: f64 = h.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("{name} sums to {total}, not 1")));
            }
        }
        Ok(Self {
            bins: p_hat.len(),
            p_hat,
            q_hat,
            centroids: None,
            kmeans_seed: 0,
            iterations: 0,
        })
    }

    /// Additive smoothing: `eps` is added to every bin before renormalising.
    pub fn smoothed(&self, eps: f64) -> Self {
        let smooth = |h: &[f64]| {
            let total: f64 = h.iter().map(|v| v + eps).sum();
            h.iter().map(|v| (v + eps) / total).collect()
        };
        Self {
            p_hat: smooth(&self.p_hat),
            q_hat: smooth(&self.q_hat),
            ..self.clone()
        }
    }

    /// Same bins with the roles of the two distributions exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p_hat: self.q_hat.clone(),
            q_hat: self.p_hat.clone(),
            ..self.clone()
        }
    }
}

/// `min(⌊n/20⌋, 500)`, floored at 2.
pub fn default_bins(n_ref: usize, n_out: usize) -> usize {
    ((n_ref + n_out) / 20).clamp(2, 500)
}

/// Clusters the union of both sets with k-means and returns per-set
/// normalized assignment counts.
///
/// k-means++ seeding from `seed`, then Lloyd iterations until the
/// assignment stops changing or [`MAX_LLOYD_ITERATIONS`] is reached.
/// Assignment ties go to the lowest cluster index and centroids are summed
/// in point order, so the result does not depend on thread count.
pub fn quantize(reference: &ReducedSet, output: &ReducedSet, n_bins: usize, seed: u64) -> Result<HistogramPair> {
    let (rp, op) = (&reference.points, &output.points);
    if rp.n_cols() != op.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: rp.n_cols(),
            actual: op.n_cols(),
        });
    }
    if n_bins < 2 {
        return Err(Error::InvalidParameter("n_bins must be at least 2".into()));
    }
    let n_ref = rp.n_rows();
    let n_out = op.n_rows();
    if n_ref == 0 || n_out == 0 || n_ref + n_out < n_bins {
        return Err(Error::TooFewPoints {
            needed: n_bins - 1,
            actual: n_ref + n_out,
        });
    }
    let mut data = Vec::with_capacity(rp.data().len() + op.data().len());
    data.extend_from_slice(rp.data());
    data.extend_from_slice(op.data());
    let union = Points::new(n_ref + n_out, rp.n_cols(), data)?;

    let fit = kmeans(&union, n_bins, seed)?;
    let mut p_hat = vec![0.0; n_bins];
    let mut q_hat = vec![0.0; n_bins];
    for (i, &c) in fit.assignment.iter().enumerate() {
        if i < n_ref {
            p_hat[c] += 1.0;
        } else {
            q_hat[c] += 1.0;
        }
    }
    p_hat.iter_mut().for_each(|v| *v /= n_ref as f64);
    q_hat.iter_mut().for_each(|v| *v /= n_out as f64);
    Ok(HistogramPair {
        bins: n_bins,
        p_hat,
        q_hat,
        centroids: Some(fit.centroids),
        kmeans_seed: seed,
        iterations: fit.iterations,
    })
}

struct KMeansFit {
    centroids: Points,
    assignment: Vec<usize>,
    iterations: usize,
}

fn kmeans(points: &Points, k: usize, seed: u64) -> Result<KMeansFit> {
    let d = points.n_cols();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut failed_reseeds = 0;
    let mut iterations = 0;

    for iter in 0..MAX_LLOYD_ITERATIONS {
        iterations = iter + 1;
        let (next, dist) = assign(points, &centroids, k);
        let changed = next != assignment;
        assignment = next;

        let mut counts = vec![0usize; k];
        assignment.iter().for_each(|&c| counts[c] += 1);
        let mut reseeded = false;
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            // farthest point from its own centroid, taken from a cluster that can spare it
            let donor = (0..points.n_rows())
                .filter(|&i| counts[assignment[i]] > 1 && dist[i] > 0.0)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                });
            match donor {
                Some(i) => {
                    counts[assignment[i]] -= 1;
                    counts[empty] = 1;
                    assignment[i] = empty;
                    centroids[empty * d..(empty + 1) * d].copy_from_slice(points.row(i));
                    reseeded = true;
                }
                None => {
                    failed_reseeds += 1;
                    if failed_reseeds >= k {
                        return Err(Error::EmptyClusterUnrecoverable);
                    }
                }
            }
        }

        if iter > 0 && !changed && !reseeded {
            break;
        }
        update_centroids(points, &assignment, &counts, &mut centroids);
    }

    Ok(KMeansFit {
        centroids: Points::new(k, d, centroids)?,
        assignment,
        iterations,
    })
}

fn plus_plus_init(points: &Points, k: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let n = points.n_rows();
    let d = points.n_cols();
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(points.row(first));
    let mut nearest: Vec<f64> = points
        .data()
        .par_chunks_exact(d)
        .map(|p| sq_euclidean(p, points.row(first)))
        .collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the running sum
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick);
        centroids.extend_from_slice(c);
        nearest
            .par_iter_mut()
            .zip(points.data().par_chunks_exact(d))
            .for_each(|(best, p)| *best = best.min(sq_euclidean(p, c)));
    }
    centroids
}

/// Nearest centroid per point (lowest index on ties) and its squared distance.
fn assign(points: &Points, centroids: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let d = points.n_cols();
    points
        .data()
        .par_chunks_exact(d)
        .map(|p| {
            let mut best = (0, sq_euclidean(p, &centroids[..d]));
            for c in 1..k {
                let dist = sq_euclidean(p, &centroids[c * d..(c + 1) * d]);
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            best
        })
        .unzip()
}

fn update_centroids(points: &Points, assignment: &[usize], counts: &[usize], centroids: &mut [f64]) {
    let d = points.n_cols();
    let mut sums = vec![0.0f64; centroids.len()];
    for (p, &c) in points.rows().zip(assignment) {
        for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            for j in c * d..(c + 1) * d {
                centroids[j] = sums[j] / count as f64;
            }
        }
    }
}
