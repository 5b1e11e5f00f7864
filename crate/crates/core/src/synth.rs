//! Seeded Gaussian-mixture embeddings for testing the pipeline.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! a `u64`, so draws are identical across platforms.

use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const SCENARIO_DIM: usize = 16;
/// Coordinate of each scenario cluster centre along its own axis, in units
/// of the per-axis scale. Centres end up `30·√2 ≈ 42` apart.
pub const SCENARIO_SPACING: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: Vec<f64>,
    /// Per-axis standard deviation.
    pub scale: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub dimension: usize,
    pub clusters: Vec<Cluster>,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if self.clusters.is_empty() {
            return Err(Error::InvalidSpec("at least one cluster is required".into()));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.center.len() != self.dimension || c.scale.len() != self.dimension {
                return Err(Error::InvalidSpec(format!("cluster {i} has the wrong dimension")));
            }
            if c.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(Error::InvalidSpec(format!("cluster {i} has a non-positive scale")));
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("cluster {i} has a non-finite center")));
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::InvalidSpec(format!("cluster {i} has a negative weight")));
            }
        }
        let total: f64 = self.clusters.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

fn draw(cluster: &Cluster, rng: &mut ChaCha20Rng, out: &mut Vec<f32>) {
    for (c, s) in cluster.center.iter().zip(&cluster.scale) {
        let z: f64 = StandardNormal.sample(rng);
        out.push((c + s * z) as f32);
    }
}

/// Draws `n` rows: a cluster index from the weights, then a Gaussian sample
/// around that cluster's centre.
pub fn sample_mixture(spec: &MixtureSpec, n: usize) -> Result<EmbeddingMatrix> {
    Ok(sample_mixture_labeled(spec, n)?.0)
}

/// Like [`sample_mixture`], also returning the cluster index of each row.
pub fn sample_mixture_labeled(spec: &MixtureSpec, n: usize) -> Result<(EmbeddingMatrix, Vec<usize>)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("sample count must be positive".into()));
    }
    let weights = WeightedIndex::new(spec.clusters.iter().map(|c| c.weight))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(n * spec.dimension);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = weights.sample(&mut rng);
        draw(&spec.clusters[c], &mut rng, &mut data);
        labels.push(c);
    }
    Ok((EmbeddingMatrix::new(n, spec.dimension, data)?, labels))
}

/// Synthetic analogue of the news-topic coverage experiment: the reference
/// covers topics {A, B}; outputs cover a subset, the same set, or a superset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Output drawn from A only.
    #[serde(rename = "Q1_subset")]
    Q1Subset,
    /// Output drawn from A and B equally.
    #[serde(rename = "Q2_matched")]
    Q2Matched,
    /// Output drawn from A, B, C and D equally.
    #[serde(rename = "Q3_superset")]
    Q3Superset,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Q1Subset, Scenario::Q2Matched, Scenario::Q3Superset];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Q1Subset => "Q1_subset",
            Scenario::Q2Matched => "Q2_matched",
            Scenario::Q3Superset => "Q3_superset",
        }
    }

    /// Number of clusters the output side covers.
    pub fn output_clusters(self) -> usize {
        match self {
            Scenario::Q1Subset => 1,
            Scenario::Q2Matched => 2,
            Scenario::Q3Superset => 4,
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario {s:?}")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Unit-scale cluster `i` centred at `SCENARIO_SPACING · e_i`.
pub fn scenario_cluster(i: usize, weight: f64) -> Cluster {
    let mut center = vec![0.0; SCENARIO_DIM];
    center[i] = SCENARIO_SPACING;
    Cluster {
        center,
        scale: vec![1.0; SCENARIO_DIM],
        weight,
    }
}

/// Mixture spec describing one side of a scenario.
pub fn scenario_spec(n_clusters: usize, seed: u64) -> MixtureSpec {
    MixtureSpec {
        dimension: SCENARIO_DIM,
        clusters: (0..n_clusters).map(|i| scenario_cluster(i, 1.0 / n_clusters as f64)).collect(),
        seed,
    }
}

/// Equal-count draw: row `j` comes from cluster `j mod n_clusters`.
fn balanced(n_clusters: usize, n: usize, rng: &mut ChaCha20Rng) -> Result<EmbeddingMatrix> {
    let clusters: Vec<Cluster> = (0..n_clusters).map(|i| scenario_cluster(i, 1.0)).collect();
    let mut data = Vec::with_capacity(n * SCENARIO_DIM);
    for j in 0..n {
        draw(&clusters[j % n_clusters], rng, &mut data);
    }
    EmbeddingMatrix::new(n, SCENARIO_DIM, data)
}

/// Reference and output sets of `n` rows each. Cluster counts within a set
/// are balanced exactly (they differ by at most one), which keeps the
/// expected recall/precision of 0.5 free of multinomial noise.
pub fn agnews_scenario(scenario: Scenario, n: usize, seed: u64) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
    if n < 100 {
        return Err(Error::InvalidParameter(format!("scenario needs n >= 100, got {n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let reference = balanced(2, n, &mut rng)?.with_label("ref");
    let output = balanced(scenario.output_clusters(), n, &mut rng)?.with_label(scenario.name());
    Ok((reference, output))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(weights: &[f64], scale: f64, seed: u64) -> MixtureSpec {
        MixtureSpec {
            dimension: 3,
            clusters: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Cluster {
                    center: vec![i as f64 * 10.0, 1.0, -1.0],
                    scale: vec![scale; 3],
                    weight: w,
                })
                .collect(),
            seed,
        }
    }

    #[test]
    fn tiny_scale_is_a_point_mass() {
        let m = sample_mixture(&spec(&[1.0], 1e-9, 1), 100).unwrap();
        for row in m.rows() {
            assert!((row[0] - 0.0).abs() < 1e-6 && (row[1] - 1.0).abs() < 1e-6 && (row[2] + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_weight_cluster_never_drawn() {
        let (_, labels) = sample_mixture_labeled(&spec(&[1.0, 0.0], 1.0, 2), 1000).unwrap();
        assert!(labels.iter().all(|&c| c == 0));
    }

    #[test]
    fn empirical_weights() {
        let (_, labels) = sample_mixture_labeled(&spec(&[0.5, 0.5], 1.0, 3), 100_000).unwrap();
        let share = labels.iter().filter(|&&c| c == 1).count() as f64 / 1e5;
        assert!((share - 0.5).abs() < 0.01);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = spec(&[0.3, 0.7], 1.0, 9);
        assert_eq!(sample_mixture(&s, 50).unwrap(), sample_mixture(&s, 50).unwrap());
        let other = MixtureSpec { seed: 10, ..s.clone() };
        assert_ne!(sample_mixture(&s, 50).unwrap(), sample_mixture(&other, 50).unwrap());
    }

    #[test]
    fn invalid_specs() {
        assert!(sample_mixture(&spec(&[0.5, 0.6], 1.0, 0), 5).is_err());
        assert!(sample_mixture(&spec(&[1.0], 0.0, 0), 5).is_err());
        assert!(sample_mixture(&spec(&[], 1.0, 0), 5).is_err());
        assert!(sample_mixture(&spec(&[1.0], 1.0, 0), 0).is_err());
    }

    #[test]
    fn scenario_shapes_and_parsing() {
        let (r, o) = agnews_scenario(Scenario::Q3Superset, 200, 1).unwrap();
        assert_eq!((r.n_rows(), r.n_cols(), o.n_rows()), (200, SCENARIO_DIM, 200));
        assert_eq!("q1_SUBSET".parse::<Scenario>().unwrap(), Scenario::Q1Subset);
        assert!("Q4".parse::<Scenario>().is_err());
        assert!(agnews_scenario(Scenario::Q1Subset, 99, 0).is_err());
        assert_eq!(agnews_scenario(Scenario::Q1Subset, 100, 5).unwrap(), agnews_scenario(Scenario::Q1Subset, 100, 5).unwrap());
    }
}
