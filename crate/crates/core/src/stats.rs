//! Parameter sweeps over sample count and k, the seed-variance protocol,
//! and Pearson correlation between metric series.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::fmt::f17;
use crate::preprocess::{reduce_pair, DEFAULT_VARIANCE_TARGET};
use crate::support::precision_recall;

pub const DEFAULT_N_VALUES: [usize; 8] = [100, 250, 500, 1000, 2000, 3000, 4000, 10_000];

pub fn default_k_values() -> Vec<usize> {
    (1..=30).collect()
}

/// Which sample is redrawn from seed to seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Reference sample fixed, output sample redrawn.
    VaryOutput,
    /// Output sample fixed, reference sample redrawn.
    VaryReference,
    VaryBoth,
}

impl SeedMode {
    pub const ALL: [SeedMode; 3] = [SeedMode::VaryOutput, SeedMode::VaryReference, SeedMode::VaryBoth];

    pub fn name(self) -> &'static str {
        match self {
            SeedMode::VaryOutput => "vary_output",
            SeedMode::VaryReference => "vary_reference",
            SeedMode::VaryBoth => "vary_both",
        }
    }

    /// (reference seed, output seed) for a run seed.
    fn sample_seeds(self, seed: u64, anchor: u64) -> (u64, u64) {
        match self {
            SeedMode::VaryOutput => (anchor, seed),
            SeedMode::VaryReference => (seed, anchor),
            SeedMode::VaryBoth => (seed, seed),
        }
    }
}

impl FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeedMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown seed mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: SeedMode,
    pub variance_target: f64,
    /// Seed of whichever sample the mode holds fixed.
    pub anchor_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_N_VALUES.to_vec(),
            k_values: default_k_values(),
            seeds: (0..5).collect(),
            mode: SeedMode::VaryOutput,
            variance_target: DEFAULT_VARIANCE_TARGET,
            anchor_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub mode: SeedMode,
    pub ref_seed: u64,
    pub out_seed: u64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub fixed_params: BTreeMap<String, String>,
}

impl SweepTable {
    /// Rows for one (n, k) cell.
    pub fn cell(&self, n: usize, k: usize) -> SweepTable {
        SweepTable {
            rows: self.rows.iter().filter(|r| r.n == n && r.k == k).cloned().collect(),
            fixed_params: self.fixed_params.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,seed,precision,recall\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.n, r.k, r.seed, f17(r.precision), f17(r.recall));
        }
        out
    }
}

/// `n` rows drawn without replacement, kept in pool order. Drawing the whole
/// pool returns it unchanged.
pub fn subsample(pool: &EmbeddingMatrix, n: usize, seed: u64, stream: u64) -> Result<EmbeddingMatrix> {
    if n > pool.n_rows() {
        return Err(Error::PoolTooSmall {
            requested: n,
            available: pool.n_rows(),
        });
    }
    if n == pool.n_rows() {
        return Ok(pool.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut idx = index::sample(&mut rng, pool.n_rows(), n).into_vec();
    idx.sort_unstable();
    pool.select_rows(&idx)
}

const REF_STREAM: u64 = 1;
const OUT_STREAM: u64 = 2;

/// Runs the full pipeline for every (n, k, seed), refitting PCA on each
/// sampled pair. Rows come back ordered by (n, k, seed).
pub fn sweep(reference_pool: &EmbeddingMatrix, output_pool: &EmbeddingMatrix, config: &SweepConfig) -> Result<SweepTable> {
    if config.n_values.is_empty() || config.k_values.is_empty() || config.seeds.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one n, k and seed".into()));
    }
    let max_n = *config.n_values.iter().max().unwrap();
    for pool in [reference_pool, output_pool] {
        if pool.n_rows() < max_n {
            return Err(Error::PoolTooSmall {
                requested: max_n,
                available: pool.n_rows(),
            });
        }
    }
    let jobs: Vec<(usize, u64)> = config
        .n_values
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(n, seed)| {
            let (ref_seed, out_seed) = config.mode.sample_seeds(seed, config.anchor_seed);
            let r = subsample(reference_pool, n, ref_seed, REF_STREAM)?;
            let o = subsample(output_pool, n, out_seed, OUT_STREAM)?;
            let (_, rr, ro) = reduce_pair(&r, &o, config.variance_target)?;
            config
                .k_values
                .iter()
                .map(|&k| {
                    let pr = precision_recall(&rr, &ro, k)?;
                    Ok(SweepRow {
                        n,
                        k,
                        seed,
                        mode: config.mode,
                        ref_seed,
                        out_seed,
                        precision: pr.precision,
                        recall: pr.recall,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.k, r.seed));
    let mut unique = rows.iter().map(|r| (r.n, r.k, r.seed)).collect::<Vec<_>>();
    unique.dedup();
    if unique.len() != rows.len() {
        return Err(Error::InvalidParameter("duplicate (n, k, seed) in sweep grid".into()));
    }

    let mut fixed = BTreeMap::new();
    fixed.insert("mode".into(), config.mode.name().into());
    fixed.insert("variance_target".into(), f17(config.variance_target));
    fixed.insert("anchor_seed".into(), config.anchor_seed.to_string());
    fixed.insert("ref_pool_rows".into(), reference_pool.n_rows().to_string());
    fixed.insert("out_pool_rows".into(), output_pool.n_rows().to_string());
    Ok(SweepTable { rows, fixed_params: fixed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub mode: SeedMode,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
    pub n_seeds: usize,
}

/// Sample mean and standard deviation (denominator n-1).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed statistics over the rows produced under `mode`. All those rows must
/// belong to a single (n, k) cell; see [`SweepTable::cell`].
pub fn seed_variance(table: &SweepTable, mode: SeedMode) -> Result<VarianceReport> {
    let rows: Vec<&SweepRow> = table.rows.iter().filter(|r| r.mode == mode).collect();
    if rows.len() < 2 {
        return Err(Error::TooFewSeeds(rows.len()));
    }
    if rows.iter().any(|r| (r.n, r.k) != (rows[0].n, rows[0].k)) {
        return Err(Error::MixedCells);
    }
    let p: Vec<f64> = rows.iter().map(|r| r.precision).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.recall).collect();
    let (mean_precision, std_precision) = mean_std(&p);
    let (mean_recall, std_recall) = mean_std(&r);
    Ok(VarianceReport {
        mode,
        mean_precision,
        std_precision,
        mean_recall,
        std_recall,
        n_seeds: rows.len(),
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("correlation needs at least 2 points".into()));
    }
    if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
        return Err(Error::ConstantSeries);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
