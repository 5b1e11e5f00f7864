use std::fmt::Write as _;

use serde::Serialize;

use super::HistogramPair;
use crate::error::{Error, Result};
use crate::fmt::f17;

/// Scaling of the KL terms. 1 leaves the divergences unscaled; the widely
/// used reference MAUVE implementation uses 5.
pub const DEFAULT_SCALING_C: f64 = 1.0;

/// Additive mass for the optional smoothing of both histograms.
pub const SMOOTHING_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierCurve {
    pub pis: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub scaling_c: f64,
    pub auc: f64,
}

impl FrontierCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pi,alpha,beta\n");
        for ((p, a), b) in self.pis.iter().zip(&self.alphas).zip(&self.betas) {
            let _ = writeln!(out, "{},{},{}", f17(*p), f17(*a), f17(*b));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MauveScore {
    pub value: f64,
    /// Every frontier point had the same α, so `value` is the mean β rather
    /// than an area.
    pub degenerate: bool,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// 501 points on `[1e-3, 1 - 1e-3]`.
pub fn default_pi_grid() -> Vec<f64> {
    uniform_grid(1e-3, 1.0 - 1e-3, 501)
}

fn kl_to_mixture(num: &[f64], mix: &[f64]) -> f64 {
    num.iter()
        .zip(mix)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, m)| a * (a / m).ln())
        .sum::<f64>()
        .max(0.0)
}

/// For each π: `α_π = exp(-c·KL(q̂ ‖ π·p̂ + (1-π)·q̂))` and
/// `β_π = exp(-c·KL(p̂ ‖ π·p̂ + (1-π)·q̂))`.
pub fn divergence_frontier(hist: &HistogramPair, pi_grid: &[f64], scaling_c: f64) -> Result<FrontierCurve> {
    if pi_grid.is_empty() {
        return Err(Error::InvalidGrid("pi grid is empty".into()));
    }
    if pi_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::InvalidGrid("pi values must lie strictly inside (0, 1)".into()));
    }
    if pi_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("pi grid must be strictly ascending".into()));
    }
    if !(scaling_c.is_finite() && scaling_c > 0.0) {
        return Err(Error::InvalidParameter(format!("scaling c = {scaling_c} must be positive")));
    }
    let mut alphas = Vec::with_capacity(pi_grid.len());
    let mut betas = Vec::with_capacity(pi_grid.len());
    let mut mix = vec![0.0; hist.bins];
    for &pi in pi_grid {
        for (m, (p, q)) in mix.iter_mut().zip(hist.p_hat.iter().zip(&hist.q_hat)) {
            *m = q + pi * (p - q);
        }
        alphas.push((-scaling_c * kl_to_mixture(&hist.q_hat, &mix)).exp());
        betas.push((-scaling_c * kl_to_mixture(&hist.p_hat, &mix)).exp());
    }
    let (auc, _) = area(&alphas, &betas);
    Ok(FrontierCurve {
        pis: pi_grid.to_vec(),
        alphas,
        betas,
        scaling_c,
        auc,
    })
}

/// Area under the frontier.
pub fn mauve_score(frontier: &FrontierCurve) -> Result<MauveScore> {
    if frontier.alphas.len() < 2 {
        return Err(Error::InvalidGrid("a frontier needs at least 2 points".into()));
    }
    let (value, degenerate) = area(&frontier.alphas, &frontier.betas);
    Ok(MauveScore { value, degenerate })
}

/// Trapezoidal area of β over α, with the curve closed by the corner points
/// (1, 0) (π → 0) and (0, 1) (π → 1).
fn area(alphas: &[f64], betas: &[f64]) -> (f64, bool) {
    if alphas.iter().all(|a| *a == alphas[0]) {
        let mean_beta = betas.iter().sum::<f64>() / betas.len() as f64;
        return (mean_beta.clamp(0.0, 1.0), true);
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(alphas.len() + 2);
    pts.push((1.0, 0.0));
    pts.extend(alphas.iter().copied().zip(betas.iter().copied()));
    pts.push((0.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let auc: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    (auc.clamp(0.0, 1.0), false)
}
