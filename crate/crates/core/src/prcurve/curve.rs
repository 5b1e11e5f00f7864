use std::fmt::Write as _;

use serde::Serialize;

use super::HistogramPair;
use crate::error::{Error, Result};
use crate::fmt::f17;

/// The F-score weights reported by default: quality-leaning, balanced,
/// coverage-leaning.
pub const DEFAULT_GAMMAS: [f64; 3] = [1.0 / 8.0, 1.0, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PRCurve {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl PRCurve {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,alpha,beta\n");
        for ((l, a), b) in self.lambdas.iter().zip(&self.alphas).zip(&self.betas) {
            let _ = writeln!(out, "{},{},{}", f17(*l), f17(*a), f17(*b));
        }
        out
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// 1001 log-spaced points on `[1e-4, 1e4]` plus every per-bin ratio
/// `q̂/p̂` over bins where both masses are positive. Those ratios are the
/// kinks of both curve coordinates, so the extrema land on the grid.
pub fn default_lambda_grid(hist: &HistogramPair) -> Vec<f64> {
    let mut grid = log_grid(1e-4, 1e4, 1001);
    grid.extend(
        hist.p_hat
            .iter()
            .zip(&hist.q_hat)
            .filter(|(p, q)| **p > 0.0 && **q > 0.0)
            .map(|(p, q)| q / p),
    );
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn check_lambda_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidGrid("lambda values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("lambda grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Pareto-optimal trade-offs on discrete bins:
/// `α_λ = Σ min(q̂, λ·p̂)` and `β_λ = Σ min(p̂, q̂/λ)`.
pub fn pr_curve(hist: &HistogramPair, lambda_grid: &[f64]) -> Result<PRCurve> {
    check_lambda_grid(lambda_grid)?;
    let (alphas, betas) = lambda_grid
        .iter()
        .map(|&lambda| {
            let mut alpha = 0.0;
            let mut beta = 0.0;
            for (&p, &q) in hist.p_hat.iter().zip(&hist.q_hat) {
                alpha += q.min(lambda * p);
                beta += p.min(q / lambda);
            }
            (alpha.min(1.0), beta.min(1.0))
        })
        .unzip();
    Ok(PRCurve {
        lambdas: lambda_grid.to_vec(),
        alphas,
        betas,
    })
}

/// `(α_∞, β_0)`: output mass on bins the reference covers, and reference
/// mass on bins the output covers.
///
/// Each is divided by the total mass of its histogram so that full and empty
/// coverage come out as exactly 1 and 0 despite rounding in the bin sums.
pub fn curve_extrema(hist: &HistogramPair) -> (f64, f64) {
    let covered = |mass: &[f64], other: &[f64]| {
        let (mut inside, mut outside) = (0.0, 0.0);
        for (&m, &o) in mass.iter().zip(other) {
            if o > 0.0 {
                inside += m;
            } else {
                outside += m;
            }
        }
        inside / (inside + outside)
    };
    (covered(&hist.q_hat, &hist.p_hat), covered(&hist.p_hat, &hist.q_hat))
}

/// Best F_γ over the curve, `(1+γ²)·α·β / (γ²·α + β)`.
///
/// Panics if `gamma` is not a positive finite number.
pub fn f_gamma(curve: &PRCurve, gamma: f64) -> f64 {
    assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive");
    let g2 = gamma * gamma;
    curve
        .alphas
        .iter()
        .zip(&curve.betas)
        .map(|(&a, &b)| {
            let denom = g2 * a + b;
            if denom > 0.0 {
                (1.0 + g2) * a * b / denom
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(p: &[f64], q: &[f64]) -> HistogramPair {
        HistogramPair::new(p.to_vec(), q.to_vec()).unwrap()
    }

    #[test]
    fn identical_histograms() {
        let h = hist(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]);
        let grid = log_grid(1e-3, 1e3, 101);
        let c = pr_curve(&h, &grid).unwrap();
        for ((l, a), b) in c.lambdas.iter().zip(&c.alphas).zip(&c.betas) {
            assert!((a - l.min(1.0)).abs() < 1e-12);
            assert!((b - (1.0 / l).min(1.0)).abs() < 1e-12);
        }
        assert_eq!(curve_extrema(&h), (1.0, 1.0));
        for g in DEFAULT_GAMMAS {
            assert!((f_gamma(&c, g) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_histograms() {
        let h = hist(&[1.0, 0.0], &[0.0, 1.0]);
        let c = pr_curve(&h, &default_lambda_grid(&h)).unwrap();
        assert!(c.alphas.iter().chain(&c.betas).all(|&v| v == 0.0));
        assert_eq!(curve_extrema(&h), (0.0, 0.0));
        assert_eq!(f_gamma(&c, 1.0), 0.0);
    }

    #[test]
    fn partial_overlap_at_unit_lambda() {
        let h = hist(&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5]);
        let c = pr_curve(&h, &[1.0]).unwrap();
        assert_eq!((c.alphas[0], c.betas[0]), (0.5, 0.5));
        assert_eq!(curve_extrema(&h), (0.5, 0.5));
    }

    #[test]
    fn full_grid_matches_per_bin_sum() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.5, 0.0, 0.5];
        let grid = log_grid(1e-3, 1e3, 1001);
        let c = pr_curve(&hist(&p, &q), &grid).unwrap();
        for (i, &l) in grid.iter().enumerate() {
            // only bin 0 is shared: α = min(0.5, 0.5λ), β = min(0.5, 0.5/λ)
            let a: f64 = (0..3).map(|x| if q[x] == 0.0 { 0.0 } else { q[x].min(l * p[x]) }).sum();
            let b: f64 = (0..3).map(|x| if p[x] == 0.0 { 0.0 } else { p[x].min(q[x] / l) }).sum();
            assert!((c.alphas[i] - a).abs() < 1e-15);
            assert!((c.betas[i] - b).abs() < 1e-15);
        }
    }

    #[test]
    fn f_scores_match_dense_maximization() {
        let h = hist(&[0.5, 0.5, 0.0], &[0.5, 0.0, 0.5]);
        let c = pr_curve(&h, &log_grid(1e-3, 1e3, 1001)).unwrap();
        for g in DEFAULT_GAMMAS {
            // brute-force maximization over a much denser λ sweep
            let mut best = 0.0f64;
            for i in 0..=200_000 {
                let l = 10f64.powf(-3.0 + 6.0 * i as f64 / 200_000.0);
                let a = 0.5f64.min(0.5 * l);
                let b = 0.5f64.min(0.5 / l);
                best = best.max((1.0 + g * g) * a * b / (g * g * a + b));
            }
            assert!((f_gamma(&c, g) - best).abs() < 1e-6, "gamma {g}");
        }
    }

    #[test]
    fn grid_validation() {
        let h = hist(&[0.5, 0.5], &[0.5, 0.5]);
        assert!(matches!(pr_curve(&h, &[]), Err(Error::InvalidGrid(_))));
        assert!(matches!(pr_curve(&h, &[0.0, 1.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(pr_curve(&h, &[2.0, 1.0]), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn csv_export() {
        let h = hist(&[0.5, 0.5], &[0.5, 0.5]);
        let csv = pr_curve(&h, &[1.0]).unwrap().to_csv();
        assert_eq!(csv, "lambda,alpha,beta\n1.0000000000000000,1.0000000000000000,1.0000000000000000\n");
    }

    fn random_hist(bins: usize) -> impl Strategy<Value = HistogramPair> {
        let masses = proptest::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], bins);
        (masses.clone(), masses)
            .prop_filter("non-empty", |(p, q)| p.iter().any(|v| *v > 0.0) && q.iter().any(|v| *v > 0.0))
            .prop_map(|(p, q)| {
                let norm = |h: Vec<f64>| {
                    let s: f64 = h.iter().sum();
                    h.into_iter().map(|v| v / s).collect()
                };
                HistogramPair::new(norm(p), norm(q)).unwrap()
            })
    }

    proptest! {
        #[test]
        fn pareto_structure_and_extrema(h in (2usize..12).prop_flat_map(random_hist)) {
            let c = pr_curve(&h, &default_lambda_grid(&h)).unwrap();
            prop_assert!(c.alphas.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(c.betas.windows(2).all(|w| w[0] >= w[1]));
            let (ai, b0) = curve_extrema(&h);
            let max_a = c.alphas.iter().cloned().fold(0.0, f64::max);
            let max_b = c.betas.iter().cloned().fold(0.0, f64::max);
            prop_assert!(max_a <= ai + 1e-12 && (max_a - ai).abs() < 1e-12);
            prop_assert!(max_b <= b0 + 1e-12 && (max_b - b0).abs() < 1e-12);
        }

        #[test]
        fn swap_duality(h in (2usize..10).prop_flat_map(random_hist)) {
            let grid = log_grid(1e-2, 1e2, 41);
            let inverse: Vec<f64> = grid.iter().rev().map(|l| 1.0 / l).collect();
            let c = pr_curve(&h, &grid).unwrap();
            let s = pr_curve(&h.swapped(), &inverse).unwrap();
            for i in 0..grid.len() {
                let j = grid.len() - 1 - i;
                prop_assert!((c.alphas[i] - s.betas[j]).abs() < 1e-12);
                prop_assert!((c.betas[i] - s.alphas[j]).abs() < 1e-12);
            }
        }
    }
}
