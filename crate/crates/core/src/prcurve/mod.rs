//! Histogram-based curve estimators: k-means quantization of the two point
//! sets, the Pareto-optimal PR-curve with its F-scores and extrema, and the
//! KL divergence frontier whose area is the MAUVE score.

mod curve;
mod frontier;
mod quantize;

pub use curve::{
    curve_extrema, default_lambda_grid, f_gamma, log_grid, pr_curve, PRCurve, DEFAULT_GAMMAS,
};
pub use frontier::{
    default_pi_grid, divergence_frontier, mauve_score, uniform_grid, FrontierCurve, MauveScore,
    DEFAULT_SCALING_C, SMOOTHING_EPS,
};
pub use quantize::{default_bins, quantize, HistogramPair, MAX_LLOYD_ITERATIONS};
