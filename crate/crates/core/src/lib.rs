//! Distribution-based evaluation of generative text models.
//!
//! Two embedding sets, a reference and a model output, are compared as
//! empirical distributions:
//!
//! - [`support`]: Precision (output mass inside the reference support) and
//!   Recall (reference mass inside the output support), with supports
//!   estimated as unions of k-nearest-neighbour balls after a joint PCA
//!   ([`preprocess`]).
//! - [`prcurve`]: k-means histograms, the Pareto PR-curve with F-scores, and
//!   the KL divergence frontier with its area (MAUVE).
//! - [`lexical`]: Distinct-N and Self-BLEU baselines.
//! - [`stats`]: sample-size/k sweeps, seed variance, Pearson correlation.
//! - [`synth`]: seeded Gaussian-mixture embeddings for controlled scenarios.
//!
//! [`cli::run`] wires everything into the `prdist` binary.

pub mod cli;
pub mod dataio;
pub mod error;
pub mod fmt;
pub mod lexical;
pub mod pipeline;
pub mod plot;
pub mod points;
pub mod prcurve;
pub mod preprocess;
pub mod stats;
pub mod support;
pub mod synth;

pub use dataio::{read_embeddings, read_text_corpus, write_embeddings, EmbeddingMatrix, TextCorpus};
pub use error::{Error, Result};
pub use pipeline::{evaluate, Evaluation};
pub use points::Points;
pub use preprocess::{apply_pca, fit_pca, PcaModel, ReducedSet};
pub use support::{count_in_support, kth_radii, precision_recall, PRResult, SupportEstimate};
