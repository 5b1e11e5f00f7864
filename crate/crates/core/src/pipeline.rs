//! Embeddings in, Precision/Recall out: PCA on the union, then k-NN supports.

use crate::dataio::EmbeddingMatrix;
use crate::error::Result;
use crate::preprocess::{reduce_pair, PcaModel, ReducedSet};
use crate::support::{precision_recall, PRResult};

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub result: PRResult,
    pub model: PcaModel,
    pub reference: ReducedSet,
    pub output: ReducedSet,
}

pub fn evaluate(reference: &EmbeddingMatrix, output: &EmbeddingMatrix, k: usize, variance_target: f64) -> Result<Evaluation> {
    let (model, r, o) = reduce_pair(reference, output, variance_target)?;
    let mut result = precision_recall(&r, &o, k)?;
    result.metadata.insert("n_components".into(), model.n_components().to_string());
    result.metadata.insert("pca_fingerprint".into(), model.fingerprint());
    for (key, m) in [("ref_label", reference), ("out_label", output)] {
        if let Some(l) = m.label() {
            result.metadata.insert(key.into(), l.to_string());
        }
    }
    Ok(Evaluation {
        result,
        model,
        reference: r,
        output: o,
    })
}
