//! Word-level diversity baselines: Distinct-N and Self-BLEU.
//!
//! Tokens are whitespace-split and lowercased.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::TextCorpus;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_N: usize = 4;
/// Self-BLEU evaluates every document up to this corpus size and a seeded
/// subsample of this many beyond it.
pub const DEFAULT_SELF_BLEU_SAMPLE: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedCorpus {
    pub docs: Vec<Vec<String>>,
    pub source: String,
}

impl TokenizedCorpus {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>, source: impl Into<String>) -> Self {
        Self {
            docs: texts.into_iter().map(tokenize).collect(),
            source: source.into(),
        }
    }

    pub fn from_corpus(corpus: &TextCorpus) -> Self {
        Self::from_texts(corpus.texts(), corpus.source_path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexicalScores {
    pub distinct_n: BTreeMap<usize, f64>,
    pub self_bleu: f64,
    pub n_docs: usize,
    pub sampled: Option<usize>,
    /// n values for which the corpus produced no n-gram at all.
    pub empty_ngram_orders: Vec<usize>,
}

/// Distinct-N result with a flag for corpora that yield no n-gram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistinctN {
    pub value: f64,
    pub distinct: usize,
    pub total: usize,
}

impl DistinctN {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

pub fn distinct_n_counts(corpus: &TokenizedCorpus, n: usize) -> DistinctN {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut seen: HashSet<&[String]> = HashSet::new();
    let mut total = 0usize;
    for doc in &corpus.docs {
        for gram in doc.windows(n) {
            total += 1;
            seen.insert(gram);
        }
    }
    let value = if total == 0 { 0.0 } else { seen.len() as f64 / total as f64 };
    DistinctN {
        value,
        distinct: seen.len(),
        total,
    }
}

/// Distinct n-grams over total n-gram occurrences across the corpus.
pub fn distinct_n(corpus: &TokenizedCorpus, n: usize) -> f64 {
    distinct_n_counts(corpus, n).value
}

type NgramCounts<'a> = HashMap<&'a [String], usize>;

fn ngram_counts(doc: &[String], n: usize) -> NgramCounts<'_> {
    let mut counts = HashMap::new();
    for gram in doc.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// For each n-gram, the two largest per-document counts and the document
/// holding the largest. The max over "all documents except i" is then a
/// constant-time lookup.
#[derive(Clone, Copy)]
struct TopTwo {
    best: usize,
    best_doc: usize,
    second: usize,
}

impl TopTwo {
    fn push(&mut self, count: usize, doc: usize) {
        if count > self.best {
            self.second = self.best;
            self.best = count;
            self.best_doc = doc;
        } else if count > self.second {
            self.second = count;
        }
    }

    fn max_excluding(&self, doc: usize) -> usize {
        if self.best_doc == doc {
            self.second
        } else {
            self.best
        }
    }
}

/// Sentence BLEU of every evaluated document against all other documents.
///
/// Clipped n-gram precision against the per-n-gram maximum count over the
/// other documents, add-one smoothing on numerator and denominator of each
/// order, uniform weights `1/max_n`, and the brevity penalty
/// `exp(1 - r/c)` for `c < r` with `r` the closest other-document length
/// (shorter wins ties). An empty hypothesis scores 0.
pub fn self_bleu(corpus: &TokenizedCorpus, max_n: usize, sample: Option<usize>, seed: u64) -> Result<f64> {
    let n_docs = corpus.docs.len();
    if n_docs < 2 {
        return Err(Error::TooFewDocs(n_docs));
    }
    if max_n == 0 {
        return Err(Error::InvalidParameter("max_n must be at least 1".into()));
    }
    let evaluated: Vec<usize> = match sample {
        Some(m) if m < n_docs => {
            if m == 0 {
                return Err(Error::InvalidParameter("sample size must be positive".into()));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, n_docs, m).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n_docs).collect(),
    };

    let per_doc: Vec<Vec<NgramCounts>> = corpus
        .docs
        .iter()
        .map(|d| (1..=max_n).map(|n| ngram_counts(d, n)).collect())
        .collect();
    let tops: Vec<HashMap<&[String], TopTwo>> = (0..max_n)
        .map(|o| {
            let mut top: HashMap<&[String], TopTwo> = HashMap::new();
            for (doc, counts) in per_doc.iter().enumerate() {
                for (&gram, &c) in &counts[o] {
                    top.entry(gram)
                        .or_insert(TopTwo {
                            best: 0,
                            best_doc: usize::MAX,
                            second: 0,
                        })
                        .push(c, doc);
                }
            }
            top
        })
        .collect();
    let mut lengths: Vec<(usize, usize)> = corpus.docs.iter().enumerate().map(|(i, d)| (d.len(), i)).collect();
    lengths.sort_unstable();

    let scores: Vec<f64> = evaluated
        .par_iter()
        .map(|&i| {
            let hyp_len = corpus.docs[i].len();
            if hyp_len == 0 {
                return 0.0;
            }
            let mut log_sum = 0.0;
            for o in 0..max_n {
                let n = o + 1;
                let total = hyp_len.saturating_sub(n - 1);
                let clipped: usize = per_doc[i][o]
                    .iter()
                    .map(|(gram, &c)| c.min(tops[o][gram].max_excluding(i)))
                    .sum();
                log_sum += ((clipped + 1) as f64 / (total + 1) as f64).ln();
            }
            let ref_len = closest_length(&lengths, hyp_len, i);
            let bp = if hyp_len < ref_len {
                (1.0 - ref_len as f64 / hyp_len as f64).exp()
            } else {
                1.0
            };
            bp * (log_sum / max_n as f64).exp()
        })
        .collect();
    // summed in document order
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Length of the other document closest in length to `len`; shorter wins ties.
fn closest_length(sorted: &[(usize, usize)], len: usize, exclude: usize) -> usize {
    let pos = sorted.partition_point(|&(l, _)| l < len);
    let below = sorted[..pos].iter().rev().find(|&&(_, d)| d != exclude).map(|x| x.0);
    let above = sorted[pos..].iter().find(|&&(_, d)| d != exclude).map(|x| x.0);
    match (below, above) {
        (Some(b), Some(a)) => {
            if len - b <= a - len {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => unreachable!("at least two documents"),
    }
}

/// Distinct-N for `1..=max_n` plus Self-BLEU with the default subsampling
/// policy.
pub fn lexical_scores(corpus: &TokenizedCorpus, max_n: usize, sample: Option<usize>, seed: u64) -> Result<LexicalScores> {
    let n_docs = corpus.len();
    let sample = sample.or((n_docs > DEFAULT_SELF_BLEU_SAMPLE).then_some(DEFAULT_SELF_BLEU_SAMPLE));
    let mut distinct = BTreeMap::new();
    let mut empty = Vec::new();
    for n in 1..=max_n {
        let d = distinct_n_counts(corpus, n);
        if d.is_empty() {
            empty.push(n);
        }
        distinct.insert(n, d.value);
    }
    Ok(LexicalScores {
        distinct_n: distinct,
        self_bleu: self_bleu(corpus, max_n, sample, seed)?,
        n_docs,
        sampled: sample.filter(|&m| m < n_docs),
        empty_ngram_orders: empty,
    })
}
