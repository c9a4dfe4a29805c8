//! Affect features from free-text memory descriptions.
//!
//! The pipeline is: [`preprocess`] → [`tokenize`] → per-word lookup (raw form first,
//! then [`lemmatize`]d) in every loaded [`Lexicon`] and [`EmbeddingTable`], mean
//! pooling per resource, plus document-level [`rule_sentiment`] scores.

mod embedding;
mod lemmatize;
mod lexicon;
mod preprocess;
mod resources;
mod rules;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use embedding::EmbeddingTable;
pub use lemmatize::lemmatize;
pub use lexicon::Lexicon;
pub use preprocess::preprocess;
pub use resources::{ResourceManifest, TextResources};
pub use rules::{rule_sentiment, RuleScorer, SentimentScores};
pub use tokenize::{tokenize, Token};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextFeatures {
    pub lexical: Vec<f64>,
    pub embedding: Vec<f64>,
    pub lexical_coverage: f64,
    pub embedding_coverage: f64,
}

/// Word tokens of a preprocessed text with their lemmas.
fn word_forms(text: &str) -> Vec<(String, String)> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| {
            let lemma = lemmatize(&t.norm);
            (t.norm, lemma)
        })
        .collect()
}

fn lookup<'a>(
    get: impl Fn(&str) -> Option<&'a [f64]>,
    raw: &str,
    lemma: &str,
) -> Option<&'a [f64]> {
    get(raw).or_else(|| if lemma != raw { get(lemma) } else { None })
}

/// Mean-pools one block per resource over the tokens found in it. Returns the
/// concatenated blocks and the fraction of tokens found in at least one resource.
fn pooled_blocks<'a, R>(
    forms: &[(String, String)],
    resources: &'a [R],
    dim: impl Fn(&R) -> usize,
    get: impl Fn(&'a R, &str) -> Option<&'a [f64]>,
) -> (Vec<f64>, f64) {
    let mut out = Vec::new();
    let mut matched = vec![false; forms.len()];
    for res in resources {
        let d = dim(res);
        let mut sum = vec![0.0; d];
        let mut count = 0usize;
        for (i, (raw, lemma)) in forms.iter().enumerate() {
            if let Some(v) = lookup(|w| get(res, w), raw, lemma) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                count += 1;
                matched[i] = true;
            }
        }
        if count > 0 {
            let n = count as f64;
            out.extend(sum.into_iter().map(|s| s / n));
        } else {
            out.extend(std::iter::repeat_n(0.0, d));
        }
    }
    let coverage = if forms.is_empty() {
        0.0
    } else {
        matched.iter().filter(|&&m| m).count() as f64 / forms.len() as f64
    };
    (out, coverage)
}

/// Lexicon blocks in load order followed by the four rule-scorer values.
pub fn lexical_features(
    text: &str,
    lexicons: &[Lexicon],
    scorer: &RuleScorer,
) -> Result<(Vec<f64>, f64)> {
    if lexicons.is_empty() {
        return Err(Error::invalid("no lexicons loaded"));
    }
    let text = preprocess(text);
    let forms = word_forms(&text);
    let (mut v, coverage) = pooled_blocks(&forms, lexicons, Lexicon::dim, |l, w| l.get(w));
    v.extend(rule_sentiment(&text, scorer).to_array());
    Ok((v, coverage))
}

/// Mean word vector per table, tables concatenated in load order.
pub fn embed_features(text: &str, tables: &[EmbeddingTable]) -> Result<(Vec<f64>, f64)> {
    if tables.is_empty() {
        return Err(Error::invalid("no embedding tables loaded"));
    }
    let text = preprocess(text);
    let forms = word_forms(&text);
    Ok(pooled_blocks(&forms, tables, EmbeddingTable::dim, |t, w| {
        t.get(w)
    }))
}

pub fn extract(text: &str, res: &TextResources) -> Result<TextFeatures> {
    let (lexical, lexical_coverage) = lexical_features(text, &res.lexicons, &res.scorer)?;
    let (embedding, embedding_coverage) = embed_features(text, &res.embeddings)?;
    Ok(TextFeatures {
        lexical,
        embedding,
        lexical_coverage,
        embedding_coverage,
    })
}
