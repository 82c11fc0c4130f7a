//! BM25 lexical scoring over an in-memory inverted index.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// BM25 shape parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BmParams {
    pub k1: f64,
    pub b: f64,
}

impl Default for BmParams {
    fn default() -> BmParams {
        BmParams { k1: 1.2, b: 0.75 }
    }
}

/// One document's score from a retrieval channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc: u32,
    pub score: f64,
}

/// Smoothed inverse document frequency; always positive.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    ((n_docs as f64 - df as f64 + 0.5) / (df as f64 + 0.5) + 1.0).ln()
}

/// The term-frequency saturation component of BM25 for one term in one
/// document; multiplied by the term's IDF to give its score contribution.
pub fn tf_component(tf: u32, doc_len: u32, avg_len: f64, params: BmParams) -> f64 {
    let tf = tf as f64;
    let norm = 1.0 - params.b + params.b * doc_len as f64 / avg_len;
    tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index with document lengths, ready for BM25 scoring.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    pub(crate) postings: BTreeMap<String, Vec<Posting>>,
    pub(crate) doc_len: Vec<u32>,
    pub(crate) avg_len: f64,
    pub(crate) params: BmParams,
}

impl InvertedIndex {
    /// Builds the index from per-document token lists.
    pub fn build(token_lists: &[Vec<String>], params: BmParams) -> InvertedIndex {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(token_lists.len());
        for (doc, tokens) in token_lists.iter().enumerate() {
            doc_len.push(tokens.len() as u32);
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc: doc as u32, tf });
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = if doc_len.is_empty() {
            0.0
        } else {
            (total as f64 / doc_len.len() as f64).max(f64::MIN_POSITIVE)
        };
        InvertedIndex { postings, doc_len, avg_len, params }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_len.len()
    }

    /// BM25 score of one document for a query (sum over distinct terms).
    pub fn score_doc(&self, query_tokens: &[String], doc: u32) -> f64 {
        let terms: BTreeSet<&String> = query_tokens.iter().collect();
        let mut score = 0.0;
        for term in terms {
            if let Some(list) = self.postings.get(term.as_str()) {
                if let Ok(pos) = list.binary_search_by_key(&doc, |p| p.doc) {
                    score += idf(self.n_docs(), list.len())
                        * tf_component(list[pos].tf, self.doc_len[doc as usize], self.avg_len, self.params);
                }
            }
        }
        score
    }

    /// Top `depth` documents by BM25 score, descending; ties break toward
    /// the lower document index.
    pub fn search(&self, query_tokens: &[String], depth: usize) -> Vec<ScoredDoc> {
        let terms: BTreeSet<&String> = query_tokens.iter().collect();
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for term in terms {
            if let Some(list) = self.postings.get(term.as_str()) {
                let idf = idf(self.n_docs(), list.len());
                for p in list {
                    *acc.entry(p.doc).or_insert(0.0) += idf
                        * tf_component(p.tf, self.doc_len[p.doc as usize], self.avg_len, self.params);
                }
            }
        }
        let mut scored: Vec<ScoredDoc> =
            acc.into_iter().map(|(doc, score)| ScoredDoc { doc, score }).collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
        scored.truncate(depth);
        scored
    }
}
