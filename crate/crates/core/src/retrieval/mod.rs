//! Hybrid retrieval: BM25 and dense channels fused by weighted reciprocal
//! rank, then reranked. Deterministic end to end for fixed inputs.

pub mod bm25;
pub mod dense;
pub mod fuse;
pub mod store;

use thiserror::Error;

pub use crate::text::{normalize, tokenize};
use bm25::{BmParams, InvertedIndex, ScoredDoc};
use dense::{Embedder, VectorStore};
use fuse::{FuseParams, Reranker};

use crate::gen::{render_views, Document, TemplateChoice, TEMPLATES_PER_VIEW};

/// Retrieval failures.
#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index does not match the corpus: {0}")]
    CorpusMismatch(String),
    #[error("index file is not recognized (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index file version {0}")]
    UnsupportedVersion(u8),
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
    #[error("remote scorer failed: {0}")]
    Remote(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Knobs for both channels and the fusion stage.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalParams {
    pub bm25: BmParams,
    pub fuse: FuseParams,
    /// How many candidates each channel contributes before fusion.
    pub channel_depth: usize,
    /// How many fused candidates are reranked.
    pub rerank_depth: usize,
}

impl Default for RetrievalParams {
    fn default() -> RetrievalParams {
        RetrievalParams {
            bm25: BmParams::default(),
            fuse: FuseParams::default(),
            channel_depth: 100,
            rerank_depth: 50,
        }
    }
}

/// One retrieved document with its fused and reranked scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub rank: u32,
    pub rrf_score: f64,
    pub rerank_score: f64,
}

/// The text a document is indexed under: its three narrative views plus the
/// question-and-answer view re-rendered through every template and both
/// framings of the deceased. Every document then carries the full phrasing
/// inventory, so the shared narrative scaffolding loses its discriminative
/// weight and retrieval is decided by the case's own content — heirs,
/// counts, amounts, and shares.
pub fn document_text(doc: &Document) -> String {
    let mut parts = vec![
        doc.problem_text.clone(),
        doc.qa_text.clone(),
        doc.reasoning_text.clone(),
    ];
    for female_deceased in [true, false] {
        for template in 0..TEMPLATES_PER_VIEW {
            let choice = TemplateChoice {
                problem: template,
                qa: template,
                reasoning: template,
                female_deceased,
            };
            parts.push(render_views(&doc.structured_output, &choice).qa);
        }
    }
    parts.join("\n")
}

/// A built index over one corpus: lexical and dense channels plus the raw
/// texts needed for reranking.
pub struct Retriever {
    pub(crate) ids: Vec<String>,
    pub(crate) texts: Vec<String>,
    pub(crate) index: InvertedIndex,
    pub(crate) store: VectorStore,
    embedder: Box<dyn Embedder>,
    reranker: Box<dyn Reranker>,
    pub(crate) params: RetrievalParams,
}

impl Retriever {
    /// Indexes `(id, text)` pairs with the given embedder and reranker.
    pub fn build(
        docs: Vec<(String, String)>,
        embedder: Box<dyn Embedder>,
        reranker: Box<dyn Reranker>,
        params: RetrievalParams,
    ) -> Result<Retriever, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut ids = Vec::with_capacity(docs.len());
        let mut texts = Vec::with_capacity(docs.len());
        for (id, text) in docs {
            ids.push(id);
            texts.push(text);
        }
        let token_lists: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
        let index = InvertedIndex::build(&token_lists, params.bm25);
        let mut store = VectorStore::new(embedder.dim());
        for text in &texts {
            store.push(&embedder.embed(text)?)?;
        }
        Ok(Retriever { ids, texts, index, store, embedder, reranker, params })
    }

    /// Indexes `(id, text)` pairs with the built-in deterministic stack: the
    /// hashed-ngram embedder and the rarity-weighted overlap reranker with
    /// token statistics drawn from this same corpus.
    pub fn build_default(
        docs: Vec<(String, String)>,
        params: RetrievalParams,
    ) -> Result<Retriever, RetrievalError> {
        let reranker = fuse::RarityWeightedReranker::from_texts(docs.iter().map(|(_, t)| t.as_str()));
        Retriever::build(
            docs,
            Box::new(dense::HashedNgramEmbedder::default()),
            Box::new(reranker),
            params,
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn text_of(&self, doc_id: &str) -> Option<&str> {
        self.ids
            .iter()
            .position(|id| id == doc_id)
            .map(|i| self.texts[i].as_str())
    }

    /// Runs both channels, fuses, reranks the head of the fused list, and
    /// returns the top `k` hits ordered by rerank score (ties: fused score,
    /// then document id).
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<Hit>, RetrievalError> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let query_tokens = tokenize(query);
        let lexical = self.index.search(&query_tokens, self.params.channel_depth);
        let query_vector = self.embedder.embed(query)?;
        let dense = self.store.search(&query_vector, self.params.channel_depth)?;
        let fused = fuse::fuse(&dense, &lexical, self.params.fuse);

        let depth = self.params.rerank_depth.max(k).min(fused.len());
        let mut reranked: Vec<(ScoredDoc, f64)> = Vec::with_capacity(depth);
        for candidate in &fused[..depth] {
            let text = &self.texts[candidate.doc as usize];
            match self.reranker.score(query, text) {
                Ok(score) => reranked.push((*candidate, score)),
                Err(err) => {
                    log::warn!(
                        "dropping candidate {} from results: {err}",
                        self.ids[candidate.doc as usize]
                    );
                }
            }
        }
        reranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(b.0.score.total_cmp(&a.0.score))
                .then(self.ids[a.0.doc as usize].cmp(&self.ids[b.0.doc as usize]))
        });
        reranked.truncate(k);
        Ok(reranked
            .into_iter()
            .enumerate()
            .map(|(i, (fusedhit, rerank))| Hit {
                doc_id: self.ids[fusedhit.doc as usize].clone(),
                rank: (i + 1) as u32,
                rrf_score: fusedhit.score,
                rerank_score: rerank,
            })
            .collect())
    }
}
