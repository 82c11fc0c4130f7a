//! Dense retrieval channel: text embedders and a brute-force vector store.

use serde::{Deserialize, Serialize};

use super::bm25::ScoredDoc;
use super::RetrievalError;
use crate::text::normalize;

/// Maps text to a fixed-dimension vector. Implementations must be
/// deterministic for identical input.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f32>, RetrievalError>;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a_step(mut hash: u64, byte: u8) -> u64 {
    hash ^= byte as u64;
    hash = hash.wrapping_mul(FNV_PRIME);
    hash
}

/// Character n-gram hashing embedder: normalizes the text, hashes every
/// 3-, 4-, and 5-character window into a signed bucket, and L2-normalizes.
/// Self-contained and deterministic; no model weights involved.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HashedNgramEmbedder {
    pub dim: usize,
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        HashedNgramEmbedder { dim: 384 }
    }
}

impl Embedder for HashedNgramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, RetrievalError> {
        let mut vector = vec![0.0f32; self.dim];
        let chars: Vec<char> = normalize(text).chars().collect();
        for width in 3..=5usize {
            if chars.len() < width {
                break;
            }
            for window in chars.windows(width) {
                let mut hash = FNV_OFFSET;
                for &c in window {
                    for byte in (c as u32).to_le_bytes() {
                        hash = fnv1a_step(hash, byte);
                    }
                }
                let bucket = (hash % self.dim as u64) as usize;
                let sign = if hash >> 63 == 0 { 1.0 } else { -1.0 };
                vector[bucket] += sign;
            }
        }
        let norm: f32 = vector.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        Ok(vector)
    }
}

/// Embedder backed by an HTTP endpoint: `POST {base_url}/embed` with
/// `{"text": ...}`, expecting `{"vector": [..]}`. Vectors are re-normalized
/// locally so cosine scoring holds regardless of the remote convention.
pub struct RemoteEmbedder {
    base_url: String,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn new(base_url: &str, dim: usize, timeout: std::time::Duration) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?;
        Ok(RemoteEmbedder { base_url: base_url.trim_end_matches('/').to_string(), dim, client })
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f32>,
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, RetrievalError> {
        let response = self
            .client
            .post(format!("{}/embed", self.base_url))
            .json(&EmbedRequest { text })
            .send()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RetrievalError::Remote(format!(
                "embedding endpoint returned {}",
                response.status()
            )));
        }
        let mut vector = response
            .json::<EmbedResponse>()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?
            .vector;
        if vector.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        let norm: f32 = vector.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        Ok(vector)
    }
}

/// Flat vector store scored by dot product (cosine for unit vectors).
#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    data: Vec<f32>,
}

impl VectorStore {
    pub fn new(dim: usize) -> VectorStore {
        VectorStore { dim, data: Vec::new() }
    }

    pub fn from_rows(dim: usize, data: Vec<f32>) -> Result<VectorStore, RetrievalError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(RetrievalError::Corrupt(format!(
                "vector data of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(VectorStore { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 { 0 } else { self.data.len() / self.dim }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn push(&mut self, vector: &[f32]) -> Result<(), RetrievalError> {
        if vector.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Top `depth` rows by dot product, descending; ties break toward the
    /// lower row index.
    pub fn search(&self, query: &[f32], depth: usize) -> Result<Vec<ScoredDoc>, RetrievalError> {
        if query.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        let mut scored: Vec<ScoredDoc> = (0..self.len())
            .map(|row| {
                let offset = row * self.dim;
                let score: f32 = self.data[offset..offset + self.dim]
                    .iter()
                    .zip(query)
                    .map(|(a, b)| a * b)
                    .sum();
                ScoredDoc { doc: row as u32, score: score as f64 }
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
        scored.truncate(depth);
        Ok(scored)
    }
}
