//! Weighted reciprocal-rank fusion of the two retrieval channels, and the
//! rerankers applied to the fused candidates.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bm25::ScoredDoc;
use super::RetrievalError;
use crate::text::tokenize;

/// Fusion weights: `alpha / (k + dense_rank) + beta / (k + lexical_rank)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FuseParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
}

impl Default for FuseParams {
    fn default() -> FuseParams {
        FuseParams { alpha: 0.7, beta: 0.3, k: 60.0 }
    }
}

/// Fused score for one document given its 1-based rank in each channel;
/// a channel that did not return the document contributes nothing.
pub fn rrf_score(params: FuseParams, dense_rank: Option<usize>, lexical_rank: Option<usize>) -> f64 {
    let dense = dense_rank.map_or(0.0, |r| params.alpha / (params.k + r as f64));
    let lexical = lexical_rank.map_or(0.0, |r| params.beta / (params.k + r as f64));
    dense + lexical
}

/// Fuses two ranked lists (position = rank) into one, ordered by fused score
/// descending with ties broken toward the lower document index.
pub fn fuse(dense: &[ScoredDoc], lexical: &[ScoredDoc], params: FuseParams) -> Vec<ScoredDoc> {
    let mut ranks: BTreeMap<u32, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (i, hit) in dense.iter().enumerate() {
        ranks.entry(hit.doc).or_default().0 = Some(i + 1);
    }
    for (i, hit) in lexical.iter().enumerate() {
        ranks.entry(hit.doc).or_default().1 = Some(i + 1);
    }
    let mut fused: Vec<ScoredDoc> = ranks
        .into_iter()
        .map(|(doc, (d, l))| ScoredDoc { doc, score: rrf_score(params, d, l) })
        .collect();
    fused.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
    fused
}

/// Scores a (query, document) pair; higher is more relevant. Used to reorder
/// the fused candidates.
pub trait Reranker: Send + Sync {
    fn score(&self, query: &str, doc_text: &str) -> Result<f64, RetrievalError>;
}

/// Jaccard overlap of normalized token sets: cheap, deterministic, and
/// model-free.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlapReranker;

impl Reranker for TokenOverlapReranker {
    fn score(&self, query: &str, doc_text: &str) -> Result<f64, RetrievalError> {
        let q: BTreeSet<String> = tokenize(query).into_iter().collect();
        let d: BTreeSet<String> = tokenize(doc_text).into_iter().collect();
        if q.is_empty() && d.is_empty() {
            return Ok(1.0);
        }
        let intersection = q.intersection(&d).count() as f64;
        let union = q.union(&d).count() as f64;
        Ok(if union == 0.0 { 0.0 } else { intersection / union })
    }
}

/// Token overlap weighted by corpus rarity, normalized by the query's total
/// weight: each query token carries `ln((N+1)/df)` from the indexed corpus,
/// and the score is the matched weight over the total. Rare tokens — counts,
/// amounts, uncommon heirs — dominate the shared narrative scaffolding, so a
/// near-duplicate that differs only in the distinctive details ranks below
/// the true source. Deterministic and model-free.
#[derive(Debug, Clone)]
pub struct RarityWeightedReranker {
    weights: std::collections::HashMap<String, f64>,
    /// Weight assigned to tokens never seen at build time (maximal rarity).
    unseen: f64,
}

impl RarityWeightedReranker {
    /// Gathers document frequencies over the corpus texts.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> RarityWeightedReranker {
        let mut df: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
        let mut n: u32 = 0;
        for text in texts {
            n += 1;
            let unique: BTreeSet<String> = tokenize(text).into_iter().collect();
            for token in unique {
                *df.entry(token).or_insert(0) += 1;
            }
        }
        let n = n.max(1) as f64;
        let weights = df
            .into_iter()
            .map(|(token, d)| (token, ((n + 1.0) / d as f64).ln()))
            .collect();
        RarityWeightedReranker { weights, unseen: (n + 1.0).ln() }
    }

    fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }
}

impl Reranker for RarityWeightedReranker {
    fn score(&self, query: &str, doc_text: &str) -> Result<f64, RetrievalError> {
        let q: BTreeSet<String> = tokenize(query).into_iter().collect();
        if q.is_empty() {
            return Ok(0.0);
        }
        let d: BTreeSet<String> = tokenize(doc_text).into_iter().collect();
        let mut matched = 0.0;
        let mut total = 0.0;
        for token in &q {
            let w = self.weight(token);
            total += w;
            if d.contains(token) {
                matched += w;
            }
        }
        Ok(if total > 0.0 { matched / total } else { 0.0 })
    }
}

/// Reranker backed by an HTTP endpoint: `POST {base_url}/rerank` with
/// `{"query": ..., "document": ...}`, expecting `{"score": ..}`.
pub struct RemoteReranker {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl RemoteReranker {
    pub fn new(base_url: &str, timeout: std::time::Duration) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?;
        Ok(RemoteReranker { base_url: base_url.trim_end_matches('/').to_string(), client })
    }
}

#[derive(Serialize)]
struct RerankRequest<'a> {
    query: &'a str,
    document: &'a str,
}

#[derive(Deserialize)]
struct RerankResponse {
    score: f64,
}

impl Reranker for RemoteReranker {
    fn score(&self, query: &str, doc_text: &str) -> Result<f64, RetrievalError> {
        let response = self
            .client
            .post(format!("{}/rerank", self.base_url))
            .json(&RerankRequest { query, document: doc_text })
            .send()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RetrievalError::Remote(format!(
                "rerank endpoint returned {}",
                response.status()
            )));
        }
        Ok(response
            .json::<RerankResponse>()
            .map_err(|e| RetrievalError::Remote(e.to_string()))?
            .score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(docs: &[u32]) -> Vec<ScoredDoc> {
        docs.iter()
            .enumerate()
            .map(|(i, &doc)| ScoredDoc { doc, score: 1.0 / (i + 1) as f64 })
            .collect()
    }

    #[test]
    fn rank_one_in_both_channels_matches_hand_value() {
        let got = rrf_score(FuseParams::default(), Some(1), Some(1));
        assert!((got - 1.0 / 61.0).abs() < 1e-12);
        assert!((got - 0.016393442622950817).abs() < 1e-15);
    }

    #[test]
    fn mixed_ranks_match_hand_values() {
        let p = FuseParams::default();
        let got = rrf_score(p, Some(1), Some(3));
        assert!((got - (0.7 / 61.0 + 0.3 / 63.0)).abs() < 1e-15);
        let dense_only = rrf_score(p, Some(2), None);
        assert!((dense_only - 0.7 / 62.0).abs() < 1e-15);
        let lexical_only = rrf_score(p, None, Some(1));
        assert!((lexical_only - 0.3 / 61.0).abs() < 1e-15);
        assert_eq!(rrf_score(p, None, None), 0.0);
    }

    #[test]
    fn fusion_favors_agreement() {
        let dense = ranked(&[10, 20, 30]);
        let lexical = ranked(&[20, 40, 10]);
        let fused = fuse(&dense, &lexical, FuseParams::default());
        // 10: 0.7/61 + 0.3/63; 20: 0.7/62 + 0.3/61
        assert_eq!(fused[0].doc, 10);
        assert_eq!(fused[1].doc, 20);
        let docs: Vec<u32> = fused.iter().map(|s| s.doc).collect();
        assert_eq!(docs.len(), 4);
        assert!(docs.contains(&40));
    }

    #[test]
    fn fusion_matches_brute_force_on_random_lists() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let params = FuseParams::default();
        for _ in 0..50 {
            let mut pool: Vec<u32> = (0..50).collect();
            pool.shuffle(&mut rng);
            let dense = ranked(&pool[..30]);
            pool.shuffle(&mut rng);
            let lexical = ranked(&pool[..25]);

            let fused = fuse(&dense, &lexical, params);

            let mut expected: Vec<(u32, f64)> = (0..50u32)
                .filter_map(|doc| {
                    let d = dense.iter().position(|s| s.doc == doc).map(|i| i + 1);
                    let l = lexical.iter().position(|s| s.doc == doc).map(|i| i + 1);
                    if d.is_none() && l.is_none() {
                        None
                    } else {
                        Some((doc, rrf_score(params, d, l)))
                    }
                })
                .collect();
            expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

            assert_eq!(fused.len(), expected.len());
            for (got, want) in fused.iter().zip(&expected) {
                assert_eq!(got.doc, want.0);
                assert!((got.score - want.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equal_scores_break_toward_lower_doc_id() {
        let dense = ranked(&[7, 3]);
        let lexical = ranked(&[3, 7]);
        // With equal channel weights, swapped ranks give identical scores.
        let params = FuseParams { alpha: 0.5, beta: 0.5, k: 60.0 };
        let fused = fuse(&dense, &lexical, params);
        assert!((fused[0].score - fused[1].score).abs() < 1e-15);
        assert_eq!(fused[0].doc, 3);
        assert_eq!(fused[1].doc, 7);
    }

    #[test]
    fn token_overlap_reranker_is_jaccard() {
        let r = TokenOverlapReranker;
        assert_eq!(r.score("زوج وابن", "زوج وابن").unwrap(), 1.0);
        assert_eq!(r.score("زوج", "بنت").unwrap(), 0.0);
        let half = r.score("زوج ابن بنت", "زوج ابن أم").unwrap();
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rare_details_outweigh_shared_scaffolding() {
        // Four documents share the narrative scaffolding; only one carries
        // the query's amount. A query phrased with different scaffolding but
        // the same amount must prefer the amount over the phrasing.
        let corpus = [
            "توفي رجل عن ابن وترك 5000 دينار",
            "توفي رجل عن ابن وترك 7000 دينار",
            "توفي رجل عن ابن وترك 9000 دينار",
            "ماتت امرأة عن بنت وتركت 1234 دينار",
        ];
        let reranker = RarityWeightedReranker::from_texts(corpus);
        let query = "مات رجل وخلف ابن وترك 5000 دينار";
        let with_amount = reranker.score(query, corpus[0]).unwrap();
        let same_phrasing = reranker.score(query, corpus[1]).unwrap();
        assert!(
            with_amount > same_phrasing,
            "amount match {with_amount} must beat phrasing match {same_phrasing}"
        );
    }

    #[test]
    fn weighted_overlap_is_normalized_containment() {
        let corpus = ["زوج وابن", "زوج وبنت"];
        let reranker = RarityWeightedReranker::from_texts(corpus);
        assert_eq!(reranker.score("زوج وابن", "توفي عن زوج وابن").unwrap(), 1.0);
        assert_eq!(reranker.score("", "زوج").unwrap(), 0.0);
        assert_eq!(reranker.score("زوج", "").unwrap(), 0.0);
        // A token absent from the corpus counts at maximal rarity, so a
        // document matching everything else stays below full score.
        let partial = reranker.score("زوج قنطرة", "زوج").unwrap();
        assert!(partial > 0.0 && partial < 1.0, "{partial}");
    }

    proptest::proptest! {
        #[test]
        fn weighted_overlap_stays_in_unit_range(
            corpus in proptest::collection::vec("[ا-ي0-9 ]{1,30}", 1..8),
            query in "[ا-ي0-9 ]{0,30}",
            doc in "[ا-ي0-9 ]{0,30}",
        ) {
            let reranker = RarityWeightedReranker::from_texts(corpus.iter().map(String::as_str));
            let score = reranker.score(&query, &doc).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&score), "{score}");
            // Handing the document every query token reaches the maximum.
            let full = reranker.score(&query, &query).unwrap();
            let expected = if tokenize(&query).is_empty() { 0.0 } else { 1.0 };
            proptest::prop_assert!((full - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn remote_reranker_posts_query_and_document() {
        let server = crate::mockhttp::serve(vec![(200, "{\"score\":0.875}".to_string())]);
        let reranker =
            RemoteReranker::new(server.url(), std::time::Duration::from_secs(5)).unwrap();
        let score = reranker.score("زوج وبنت", "توفي عن زوج وبنت").unwrap();
        assert_eq!(score, 0.875);

        let requests = server.finish();
        assert!(requests[0].head.starts_with("POST /rerank "));
        let body: serde_json::Value = serde_json::from_str(&requests[0].body).unwrap();
        assert_eq!(body["query"], "زوج وبنت");
        assert_eq!(body["document"], "توفي عن زوج وبنت");
    }

    #[test]
    fn remote_reranker_rejects_bad_status_and_bad_body() {
        let server = crate::mockhttp::serve(vec![(500, String::new())]);
        let reranker =
            RemoteReranker::new(server.url(), std::time::Duration::from_secs(5)).unwrap();
        let err = reranker.score("س", "ن").unwrap_err();
        assert!(matches!(err, RetrievalError::Remote(_)), "{err}");
        server.finish();

        let server = crate::mockhttp::serve(vec![(200, "{\"points\":1}".to_string())]);
        let reranker =
            RemoteReranker::new(server.url(), std::time::Duration::from_secs(5)).unwrap();
        let err = reranker.score("س", "ن").unwrap_err();
        assert!(matches!(err, RetrievalError::Remote(_)), "{err}");
        server.finish();
    }
}
