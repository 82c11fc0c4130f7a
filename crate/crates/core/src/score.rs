//! Stage-weighted evaluation of predictions against solver gold, plus the
//! retrieval-quality metrics used by ablation reports. Set stages use an
//! order-invariant F1; value stages use tolerance indicators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::extract::{NumValue, Prediction};
use crate::model::{CaseCategory, SolvedCase};
use crate::retrieval::dense::Embedder;
use crate::retrieval::RetrievalError;
use crate::text::tokenize;

/// Per-stage weights of the overall score. They must sum to one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageWeights {
    pub heirs: f64,
    pub blocked: f64,
    pub shares: f64,
    pub adjustment: f64,
    pub distribution: f64,
}

impl StageWeights {
    pub fn sum(&self) -> f64 {
        self.heirs + self.blocked + self.shares + self.adjustment + self.distribution
    }

    /// Panics unless the weights form a convex combination.
    pub fn assert_normalized(&self) {
        assert!(
            (self.sum() - 1.0).abs() < 1e-9,
            "stage weights sum to {}, not 1",
            self.sum()
        );
    }
}

impl Default for StageWeights {
    fn default() -> StageWeights {
        StageWeights {
            heirs: 0.30,
            blocked: 0.20,
            shares: 0.20,
            adjustment: 0.10,
            distribution: 0.20,
        }
    }
}

/// Absolute tolerances for the value stages.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// On estate fractions.
    pub share: f64,
    /// On per-head percentage points.
    pub percent: f64,
    /// On base numbers.
    pub base: f64,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances { share: 0.01, percent: 0.5, base: 0.5 }
    }
}

/// One case's per-stage scores, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageScores {
    pub heirs: f64,
    pub blocked: f64,
    pub shares: f64,
    pub adjustment: f64,
    pub distribution: f64,
}

impl StageScores {
    pub const ZERO: StageScores =
        StageScores { heirs: 0.0, blocked: 0.0, shares: 0.0, adjustment: 0.0, distribution: 0.0 };

    pub fn weighted(&self, weights: &StageWeights) -> f64 {
        weights.heirs * self.heirs
            + weights.blocked * self.blocked
            + weights.shares * self.shares
            + weights.adjustment * self.adjustment
            + weights.distribution * self.distribution
    }
}

/// Order-invariant set agreement: `2·|G∩P| / (|G|+|P|)`, with full credit
/// when both sides agree the set is empty.
pub fn score_set<T: Ord>(gold: &BTreeSet<T>, pred: &BTreeSet<T>) -> f64 {
    if gold.is_empty() && pred.is_empty() {
        return 1.0;
    }
    let intersection = gold.intersection(pred).count() as f64;
    2.0 * intersection / (gold.len() + pred.len()) as f64
}

/// Tolerance indicator: 1 when the prediction is within `epsilon` of gold.
pub fn score_value(gold: f64, pred: Option<f64>, epsilon: f64) -> f64 {
    match pred {
        Some(pred) if (pred - gold).abs() <= epsilon => 1.0,
        _ => 0.0,
    }
}

/// Scores one prediction against its gold case. A missing prediction scores
/// zero on every stage.
pub fn score_case(
    gold: &SolvedCase,
    pred: Option<&Prediction>,
    tolerances: &Tolerances,
) -> StageScores {
    let Some(pred) = pred else { return StageScores::ZERO };

    let gold_heirs: BTreeSet<_> = gold.eligible.iter().map(|e| e.kind).collect();
    let pred_heirs: BTreeSet<_> = pred.heirs.keys().copied().collect();
    let heirs = score_set(&gold_heirs, &pred_heirs);

    let gold_blocked: BTreeSet<_> = gold.blocked.iter().map(|b| b.kind).collect();
    let blocked = score_set(&gold_blocked, &pred.blocked);

    let shares = if gold.shares.is_empty() {
        1.0
    } else {
        gold.shares
            .iter()
            .map(|(kind, gold_share)| {
                let predicted = pred.shares.get(kind).map(|v| v.to_f64());
                score_value(gold_share.to_f64(), predicted, tolerances.share)
            })
            .sum::<f64>()
            / gold.shares.len() as f64
    };

    // The adjustment stage carries one weight but two facts: the categorical
    // label and the adjusted base. Their indicators are averaged.
    let label_ok = if pred.category == Some(gold.category()) { 1.0 } else { 0.0 };
    let base_ok = score_value(
        gold.adjustment.adjusted_base as f64,
        pred.tasil_stage.map(NumValue::to_f64),
        tolerances.base,
    );
    let adjustment = (label_ok + base_ok) / 2.0;

    let distribution = if gold.post_tasil.is_empty() {
        1.0
    } else {
        gold.post_tasil
            .iter()
            .map(|(kind, entry)| {
                let predicted = pred
                    .post_tasil
                    .get(kind)
                    .and_then(|e| e.percent)
                    .map(NumValue::to_f64);
                score_value(entry.percent.to_f64(), predicted, tolerances.percent)
            })
            .sum::<f64>()
            / gold.post_tasil.len() as f64
    };

    StageScores { heirs, blocked, shares, adjustment, distribution }
}

/// Scoring failures.
#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("duplicate prediction id \"{0}\"")]
    DuplicatePrediction(String),
    #[error("duplicate gold id \"{0}\"")]
    DuplicateGold(String),
}

/// One scored case in a run report.
#[derive(Debug, Clone, Serialize)]
pub struct CaseScore {
    pub id: String,
    pub category: CaseCategory,
    pub stages: StageScores,
    pub weighted: f64,
    pub missing: bool,
}

/// A whole evaluation run: per-case scores, the run mean, missing-output
/// count, and per-category means.
#[derive(Debug, Clone, Serialize)]
pub struct MireReport {
    pub cases: Vec<CaseScore>,
    pub mean: f64,
    pub missing: usize,
    pub per_category: BTreeMap<CaseCategory, f64>,
}

impl fmt::Display for MireReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cases: {}", self.cases.len())?;
        writeln!(f, "mean score: {:.4}", self.mean)?;
        writeln!(f, "missing outputs: {}", self.missing)?;
        for (category, mean) in &self.per_category {
            writeln!(f, "  {category}: {mean:.4}")?;
        }
        Ok(())
    }
}

/// Scores a run: gold cases paired with predictions by id. Ids absent from
/// `predictions` count as missing and score zero.
pub fn score_run(
    gold: &[(String, SolvedCase)],
    predictions: &[(String, Prediction)],
    weights: &StageWeights,
    tolerances: &Tolerances,
) -> Result<MireReport, ScoreError> {
    weights.assert_normalized();
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for (id, pred) in predictions {
        if by_id.insert(id, pred).is_some() {
            return Err(ScoreError::DuplicatePrediction(id.clone()));
        }
    }
    let mut seen_gold = BTreeSet::new();
    let mut cases = Vec::with_capacity(gold.len());
    let mut per_category: BTreeMap<CaseCategory, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    let mut missing = 0;
    for (id, case) in gold {
        if !seen_gold.insert(id.as_str()) {
            return Err(ScoreError::DuplicateGold(id.clone()));
        }
        let pred = by_id.get(id.as_str()).copied();
        if pred.is_none() {
            missing += 1;
        }
        let stages = score_case(case, pred, tolerances);
        let weighted = stages.weighted(weights);
        total += weighted;
        let slot = per_category.entry(case.category()).or_insert((0.0, 0));
        slot.0 += weighted;
        slot.1 += 1;
        cases.push(CaseScore {
            id: id.clone(),
            category: case.category(),
            stages,
            weighted,
            missing: pred.is_none(),
        });
    }
    let mean = if cases.is_empty() { 0.0 } else { total / cases.len() as f64 };
    let per_category = per_category
        .into_iter()
        .map(|(category, (sum, n))| (category, sum / n as f64))
        .collect();
    Ok(MireReport { cases, mean, missing, per_category })
}

// ---------------------------------------------------------------------------
// Retrieval-quality metrics for ablation reports.

/// Quality band of one retrieval, by combined score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityBin {
    Excellent,
    Good,
    Fair,
    Poor,
}

impl QualityBin {
    pub fn name(self) -> &'static str {
        match self {
            QualityBin::Excellent => "excellent",
            QualityBin::Good => "good",
            QualityBin::Fair => "fair",
            QualityBin::Poor => "poor",
        }
    }

    /// Bands: excellent ≥ 0.75, good ≥ 0.60, fair ≥ 0.40, poor otherwise.
    pub fn from_combined(s_comb: f64) -> QualityBin {
        if s_comb >= 0.75 {
            QualityBin::Excellent
        } else if s_comb >= 0.60 {
            QualityBin::Good
        } else if s_comb >= 0.40 {
            QualityBin::Fair
        } else {
            QualityBin::Poor
        }
    }
}

impl fmt::Display for QualityBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weighted combination of the three retrieval-quality signals.
pub fn combined_score(s_sem: f64, s_kw: f64, s_tfidf: f64) -> f64 {
    0.5 * s_sem + 0.3 * s_kw + 0.2 * s_tfidf
}

/// Retrieval success is a combined score of at least one half.
pub const SUCCESS_THRESHOLD: f64 = 0.5;

/// Per-question retrieval-quality metrics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AblationRow {
    pub s_sem: f64,
    pub s_kw: f64,
    pub s_tfidf: f64,
    pub s_comb: f64,
    pub success: bool,
    pub bin: QualityBin,
}

impl AblationRow {
    pub fn from_signals(s_sem: f64, s_kw: f64, s_tfidf: f64) -> AblationRow {
        let s_comb = combined_score(s_sem, s_kw, s_tfidf);
        AblationRow {
            s_sem,
            s_kw,
            s_tfidf,
            s_comb,
            success: s_comb >= SUCCESS_THRESHOLD,
            bin: QualityBin::from_combined(s_comb),
        }
    }
}

/// A tf-idf vector space fitted over a corpus, for the third quality signal.
#[derive(Debug, Clone)]
pub struct TfIdfModel {
    idf: BTreeMap<String, f64>,
    n_docs: usize,
}

impl TfIdfModel {
    /// Fits smoothed inverse document frequencies: `ln((N+1)/(df+1)) + 1`.
    pub fn fit<S: AsRef<str>>(token_lists: &[Vec<S>]) -> TfIdfModel {
        let n_docs = token_lists.len();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for tokens in token_lists {
            let distinct: BTreeSet<&str> = tokens.iter().map(|t| t.as_ref()).collect();
            for term in distinct {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(term, df)| {
                let idf = ((n_docs as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0;
                (term, idf)
            })
            .collect();
        TfIdfModel { idf, n_docs }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.idf.get(term).copied()
    }

    /// L2-normalized tf-idf vector over the fitted vocabulary. Terms outside
    /// the vocabulary are ignored.
    fn vector(&self, tokens: &[String]) -> BTreeMap<&str, f64> {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for token in tokens {
            if let Some((term, idf)) = self.idf.get_key_value(token.as_str()) {
                *tf.entry(term).or_insert(0.0) += idf;
            }
        }
        let norm: f64 = tf.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for weight in tf.values_mut() {
                *weight /= norm;
            }
        }
        tf
    }

    /// Cosine similarity of two texts in the fitted space, clamped to [0, 1].
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vector(&tokenize(a));
        let vb = self.vector(&tokenize(b));
        let dot: f64 = va
            .iter()
            .filter_map(|(term, wa)| vb.get(term).map(|wb| wa * wb))
            .sum();
        dot.clamp(0.0, 1.0)
    }
}

/// Jaccard overlap of token sets, as used by the keyword signal.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let ta: BTreeSet<String> = tokenize(a).into_iter().collect();
    let tb: BTreeSet<String> = tokenize(b).into_iter().collect();
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let union = ta.union(&tb).count() as f64;
    if union == 0.0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / union
}

/// Computes the per-question quality row: mean semantic cosine, mean keyword
/// overlap, and mean tf-idf cosine between the question and each retrieved
/// context, combined per the fixed weights.
pub fn ablation_row(
    question: &str,
    contexts: &[&str],
    embedder: &dyn Embedder,
    tfidf: &TfIdfModel,
) -> Result<AblationRow, RetrievalError> {
    if contexts.is_empty() {
        return Ok(AblationRow::from_signals(0.0, 0.0, 0.0));
    }
    let query = embedder.embed(question)?;
    let mut sem_sum = 0.0;
    let mut kw_sum = 0.0;
    let mut tfidf_sum = 0.0;
    for context in contexts {
        let doc = embedder.embed(context)?;
        let cos: f32 = query.iter().zip(&doc).map(|(a, b)| a * b).sum();
        sem_sum += f64::from(cos).clamp(0.0, 1.0);
        kw_sum += token_overlap(question, context);
        tfidf_sum += tfidf.cosine(question, context);
    }
    let n = contexts.len() as f64;
    Ok(AblationRow::from_signals(sem_sum / n, kw_sum / n, tfidf_sum / n))
}
