//! Ranker/reader score fusion: `y = (1 - alpha) * y_reader + alpha * y_rank`
//! over per-question normalized scores, followed by answer deduplication.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::normalize_answer;
use crate::ranker::RankedList;
use crate::reader::SpanCandidate;
use crate::text::Lang;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("candidate from passage `{0}` which is not in the ranked list")]
    UnknownPassageInCandidates(String),
    #[error("alpha must be in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("final_k must be >= 1")]
    InvalidFinalK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReaderScoreType {
    Logit,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormStrategy {
    None,
    ZNorm,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub alpha: f64,
    pub reader_score_type: ReaderScoreType,
    pub norm_rank: NormStrategy,
    pub norm_reader: NormStrategy,
    pub final_k: usize,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            alpha: 0.5,
            reader_score_type: ReaderScoreType::Probability,
            norm_rank: NormStrategy::Floor,
            norm_reader: NormStrategy::None,
            final_k: 5,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(FusionError::InvalidAlpha(self.alpha));
        }
        if self.final_k == 0 {
            return Err(FusionError::InvalidFinalK);
        }
        Ok(())
    }
}

/// A fused answer. `y_reader` and `y_rank` are the normalized inputs that
/// produced `y`; `rank_in_list` is the 1-based rank of the source passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnswer {
    pub question_id: String,
    pub answer_text: String,
    pub y: f64,
    pub y_reader: f64,
    pub y_rank: f64,
    pub passage_id: String,
    pub rank_in_list: usize,
}

/// Resolution of z-scores. Rounding to a fixed grid absorbs the last-ulp
/// noise that a positive affine rescaling of the inputs introduces.
const ZNORM_GRID: f64 = 1e-9;

/// Order-preserving score normalization. ZNorm uses the population standard
/// deviation and maps constant input to zeros; Floor subtracts the minimum.
pub fn normalize(scores: &[f64], strategy: NormStrategy) -> Vec<f64> {
    match strategy {
        NormStrategy::None => scores.to_vec(),
        NormStrategy::Floor => {
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            scores.iter().map(|&x| x - min).collect()
        }
        NormStrategy::ZNorm => {
            if scores.is_empty() {
                return Vec::new();
            }
            if scores.iter().all(|&x| x == scores[0]) {
                return vec![0.0; scores.len()];
            }
            let n = scores.len() as f64;
            let mut mean = scores.iter().sum::<f64>() / n;
            mean += scores.iter().map(|&x| x - mean).sum::<f64>() / n;
            let var = scores.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            if std == 0.0 || !std.is_finite() {
                return vec![0.0; scores.len()];
            }
            scores
                .iter()
                .map(|&x| {
                    let z = ((x - mean) / std / ZNORM_GRID).round() * ZNORM_GRID;
                    // avoid emitting -0.0
                    z + 0.0
                })
                .collect()
        }
    }
}

fn answer_order(a: &ScoredAnswer, b: &ScoredAnswer) -> Ordering {
    b.y.total_cmp(&a.y)
        .then_with(|| a.passage_id.cmp(&b.passage_id))
        .then_with(|| a.answer_text.cmp(&b.answer_text))
}

/// Combines reader candidates with their passages' rank scores, then
/// deduplicates and keeps the best `final_k`.
pub fn fuse(
    candidates: &[SpanCandidate],
    ranks: &RankedList,
    params: &FusionParams,
    lang: Lang,
) -> Result<Vec<ScoredAnswer>, FusionError> {
    params.validate()?;
    let rank_scores: Vec<f64> = ranks.entries.iter().map(|e| e.score).collect();
    let rank_norm = normalize(&rank_scores, params.norm_rank);
    let passages: HashMap<&str, (usize, f64)> = ranks
        .entries
        .iter()
        .zip(&rank_norm)
        .enumerate()
        .map(|(i, (e, &s))| (e.passage_id.as_str(), (i + 1, s)))
        .collect();

    let mut sources = Vec::with_capacity(candidates.len());
    for c in candidates {
        let &(rank, y_rank) = passages
            .get(c.passage_id.as_str())
            .ok_or_else(|| FusionError::UnknownPassageInCandidates(c.passage_id.clone()))?;
        sources.push((rank, y_rank));
    }

    let raw_reader: Vec<f64> = candidates
        .iter()
        .map(|c| match params.reader_score_type {
            ReaderScoreType::Logit => c.logit,
            ReaderScoreType::Probability => c.probability,
        })
        .collect();
    let reader_norm = normalize(&raw_reader, params.norm_reader);

    let alpha = params.alpha;
    let fused: Vec<ScoredAnswer> = candidates
        .iter()
        .zip(sources)
        .zip(reader_norm)
        .map(|((c, (rank, y_rank)), y_reader)| ScoredAnswer {
            question_id: ranks.question_id.clone(),
            answer_text: c.answer_text.clone(),
            y: (1.0 - alpha) * y_reader + alpha * y_rank,
            y_reader,
            y_rank,
            passage_id: c.passage_id.clone(),
            rank_in_list: rank,
        })
        .collect();

    let mut out = aggregate(fused, lang);
    out.truncate(params.final_k);
    Ok(out)
}

/// Merges answers that normalize to the same string, keeping the highest-y
/// instance (surface form included), and sorts by y descending with ties
/// broken by `(passage_id, answer_text)`.
pub fn aggregate(fused: Vec<ScoredAnswer>, lang: Lang) -> Vec<ScoredAnswer> {
    let mut best: HashMap<String, ScoredAnswer> = HashMap::new();
    for answer in fused {
        let key = normalize_answer(&answer.answer_text, lang);
        match best.get_mut(&key) {
            Some(kept) if answer_order(&answer, kept) == Ordering::Less => *kept = answer,
            Some(_) => {}
            None => {
                best.insert(key, answer);
            }
        }
    }
    let mut out: Vec<ScoredAnswer> = best.into_values().collect();
    out.sort_by(answer_order);
    out
}
