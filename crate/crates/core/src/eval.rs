//! Answer normalization and the QA metrics: EM, F1, Recall@K, oracle EM@K
//! and MRR, aggregated into a [`MetricsReport`].

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fusion::ScoredAnswer;
use crate::ranker::RankedList;
use crate::text::Lang;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("duplicate question id `{0}`")]
    DuplicateQuestionId(String),
    #[error("no ranking for question `{0}`")]
    MissingRanking(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub question_id: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub lang: Lang,
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// SQuAD-style normalization for English (lowercase, drop punctuation, drop
/// `a`/`an`/`the`, collapse whitespace); punctuation and whitespace removal
/// only for Chinese.
pub fn normalize_answer(text: &str, lang: Lang) -> String {
    match lang {
        Lang::En => {
            let lowered = text.to_lowercase();
            let stripped: String = lowered.chars().filter(|&c| !is_punct(c)).collect();
            stripped
                .split_whitespace()
                .filter(|w| !matches!(*w, "a" | "an" | "the"))
                .collect::<Vec<_>>()
                .join(" ")
        }
        Lang::Zh => text.chars().filter(|&c| !is_punct(c) && !c.is_whitespace()).collect(),
    }
}

fn metric_tokens(normalized: &str, lang: Lang) -> Vec<String> {
    match lang {
        Lang::En => normalized.split_whitespace().map(str::to_string).collect(),
        Lang::Zh => normalized.chars().map(String::from).collect(),
    }
}

/// 1.0 when the normalized prediction equals some normalized gold.
pub fn exact_match(pred: &str, golds: &[String], lang: Lang) -> f64 {
    let p = normalize_answer(pred, lang);
    if golds.iter().any(|g| normalize_answer(g, lang) == p) {
        1.0
    } else {
        0.0
    }
}

fn token_f1(pred: &str, gold: &str, lang: Lang) -> f64 {
    let p = metric_tokens(&normalize_answer(pred, lang), lang);
    let g = metric_tokens(&normalize_answer(gold, lang), lang);
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-overlap F1 over the gold answers, with the gold that achieved it.
fn best_f1<'a>(pred: &str, golds: &'a [String], lang: Lang) -> (f64, Option<&'a String>) {
    let mut best = (0.0, None);
    for g in golds {
        let v = token_f1(pred, g, lang);
        if best.1.is_none() || v > best.0 {
            best = (v, Some(g));
        }
    }
    best
}

pub fn f1(pred: &str, golds: &[String], lang: Lang) -> f64 {
    best_f1(pred, golds, lang).0
}

fn normalized_golds(golds: &[String], lang: Lang) -> Vec<String> {
    golds
        .iter()
        .map(|g| normalize_answer(g, lang))
        .filter(|g| !g.is_empty())
        .collect()
}

/// 1-based rank of the first passage whose normalized text contains a
/// normalized gold answer.
pub fn first_hit_rank(ranked: &RankedList, golds: &[String], lang: Lang) -> Option<usize> {
    let golds = normalized_golds(golds, lang);
    ranked.entries.iter().position(|e| {
        let text = normalize_answer(&e.text, lang);
        golds.iter().any(|g| text.contains(g.as_str()))
    })
    .map(|i| i + 1)
}

pub fn recall_at_k(ranked: &RankedList, golds: &[String], k: usize, lang: Lang) -> f64 {
    match first_hit_rank(ranked, golds, lang) {
        Some(r) if r <= k => 1.0,
        _ => 0.0,
    }
}

pub fn mrr(ranked: &RankedList, golds: &[String], lang: Lang) -> f64 {
    first_hit_rank(ranked, golds, lang).map_or(0.0, |r| 1.0 / r as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDiagnostics {
    pub question_id: String,
    pub prediction: Option<String>,
    pub em: f64,
    pub f1: f64,
    pub matched_gold: Option<String>,
    pub first_hit_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub em: f64,
    pub f1: f64,
    pub recall_at_k: BTreeMap<usize, f64>,
    pub oracle_em_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_questions: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_question: Vec<QuestionDiagnostics>,
}

impl MetricsReport {
    /// Pretty JSON; diagnostics are included only when `verbose`.
    pub fn to_json(&self, verbose: bool) -> String {
        let mut out = if verbose {
            serde_json::to_string_pretty(self)
        } else {
            serde_json::to_string_pretty(&MetricsReport {
                per_question: Vec::new(),
                ..self.clone()
            })
        }
        .expect("report serialization is infallible");
        out.push('\n');
        out
    }

    /// SHA-256 of the verbose JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json(true).as_bytes()))
    }
}

/// Scores a run. EM/F1 use the top-1 prediction; a missing or empty
/// prediction list scores zero. `oracle_em_at_k` is the mean Recall@K: the EM
/// an infallible extractive reader would reach on the top-K passages.
pub fn evaluate(
    examples: &[QAExample],
    rankings: &BTreeMap<String, RankedList>,
    predictions: &BTreeMap<String, Vec<ScoredAnswer>>,
    ks: &[usize],
) -> Result<MetricsReport, EvalError> {
    let mut seen = HashSet::new();
    for ex in examples {
        if !seen.insert(ex.question_id.as_str()) {
            return Err(EvalError::DuplicateQuestionId(ex.question_id.clone()));
        }
        if !rankings.contains_key(&ex.question_id) {
            return Err(EvalError::MissingRanking(ex.question_id.clone()));
        }
    }
    let mut ks: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1).collect();
    ks.sort_unstable();
    ks.dedup();

    let mut em_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut mrr_sum = 0.0;
    let mut hits_at: Vec<f64> = vec![0.0; ks.len()];
    let mut per_question = Vec::with_capacity(examples.len());

    for ex in examples {
        let ranking = &rankings[&ex.question_id];
        let prediction = predictions
            .get(&ex.question_id)
            .and_then(|answers| answers.first())
            .map(|a| a.answer_text.clone());
        let (em, f1, matched) = match &prediction {
            Some(p) => {
                let (f1, gold) = best_f1(p, &ex.gold_answers, ex.lang);
                let em = exact_match(p, &ex.gold_answers, ex.lang);
                (em, f1, gold.cloned())
            }
            None => (0.0, 0.0, None),
        };
        let first_hit = first_hit_rank(ranking, &ex.gold_answers, ex.lang);
        for (slot, &k) in hits_at.iter_mut().zip(&ks) {
            if first_hit.is_some_and(|r| r <= k) {
                *slot += 1.0;
            }
        }
        em_sum += em;
        f1_sum += f1;
        mrr_sum += first_hit.map_or(0.0, |r| 1.0 / r as f64);
        per_question.push(QuestionDiagnostics {
            question_id: ex.question_id.clone(),
            prediction,
            em,
            f1,
            matched_gold: matched,
            first_hit_rank: first_hit,
        });
    }

    let n = examples.len();
    let mean = |s: f64| if n == 0 { 0.0 } else { s / n as f64 };
    let recall_at_k: BTreeMap<usize, f64> = ks.iter().zip(&hits_at).map(|(&k, &h)| (k, mean(h))).collect();
    Ok(MetricsReport {
        em: mean(em_sum),
        f1: mean(f1_sum),
        oracle_em_at_k: recall_at_k.clone(),
        recall_at_k,
        mrr: mean(mrr_sum),
        n_questions: n,
        per_question,
    })
}
