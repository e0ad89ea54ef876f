use std::collections::HashSet;

use super::{softmax, PassageRef, ReadOutput, Reader, ReaderError, SpanCandidate};
use crate::text::{analyze, Span, Term};

/// Longest candidate window, in analyzer tokens.
pub const MAX_WINDOW_TOKENS: usize = 8;
/// Tokens on each side of a window that count as its context.
pub const CONTEXT_RADIUS: usize = 10;

/// Deterministic stand-in reader. Every token window of 1..=8 tokens that
/// does not itself repeat a question term is scored by the fraction of
/// distinct question terms found within 10 tokens on either side of it.
/// Ties prefer shorter windows, then windows closer to the matched terms,
/// then earlier ones.
#[derive(Debug, Clone)]
pub struct LexicalReader {
    max_answers: usize,
}

impl LexicalReader {
    pub fn new(max_answers_per_passage: usize) -> Self {
        LexicalReader {
            max_answers: max_answers_per_passage.max(1),
        }
    }

    fn read_passage(&self, question_id: &str, question: &HashSet<String>, passage: PassageRef<'_>) -> Vec<SpanCandidate> {
        let terms = analyze(passage.text);
        let mut scored: Vec<WindowScore> = Vec::new();
        for start in 0..terms.len() {
            for end in start + 1..=(start + MAX_WINDOW_TOKENS).min(terms.len()) {
                if question.contains(&terms[end - 1].text) {
                    // this and every longer window from `start` repeat the question
                    break;
                }
                if let Some(w) = score_window(question, &terms, start, end) {
                    scored.push(w);
                }
            }
        }
        scored.sort_by(|a, b| {
            b.overlap
                .cmp(&a.overlap)
                .then((a.end - a.start).cmp(&(b.end - b.start)))
                .then(a.proximity.cmp(&b.proximity))
                .then(a.start.cmp(&b.start))
        });
        scored.truncate(self.max_answers);

        let logits: Vec<f64> = scored
            .iter()
            .map(|w| w.overlap as f64 / question.len() as f64)
            .collect();
        let probs = softmax(&logits);
        scored
            .iter()
            .zip(logits.iter().zip(probs))
            .map(|(w, (&logit, probability))| {
                let span = Span::new(terms[w.start].span.start, terms[w.end - 1].span.end);
                SpanCandidate {
                    question_id: question_id.to_string(),
                    passage_id: passage.passage_id.to_string(),
                    answer_text: span.slice(passage.text).to_string(),
                    char_span: span,
                    logit,
                    probability,
                }
            })
            .collect()
    }
}

struct WindowScore {
    start: usize,
    end: usize,
    overlap: usize,
    proximity: usize,
}

fn context_range(len: usize, start: usize, end: usize) -> impl Iterator<Item = usize> {
    (start.saturating_sub(CONTEXT_RADIUS)..start).chain(end..(end + CONTEXT_RADIUS).min(len))
}

fn score_window(question: &HashSet<String>, terms: &[Term], start: usize, end: usize) -> Option<WindowScore> {
    let mut matched: Vec<(&str, usize)> = Vec::new();
    for j in context_range(terms.len(), start, end) {
        if question.contains(&terms[j].text) {
            let dist = if j < start { start - j } else { j + 1 - end };
            match matched.iter_mut().find(|(t, _)| *t == terms[j].text) {
                Some(m) => m.1 = m.1.min(dist),
                None => matched.push((&terms[j].text, dist)),
            }
        }
    }
    if matched.is_empty() {
        return None;
    }
    Some(WindowScore {
        start,
        end,
        overlap: matched.len(),
        proximity: matched.iter().map(|m| m.1).sum(),
    })
}

fn question_terms(question: &str) -> HashSet<String> {
    analyze(question).into_iter().map(|t| t.text).collect()
}

/// `|question terms ∩ context terms| / |question terms|` for the token
/// window `[start, end)` of `passage`, where context is the 10 tokens on
/// each side of the window. Zero for an empty question.
pub fn lexical_window_score(question: &str, passage: &str, window: (usize, usize)) -> f64 {
    let q = question_terms(question);
    if q.is_empty() {
        return 0.0;
    }
    let terms = analyze(passage);
    let (start, end) = window;
    assert!(start < end && end <= terms.len(), "window out of bounds");
    score_window(&q, &terms, start, end).map_or(0.0, |w| w.overlap as f64 / q.len() as f64)
}

impl Reader for LexicalReader {
    fn identity(&self) -> String {
        format!("{}:{}", super::BUILTIN_LEXICAL_ID, self.max_answers)
    }

    fn read(&self, question_id: &str, question: &str, passages: &[PassageRef<'_>]) -> Result<ReadOutput, ReaderError> {
        if passages.is_empty() {
            return Err(ReaderError::NoPassages(question_id.to_string()));
        }
        let q = question_terms(question);
        let candidates = if q.is_empty() {
            Vec::new()
        } else {
            passages
                .iter()
                .flat_map(|&p| self.read_passage(question_id, &q, p))
                .collect()
        };
        Ok(ReadOutput {
            globally_normalized: false,
            candidates,
        })
    }
}
