//! Reader wire protocol (`POST /v1/read`) and the error envelope shared with
//! the ranking API.
//!
//! Offsets on the wire are character (Unicode scalar) offsets into the
//! passage text as sent; in-process spans are byte offsets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{PassageRef, ReaderError, SpanCandidate};
use crate::text::Span;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePassage {
    pub passage_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub question_id: String,
    pub question: String,
    pub passages: Vec<WirePassage>,
    pub max_answers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub passage_id: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub logit: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadReply {
    pub globally_normalized: bool,
    pub candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// `{"error": {"code", "message"}}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

impl ErrorEnvelope {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        ErrorEnvelope {
            error: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }
}

impl ReadRequest {
    pub fn new(question_id: &str, question: &str, passages: &[PassageRef<'_>], max_answers: usize) -> Self {
        ReadRequest {
            question_id: question_id.to_string(),
            question: question.to_string(),
            passages: passages
                .iter()
                .map(|p| WirePassage {
                    passage_id: p.passage_id.to_string(),
                    text: p.text.to_string(),
                })
                .collect(),
            max_answers,
        }
    }
}

/// Byte offset of character index `char_idx`, or `None` past the end.
fn byte_offset(text: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (i, _) in text.char_indices() {
        if count == char_idx {
            return Some(i);
        }
        count += 1;
    }
    (count == char_idx).then_some(text.len())
}

/// Character offset of a byte offset that lies on a char boundary.
pub fn char_offset(text: &str, byte_idx: usize) -> usize {
    text[..byte_idx].chars().count()
}

/// Converts an in-process candidate to its wire form.
pub fn to_wire(candidate: &SpanCandidate, passage_text: &str) -> WireCandidate {
    WireCandidate {
        passage_id: candidate.passage_id.clone(),
        text: candidate.answer_text.clone(),
        start: char_offset(passage_text, candidate.char_span.start),
        end: char_offset(passage_text, candidate.char_span.end),
        logit: candidate.logit,
        prob: candidate.probability,
    }
}

/// Validates a reply against the request that produced it and converts it to
/// candidates. Every rejected reply yields a typed protocol error; nothing is
/// dropped silently.
pub fn candidates_from_reply(request: &ReadRequest, reply: ReadReply) -> Result<Vec<SpanCandidate>, ReaderError> {
    let qid = &request.question_id;
    let err = |pid: Option<&str>, message: String| ReaderError::ReaderProtocolError {
        question_id: qid.clone(),
        passage_id: pid.map(str::to_string),
        message,
    };
    let texts: HashMap<&str, &str> = request
        .passages
        .iter()
        .map(|p| (p.passage_id.as_str(), p.text.as_str()))
        .collect();

    let mut per_passage: HashMap<&str, Vec<(f64, f64)>> = HashMap::new();
    let mut out = Vec::with_capacity(reply.candidates.len());
    for c in &reply.candidates {
        let pid = c.passage_id.as_str();
        let text = *texts
            .get(pid)
            .ok_or_else(|| err(Some(pid), "candidate for a passage that was not sent".into()))?;
        if !c.logit.is_finite() {
            return Err(err(Some(pid), format!("non-finite logit {}", c.logit)));
        }
        if !(0.0..=1.0).contains(&c.prob) {
            return Err(err(Some(pid), format!("probability {} outside [0, 1]", c.prob)));
        }
        if c.start > c.end {
            return Err(err(Some(pid), format!("start {} > end {}", c.start, c.end)));
        }
        let (Some(bs), Some(be)) = (byte_offset(text, c.start), byte_offset(text, c.end)) else {
            return Err(err(Some(pid), format!("span [{}, {}) exceeds passage length", c.start, c.end)));
        };
        if text[bs..be] != *c.text {
            return Err(err(
                Some(pid),
                format!("span [{}, {}) is `{}`, reply says `{}`", c.start, c.end, &text[bs..be], c.text),
            ));
        }
        per_passage.entry(pid).or_default().push((c.logit, c.prob));
        out.push(SpanCandidate {
            question_id: qid.clone(),
            passage_id: c.passage_id.clone(),
            answer_text: c.text.clone(),
            char_span: Span::new(bs, be),
            logit: c.logit,
            probability: c.prob,
        });
    }
    for (pid, mut scores) in per_passage {
        if scores.len() > request.max_answers {
            return Err(err(
                Some(pid),
                format!("{} candidates, max_answers is {}", scores.len(), request.max_answers),
            ));
        }
        scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        for w in scores.windows(2) {
            let coherent = if w[0].0 == w[1].0 {
                (w[0].1 - w[1].1).abs() <= 1e-9
            } else {
                w[0].1 >= w[1].1
            };
            if !coherent {
                return Err(err(Some(pid), "probability order disagrees with logit order".into()));
            }
        }
    }
    Ok(out)
}
