//! The reader hub: a uniform span-extraction interface over a built-in
//! lexical reader and remote readers that speak the `/v1/read` protocol.

mod lexical;
pub mod protocol;
#[cfg(feature = "remote")]
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Span;

pub use lexical::{lexical_window_score, LexicalReader, CONTEXT_RADIUS, MAX_WINDOW_TOKENS};
#[cfg(feature = "remote")]
pub use remote::RemoteReader;

/// Model id that selects the built-in lexical reader.
pub const BUILTIN_LEXICAL_ID: &str = "builtin-lexical";
pub const DEFAULT_MAX_ANSWERS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReaderError {
    #[error("reader unavailable for question `{question_id}` ({} passages): {message}", passage_ids.len())]
    ReaderUnavailable {
        question_id: String,
        passage_ids: Vec<String>,
        message: String,
    },
    #[error("reader protocol error for question `{question_id}`{}: {message}", passage_id.as_ref().map(|p| format!(", passage `{p}`")).unwrap_or_default())]
    ReaderProtocolError {
        question_id: String,
        passage_id: Option<String>,
        message: String,
    },
    #[error("invalid reader spec: {0}")]
    InvalidSpec(String),
    #[error("no passages given for question `{0}`")]
    NoPassages(String),
}

/// An extracted answer. `char_span` holds byte offsets into the passage text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate {
    pub question_id: String,
    pub passage_id: String,
    pub answer_text: String,
    pub char_span: Span,
    pub logit: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReaderKind {
    BuiltinLexical,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReaderSpec {
    pub kind: ReaderKind,
    pub model_id: String,
    pub endpoint: Option<String>,
    pub max_answers_per_passage: usize,
}

impl ReaderSpec {
    pub fn builtin() -> Self {
        ReaderSpec {
            kind: ReaderKind::BuiltinLexical,
            model_id: BUILTIN_LEXICAL_ID.to_string(),
            endpoint: None,
            max_answers_per_passage: DEFAULT_MAX_ANSWERS,
        }
    }

    pub fn remote(model_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        ReaderSpec {
            kind: ReaderKind::Remote,
            model_id: model_id.into(),
            endpoint: Some(endpoint.into()),
            max_answers_per_passage: DEFAULT_MAX_ANSWERS,
        }
    }

    pub fn validate(&self) -> Result<(), ReaderError> {
        if self.max_answers_per_passage == 0 {
            return Err(ReaderError::InvalidSpec("max_answers_per_passage must be >= 1".into()));
        }
        if self.kind == ReaderKind::Remote && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(ReaderError::InvalidSpec(format!(
                "remote reader `{}` needs an endpoint",
                self.model_id
            )));
        }
        Ok(())
    }

    /// Stable identifier recorded in run manifests.
    pub fn identity(&self) -> String {
        match (&self.kind, &self.endpoint) {
            (ReaderKind::Remote, Some(ep)) => format!("remote:{}@{}", self.model_id, ep),
            _ => format!("{}:{}", BUILTIN_LEXICAL_ID, self.max_answers_per_passage),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PassageRef<'a> {
    pub passage_id: &'a str,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutput {
    /// Whether logits are comparable across the passages of this request.
    pub globally_normalized: bool,
    pub candidates: Vec<SpanCandidate>,
}

pub trait Reader: Send + Sync {
    fn identity(&self) -> String;

    fn read(
        &self,
        question_id: &str,
        question: &str,
        passages: &[PassageRef<'_>],
    ) -> Result<ReadOutput, ReaderError>;
}

/// Builds the reader a spec describes.
pub fn reader_for(spec: &ReaderSpec) -> Result<Box<dyn Reader>, ReaderError> {
    spec.validate()?;
    match spec.kind {
        ReaderKind::BuiltinLexical => Ok(Box::new(LexicalReader::new(spec.max_answers_per_passage))),
        #[cfg(feature = "remote")]
        ReaderKind::Remote => Ok(Box::new(RemoteReader::new(spec, 4)?)),
        #[cfg(not(feature = "remote"))]
        ReaderKind::Remote => Err(ReaderError::InvalidSpec(
            "remote readers are not available in this build".into(),
        )),
    }
}

/// One-shot read through the reader a spec describes.
pub fn read(
    spec: &ReaderSpec,
    question_id: &str,
    question: &str,
    passages: &[PassageRef<'_>],
) -> Result<Vec<SpanCandidate>, ReaderError> {
    Ok(reader_for(spec)?.read(question_id, question, passages)?.candidates)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
