//! Document ingestion, passage splitting and versioned corpus snapshots.

mod segment;
mod snapshot;
mod split;
pub mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{Lang, Span};

pub use segment::segment_sentences;
pub use snapshot::{build_snapshot, read_documents, CorpusSnapshot};
pub use split::split_document;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid split strategy: {0}")]
    InvalidStrategy(String),
    #[error("duplicate doc_id `{0}`")]
    DuplicateDocId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid document `{doc_id}`: {reason}")]
    InvalidDocument { doc_id: String, reason: String },
    #[error("document `{doc_id}` is `{found}` but the snapshot is `{expected}`")]
    LanguageMismatch {
        doc_id: String,
        expected: Lang,
        found: Lang,
    },
    #[error("malformed corpus record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("snapshot checksum mismatch: manifest says {expected}, passages hash to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("snapshot store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A source document. On the wire (newline-delimited JSON) the id field is `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    pub lang: Lang,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, lang: Lang) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: String::new(),
            text: text.into(),
            lang,
        }
    }
}

/// One retrievable unit. `char_span` holds byte offsets into the parent
/// document's text, so `&doc.text[span.start..span.end] == text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub doc_id: String,
    pub text: String,
    pub char_span: Span,
    pub ordinal: usize,
}

pub fn passage_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}#{ordinal}")
}

/// How documents are cut into passages. Sizes count whitespace tokens for
/// English and characters for Chinese.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitStrategy {
    Sentence,
    Paragraph,
    Chunk { chunk_size: usize, stride: usize },
    Context { max_tokens: usize },
}

impl SplitStrategy {
    /// 100-token windows advancing by 50.
    pub const CHUNK_100_50: SplitStrategy = SplitStrategy::Chunk {
        chunk_size: 100,
        stride: 50,
    };
    /// Whole sentences packed up to 150 tokens.
    pub const CONTEXT_150: SplitStrategy = SplitStrategy::Context { max_tokens: 150 };

    pub fn validate(&self) -> Result<(), CorpusError> {
        match *self {
            SplitStrategy::Chunk { chunk_size, stride } => {
                if chunk_size == 0 {
                    return Err(CorpusError::InvalidStrategy("chunk_size must be > 0".into()));
                }
                if stride == 0 || stride > chunk_size {
                    return Err(CorpusError::InvalidStrategy(format!(
                        "stride must satisfy 0 < stride <= chunk_size ({chunk_size}), got {stride}"
                    )));
                }
            }
            SplitStrategy::Context { max_tokens } if max_tokens == 0 => {
                return Err(CorpusError::InvalidStrategy("max_tokens must be > 0".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplitStrategy::Sentence => "sentence",
            SplitStrategy::Paragraph => "paragraph",
            SplitStrategy::Chunk { .. } => "chunk",
            SplitStrategy::Context { .. } => "context",
        }
    }
}
