//! BM25 retrieval over corpus snapshots, ranked lists, the ranking cache
//! wire format and reranking.

mod cache;
mod index;
mod rerank;
pub mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{read_cache, write_cache, RankingCache};
pub use index::{Bm25Params, InvertedIndex, Posting};
pub use rerank::rerank;

#[derive(Debug, Error)]
pub enum RankerError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
    #[error("unknown passage `{0}`")]
    UnknownPassage(String),
    #[error("malformed cache entry for question `{question_id}`: {message}")]
    MalformedCache { question_id: String, message: String },
    #[error("ranked list for `{question_id}` has {len} entries, cache depth is {depth}")]
    DepthExceeded {
        question_id: String,
        len: usize,
        depth: usize,
    },
    #[error("scorer failed on passage `{passage_id}`: {message}")]
    ScorerFailure { passage_id: String, message: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub passage_id: String,
    pub score: f64,
    pub text: String,
}

/// Top-k passages for one question, sorted by score descending with ties
/// broken by ascending `passage_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub question_id: String,
    pub entries: Vec<RankedEntry>,
    pub k: usize,
}

impl RankedList {
    pub fn new(question_id: impl Into<String>, k: usize) -> Self {
        RankedList {
            question_id: question_id.into(),
            entries: Vec::new(),
            k,
        }
    }

    /// Keeps the first `k` entries.
    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList {
            question_id: self.question_id.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
            k,
        }
    }

    pub fn position(&self, passage_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.passage_id == passage_id)
    }

    pub fn is_sorted(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) != std::cmp::Ordering::Greater)
    }
}

/// Score descending, then passage_id ascending.
pub(crate) fn rank_order(a: &RankedEntry, b: &RankedEntry) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.passage_id.cmp(&b.passage_id))
}
