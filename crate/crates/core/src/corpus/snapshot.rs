use std::collections::HashSet;
use std::io::BufRead;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{split_document, CorpusError, Document, Passage, SplitStrategy};
use crate::text::Lang;

/// A sealed, checksummed corpus build. There are no mutators: a snapshot is
/// produced by [`build_snapshot`] or loaded (and re-verified) from a store.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSnapshot {
    snapshot_id: String,
    lang: Lang,
    version_tag: String,
    strategy: SplitStrategy,
    document_count: usize,
    passages: Vec<Passage>,
    checksum: String,
}

impl CorpusSnapshot {
    pub(crate) fn seal(
        snapshot_id: String,
        lang: Lang,
        version_tag: String,
        strategy: SplitStrategy,
        document_count: usize,
        passages: Vec<Passage>,
    ) -> Self {
        let checksum = passage_checksum(&passages);
        CorpusSnapshot {
            snapshot_id,
            lang,
            version_tag,
            strategy,
            document_count,
            passages,
            checksum,
        }
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }

    pub fn strategy(&self) -> &SplitStrategy {
        &self.strategy
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

/// SHA-256 over `(len, passage_id, len, text)` for every passage in order.
pub(crate) fn passage_checksum(passages: &[Passage]) -> String {
    let mut hasher = Sha256::new();
    for p in passages {
        hasher.update((p.passage_id.len() as u64).to_le_bytes());
        hasher.update(p.passage_id.as_bytes());
        hasher.update((p.text.len() as u64).to_le_bytes());
        hasher.update(p.text.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Splits every document and seals the result. The snapshot language is the
/// language of the first document; every other document must match it.
pub fn build_snapshot<I>(
    docs: I,
    strategy: SplitStrategy,
    snapshot_id: impl Into<String>,
    version_tag: impl Into<String>,
) -> Result<CorpusSnapshot, CorpusError>
where
    I: IntoIterator<Item = Document>,
{
    strategy.validate()?;
    let mut seen = HashSet::new();
    let mut lang = None;
    let mut passages = Vec::new();
    let mut document_count = 0;
    for doc in docs {
        if doc.doc_id.is_empty() {
            return Err(CorpusError::InvalidDocument {
                doc_id: doc.doc_id,
                reason: "empty doc_id".into(),
            });
        }
        if doc.text.is_empty() {
            return Err(CorpusError::InvalidDocument {
                doc_id: doc.doc_id,
                reason: "empty text".into(),
            });
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId(doc.doc_id));
        }
        let expected = *lang.get_or_insert(doc.lang);
        if doc.lang != expected {
            return Err(CorpusError::LanguageMismatch {
                doc_id: doc.doc_id,
                expected,
                found: doc.lang,
            });
        }
        passages.extend(split_document(&doc, &strategy)?);
        document_count += 1;
    }
    let lang = lang.ok_or(CorpusError::EmptyCorpus)?;
    if passages.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(CorpusSnapshot::seal(
        snapshot_id.into(),
        lang,
        version_tag.into(),
        strategy,
        document_count,
        passages,
    ))
}

/// Reads newline-delimited JSON documents (`id`, `title`, `text`, `lang`).
/// Blank lines are skipped.
pub fn read_documents<R: BufRead>(reader: R) -> impl Iterator<Item = Result<Document, CorpusError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(CorpusError::Io(e))),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        }))
    })
}
