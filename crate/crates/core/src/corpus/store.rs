//! On-disk snapshot layout:
//!
//! ```text
//! <dir>/manifest.json   snapshot_id, lang, version_tag, strategy, checksum, counts
//! <dir>/passages.jsonl  one Passage per line, in snapshot order
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::snapshot::passage_checksum;
use super::{CorpusError, CorpusSnapshot, Passage, SplitStrategy};
use crate::text::Lang;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PASSAGES_FILE: &str = "passages.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub snapshot_id: String,
    pub lang: Lang,
    pub version_tag: String,
    pub strategy: SplitStrategy,
    pub checksum: String,
    pub document_count: usize,
    pub passage_count: usize,
}

impl SnapshotManifest {
    pub fn of(snapshot: &CorpusSnapshot) -> Self {
        SnapshotManifest {
            snapshot_id: snapshot.snapshot_id().to_string(),
            lang: snapshot.lang(),
            version_tag: snapshot.version_tag().to_string(),
            strategy: *snapshot.strategy(),
            checksum: snapshot.checksum().to_string(),
            document_count: snapshot.document_count(),
            passage_count: snapshot.passages().len(),
        }
    }
}

pub fn save_snapshot(snapshot: &CorpusSnapshot, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join(PASSAGES_FILE))?);
    for p in snapshot.passages() {
        serde_json::to_writer(&mut out, p).map_err(|e| CorpusError::Store(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let manifest = serde_json::to_string_pretty(&SnapshotManifest::of(snapshot))
        .map_err(|e| CorpusError::Store(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<SnapshotManifest, CorpusError> {
    let raw = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&raw).map_err(|e| CorpusError::Store(format!("{MANIFEST_FILE}: {e}")))
}

/// Loads a snapshot and re-verifies its checksum and counts against the manifest.
pub fn load_snapshot(dir: &Path) -> Result<CorpusSnapshot, CorpusError> {
    let manifest = read_manifest(dir)?;
    let reader = BufReader::new(File::open(dir.join(PASSAGES_FILE))?);
    let mut passages = Vec::with_capacity(manifest.passage_count);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let p: Passage = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Store(format!("{PASSAGES_FILE} line {}: {e}", i + 1)))?;
        passages.push(p);
    }
    if passages.len() != manifest.passage_count {
        return Err(CorpusError::Store(format!(
            "manifest lists {} passages, store holds {}",
            manifest.passage_count,
            passages.len()
        )));
    }
    let actual = passage_checksum(&passages);
    if actual != manifest.checksum {
        return Err(CorpusError::ChecksumMismatch {
            expected: manifest.checksum,
            actual,
        });
    }
    Ok(CorpusSnapshot::seal(
        manifest.snapshot_id,
        manifest.lang,
        manifest.version_tag,
        manifest.strategy,
        manifest.document_count,
        passages,
    ))
}
