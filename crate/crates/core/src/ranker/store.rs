//! A persisted index is a snapshot directory plus `bm25.json` holding the
//! parameters; postings are rebuilt on load.

use std::fs;
use std::path::Path;

use super::{Bm25Params, InvertedIndex, RankerError};
use crate::corpus::store::{load_snapshot, save_snapshot};
use crate::corpus::{CorpusError, CorpusSnapshot};

pub const PARAMS_FILE: &str = "bm25.json";

pub fn save_index(snapshot: &CorpusSnapshot, params: Bm25Params, dir: &Path) -> Result<(), RankerError> {
    params.validate()?;
    save_snapshot(snapshot, dir)?;
    let raw = serde_json::to_string_pretty(&params).map_err(|e| CorpusError::Store(e.to_string()))?;
    fs::write(dir.join(PARAMS_FILE), raw)?;
    Ok(())
}

/// Loads the snapshot at `dir` and rebuilds its index. Missing parameters
/// fall back to the defaults.
pub fn load_index(dir: &Path) -> Result<InvertedIndex, RankerError> {
    let snapshot = load_snapshot(dir)?;
    let path = dir.join(PARAMS_FILE);
    let params = if path.exists() {
        serde_json::from_str(&fs::read_to_string(&path)?)
            .map_err(|e| CorpusError::Store(format!("{PARAMS_FILE}: {e}")))?
    } else {
        Bm25Params::default()
    };
    InvertedIndex::build(&snapshot, params)
}
