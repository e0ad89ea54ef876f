//! Where a run gets its index, cache and reader from.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::RunError;
use crate::ranker::store::load_index;
use crate::ranker::{read_cache, InvertedIndex, RankingCache};
use crate::reader::{reader_for, Reader, ReaderSpec};

pub const DATA_DIR_ENV: &str = "SFQA_DATA_DIR";
pub const READER_ENDPOINT_ENV: &str = "SFQA_READER_ENDPOINT";

pub trait Resources: Sync {
    fn load_index(&self, snapshot_id: &str) -> Result<Arc<InvertedIndex>, RunError>;
    fn load_cache(&self, path: &str) -> Result<Arc<RankingCache>, RunError>;

    fn reader(&self, spec: &ReaderSpec) -> Result<Arc<dyn Reader>, RunError> {
        Ok(Arc::from(reader_for(spec)?))
    }
}

/// Snapshots live under `<root>/snapshots/<snapshot_id>/`; relative cache
/// paths resolve against `<root>`.
#[derive(Debug, Clone)]
pub struct DirResources {
    root: PathBuf,
}

impl DirResources {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirResources { root: root.into() }
    }

    /// `$SFQA_DATA_DIR`, or the working directory when unset.
    pub fn from_env() -> Self {
        let root = std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        DirResources::new(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn snapshot_dir(&self, snapshot_id: &str) -> PathBuf {
        self.root.join("snapshots").join(snapshot_id)
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

impl Resources for DirResources {
    fn load_index(&self, snapshot_id: &str) -> Result<Arc<InvertedIndex>, RunError> {
        let dir = self.snapshot_dir(snapshot_id);
        if !dir.exists() {
            return Err(RunError::Resource(format!(
                "no index `{snapshot_id}` under {}",
                dir.display()
            )));
        }
        Ok(Arc::new(load_index(&dir)?))
    }

    fn load_cache(&self, path: &str) -> Result<Arc<RankingCache>, RunError> {
        let path = self.resolve(path);
        let file = File::open(&path).map_err(|e| RunError::Resource(format!("{}: {e}", path.display())))?;
        Ok(Arc::new(read_cache(BufReader::new(file))?))
    }
}

/// In-process resources, keyed by snapshot id and cache path.
#[derive(Default, Clone)]
pub struct MemoryResources {
    indexes: HashMap<String, Arc<InvertedIndex>>,
    caches: HashMap<String, Arc<RankingCache>>,
    reader: Option<Arc<dyn Reader>>,
}

impl MemoryResources {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_index(mut self, index: InvertedIndex) -> Self {
        self.indexes.insert(index.snapshot_id().to_string(), Arc::new(index));
        self
    }

    pub fn with_shared_index(mut self, index: Arc<InvertedIndex>) -> Self {
        self.indexes.insert(index.snapshot_id().to_string(), index);
        self
    }

    pub fn with_cache(mut self, path: impl Into<String>, cache: RankingCache) -> Self {
        self.caches.insert(path.into(), Arc::new(cache));
        self
    }

    /// Serves `reader` regardless of the configured spec.
    pub fn with_reader(mut self, reader: Arc<dyn Reader>) -> Self {
        self.reader = Some(reader);
        self
    }
}

impl Resources for MemoryResources {
    fn load_index(&self, snapshot_id: &str) -> Result<Arc<InvertedIndex>, RunError> {
        self.indexes
            .get(snapshot_id)
            .cloned()
            .ok_or_else(|| RunError::Resource(format!("no index `{snapshot_id}`")))
    }

    fn load_cache(&self, path: &str) -> Result<Arc<RankingCache>, RunError> {
        self.caches
            .get(path)
            .cloned()
            .ok_or_else(|| RunError::Resource(format!("no cache at `{path}`")))
    }

    fn reader(&self, spec: &ReaderSpec) -> Result<Arc<dyn Reader>, RunError> {
        match &self.reader {
            Some(r) => Ok(r.clone()),
            None => Ok(Arc::from(reader_for(spec)?)),
        }
    }
}
