//! Configured end-to-end runs: rank, read, fuse, evaluate.

pub mod config;
pub mod dataset;
pub mod resources;
mod run;

use thiserror::Error;

use crate::eval::EvalError;
use crate::fusion::FusionError;
use crate::ranker::RankerError;
use crate::reader::ReaderError;

pub use config::{load_config, ConfigError, PipelineConfig};
pub use dataset::{read_dataset, read_questions, write_dataset, DatasetError};
pub use resources::{DirResources, MemoryResources, Resources, DATA_DIR_ENV, READER_ENDPOINT_ENV};
pub use run::{
    build_cache, dataset_digest, report_ks, run, RunManifest, RunOptions, RunOutput, StageCounters, StageCounts,
    BM25_RANKER, REPORT_KS,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("dataset has no questions")]
    EmptyDataset,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("ranking cache has no entry for question `{0}`")]
    CacheMiss(String),
    #[error("ranking cache for question `{question_id}` holds depth {depth}, shallower than top_k")]
    CacheTooShallow { question_id: String, depth: usize },
    #[error("live ranking supports only `bm25`, not `{0}`; use a ranking cache")]
    UnsupportedRanker(String),
    #[error(transparent)]
    Reader(#[from] ReaderError),
    #[error(transparent)]
    Ranker(#[from] RankerError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Resource(String),
    #[error("run aborted after {completed} of {total} questions: {source}")]
    Aborted {
        completed: usize,
        total: usize,
        #[source]
        source: Box<RunError>,
    },
}
