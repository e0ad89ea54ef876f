//! Ranker–reader open-domain question answering: corpus snapshots, BM25
//! ranking, span readers, score fusion and evaluation.

pub mod corpus;
pub mod eval;
pub mod fusion;
pub mod pipeline;
pub mod ranker;
pub mod reader;
pub mod text;
