//! `odqa`: build indexes, rank question sets into caches, serve the ranking
//! API, execute pipeline configs and score predictions.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odqa_core::pipeline::{DATA_DIR_ENV, READER_ENDPOINT_ENV};

#[derive(Debug, Parser)]
#[command(name = "odqa", version, about = "Ranker-reader open-domain QA pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a corpus snapshot and its BM25 index from newline-delimited documents.
    Index(IndexArgs),
    /// Rank a question file against an index and write a ranking cache.
    Rank(RankArgs),
    /// Serve the ranking API over every index in the data directory.
    Serve(ServeArgs),
    /// Execute a pipeline config end to end and write report, manifest and predictions.
    Run(RunArgs),
    /// Score a predictions file against a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct DataDir {
    /// Root holding `snapshots/<id>/`; relative cache paths resolve against it.
    #[arg(long, env = DATA_DIR_ENV, default_value = ".")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Strategy {
    Sentence,
    Paragraph,
    Chunk,
    Context,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Documents, one JSON object per line: {"id", "title", "text", "lang"}.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub snapshot_id: String,
    #[arg(long, default_value = "v1")]
    pub version_tag: String,
    #[arg(long, value_enum, default_value = "chunk")]
    pub strategy: Strategy,
    /// Tokens per chunk (chunk strategy).
    #[arg(long, default_value_t = 100)]
    pub chunk_size: usize,
    /// Tokens between chunk starts (chunk strategy).
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
    /// Token budget per passage (context strategy).
    #[arg(long, default_value_t = 150)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 0.9)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.4)]
    pub b: f64,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Questions, one JSON object per line with `id` and `question`.
    #[arg(long)]
    pub questions: PathBuf,
    /// Snapshot id of the index.
    #[arg(long)]
    pub index: String,
    #[arg(long, default_value_t = 50)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: std::net::SocketAddr,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// QA records, one JSON object per line: {"id", "question", "answers", "lang"}.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where report.json, manifest.json and predictions.json are written.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Include per-question diagnostics in the report.
    #[arg(long)]
    pub verbose: bool,
    /// Remote reader endpoint; overrides `reader.endpoint`.
    #[arg(long, env = READER_ENDPOINT_ENV)]
    pub reader_endpoint: Option<String>,
    #[command(flatten)]
    pub data: DataDir,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSON object mapping question id to an answer string or a ranked answer list.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Ranking cache for recall, oracle EM and MRR; without it those are zero.
    #[arg(long)]
    pub rankings: Option<PathBuf>,
    #[arg(long, default_value = "en")]
    pub lang: odqa_core::text::Lang,
    #[arg(long)]
    pub verbose: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
