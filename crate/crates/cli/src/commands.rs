use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use odqa_core::corpus::{build_snapshot, read_documents, SplitStrategy};
use odqa_core::eval::evaluate;
use odqa_core::fusion::ScoredAnswer;
use odqa_core::pipeline::{
    build_cache, load_config, read_dataset, read_questions, report_ks, run, DirResources, Resources, RunOptions,
    StageCounters,
};
use odqa_core::ranker::store::save_index;
use odqa_core::ranker::{read_cache, write_cache, Bm25Params, RankedList};
use serde::Deserialize;

use crate::{Command, EvalArgs, IndexArgs, RankArgs, RunArgs, ServeArgs, Strategy};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Index(a) => index(a),
        Command::Rank(a) => rank(a),
        Command::Serve(a) => serve(a),
        Command::Run(a) => run_config(a),
        Command::Eval(a) => eval(a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn index(a: IndexArgs) -> Result<()> {
    let strategy = match a.strategy {
        Strategy::Sentence => SplitStrategy::Sentence,
        Strategy::Paragraph => SplitStrategy::Paragraph,
        Strategy::Chunk => SplitStrategy::Chunk {
            chunk_size: a.chunk_size,
            stride: a.stride,
        },
        Strategy::Context => SplitStrategy::Context {
            max_tokens: a.max_tokens,
        },
    };
    let docs = read_documents(open(&a.corpus)?).collect::<Result<Vec<_>, _>>()?;
    let snapshot = build_snapshot(docs, strategy, &a.snapshot_id, &a.version_tag)?;
    let dir = DirResources::new(&a.data.data_dir).snapshot_dir(&a.snapshot_id);
    save_index(&snapshot, Bm25Params { k1: a.k1, b: a.b }, &dir)?;
    println!(
        "indexed {} documents into {} passages at {} (checksum {})",
        snapshot.document_count(),
        snapshot.passages().len(),
        dir.display(),
        snapshot.checksum()
    );
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    if a.top_k == 0 {
        bail!("--top-k must be at least 1");
    }
    let questions = read_questions(open(&a.questions)?)?;
    let index = DirResources::new(&a.data.data_dir).load_index(&a.index)?;
    let cache = build_cache(&index, &questions, a.top_k);
    let mut out = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_cache(&cache, &mut out)?;
    out.flush()?;
    println!("ranked {} questions to depth {} into {}", cache.len(), a.top_k, a.out.display());
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let state = odqa_service::AppState::load_dir(&a.data.data_dir)?;
    let ids: Vec<&str> = state.index_ids().collect();
    eprintln!("serving {} index(es) [{}] on http://{}", ids.len(), ids.join(", "), a.addr);
    tokio::runtime::Runtime::new()?.block_on(odqa_service::serve(a.addr, state))?;
    Ok(())
}

fn run_config(a: RunArgs) -> Result<()> {
    let source = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let config = load_config(&source)?;
    let dataset = read_dataset(open(&a.dataset)?, config.data.lang)?;
    let resources = DirResources::new(&a.data.data_dir);
    let counters = StageCounters::default();
    let out = run(
        &config,
        &dataset,
        &resources,
        RunOptions { workers: a.workers },
        &counters,
        a.reader_endpoint.as_deref(),
    )?;
    fs::create_dir_all(&a.out_dir)?;
    let report = out.report.to_json(a.verbose);
    fs::write(a.out_dir.join("report.json"), &report)?;
    fs::write(
        a.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&out.manifest)? + "\n",
    )?;
    fs::write(a.out_dir.join("predictions.json"), out.predictions_json())?;
    print!("{report}");
    eprintln!("wrote report, manifest and predictions to {}", a.out_dir.display());
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Prediction {
    Text(String),
    Ranked(Vec<ScoredAnswer>),
}

fn eval(a: EvalArgs) -> Result<()> {
    let dataset = read_dataset(open(&a.dataset)?, a.lang)?;
    let raw: BTreeMap<String, Prediction> = serde_json::from_reader(open(&a.predictions)?)
        .with_context(|| format!("parsing {}", a.predictions.display()))?;
    let predictions: BTreeMap<String, Vec<ScoredAnswer>> = raw
        .into_iter()
        .map(|(qid, p)| {
            let answers = match p {
                Prediction::Ranked(v) => v,
                Prediction::Text(text) => vec![ScoredAnswer {
                    question_id: qid.clone(),
                    answer_text: text,
                    y: 0.0,
                    y_reader: 0.0,
                    y_rank: 0.0,
                    passage_id: String::new(),
                    rank_in_list: 0,
                }],
            };
            (qid, answers)
        })
        .collect();
    let (rankings, depth) = match &a.rankings {
        Some(path) => {
            let cache = read_cache(open(path)?)?;
            (cache.results().clone(), cache.depth)
        }
        None => (BTreeMap::new(), 1),
    };
    let uncovered = dataset.iter().filter(|ex| !rankings.contains_key(&ex.question_id)).count();
    if a.rankings.is_some() && uncovered > 0 {
        eprintln!("warning: {uncovered} questions have no ranking; their retrieval metrics count as misses");
    }
    let rankings: BTreeMap<String, RankedList> = dataset
        .iter()
        .map(|ex| {
            let list = rankings
                .get(&ex.question_id)
                .cloned()
                .unwrap_or_else(|| RankedList::new(&ex.question_id, depth));
            (ex.question_id.clone(), list)
        })
        .collect();
    let report = evaluate(&dataset, &rankings, &predictions, &report_ks(depth.max(1)))?;
    print!("{}", report.to_json(a.verbose));
    Ok(())
}
