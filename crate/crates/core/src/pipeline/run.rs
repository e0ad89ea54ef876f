use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, Resources, RunError};
use crate::eval::{evaluate, MetricsReport, QAExample};
use crate::fusion::{fuse, FusionParams, ScoredAnswer};
use crate::ranker::{InvertedIndex, RankedList, RankingCache};
use crate::reader::{PassageRef, Reader};

/// Depths at which Recall@K is reported, besides `top_k` itself.
pub const REPORT_KS: [usize; 6] = [1, 5, 10, 20, 50, 100];

pub const BM25_RANKER: &str = "bm25";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1 }
    }
}

/// How often each stage ran. A cached run must show zero index loads and
/// zero ranking queries.
#[derive(Debug, Default)]
pub struct StageCounters {
    pub index_loads: AtomicUsize,
    pub cache_loads: AtomicUsize,
    pub rank_queries: AtomicUsize,
    pub reader_calls: AtomicUsize,
    pub questions_completed: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub index_loads: usize,
    pub cache_loads: usize,
    pub rank_queries: usize,
    pub reader_calls: usize,
    pub questions_completed: usize,
}

impl StageCounters {
    pub fn snapshot(&self) -> StageCounts {
        StageCounts {
            index_loads: self.index_loads.load(Ordering::SeqCst),
            cache_loads: self.cache_loads.load(Ordering::SeqCst),
            rank_queries: self.rank_queries.load(Ordering::SeqCst),
            reader_calls: self.reader_calls.load(Ordering::SeqCst),
            questions_completed: self.questions_completed.load(Ordering::SeqCst),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub dataset_digest: String,
    pub snapshot_id: String,
    /// Checksum of the snapshot behind a live index; unknown for cached runs.
    pub snapshot_checksum: Option<String>,
    pub cache_digest: Option<String>,
    pub ranker: String,
    pub reader: String,
    pub fusion: FusionParams,
    pub n_gpu: u32,
    pub top_k: usize,
    pub workers: usize,
    pub stages: StageCounts,
    pub report_digest: String,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub manifest: RunManifest,
    pub rankings: BTreeMap<String, RankedList>,
    pub predictions: BTreeMap<String, Vec<ScoredAnswer>>,
}

impl RunOutput {
    pub fn predictions_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.predictions).expect("predictions serialize");
        s.push('\n');
        s
    }
}

enum Ranking<'a> {
    Live(&'a InvertedIndex),
    Cached(&'a RankingCache),
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn dataset_digest(examples: &[QAExample]) -> String {
    hex::encode(Sha256::digest(super::dataset::write_dataset(examples)))
}

/// Recall depths reported for a given `top_k`.
pub fn report_ks(top_k: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = REPORT_KS.iter().copied().filter(|&k| k <= top_k).collect();
    ks.push(top_k);
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Ranks every question against `index` into a cache of the given depth.
pub fn build_cache(index: &InvertedIndex, questions: &[(String, String)], depth: usize) -> RankingCache {
    let mut cache = RankingCache::new(index.snapshot_id(), BM25_RANKER, depth);
    for (qid, question) in questions {
        cache
            .insert(index.query(qid, question, depth))
            .expect("query never returns more than depth entries");
    }
    cache
}

/// Executes a configured run: rank (live or cached) → read → fuse →
/// evaluate. Any per-question failure aborts the run.
pub fn run(
    config: &PipelineConfig,
    dataset: &[QAExample],
    resources: &dyn Resources,
    options: RunOptions,
    counters: &StageCounters,
    reader_endpoint_override: Option<&str>,
) -> Result<RunOutput, RunError> {
    let started_at_ms = now_ms();
    if dataset.is_empty() {
        return Err(RunError::EmptyDataset);
    }
    let mut seen = HashSet::new();
    if let Some(dup) = dataset.iter().find(|ex| !seen.insert(ex.question_id.as_str())) {
        return Err(RunError::Eval(crate::eval::EvalError::DuplicateQuestionId(
            dup.question_id.clone(),
        )));
    }
    config.validate()?;
    let fusion = config.fusion_params();
    fusion.validate()?;
    let top_k = config.param.top_k;
    let reader_spec = config.reader_spec(reader_endpoint_override)?;

    let (index, cache);
    let (ranking, snapshot_checksum, cache_digest, ranker_id) = if config.ranker.use_cached {
        let path = config.ranker.cache_path.as_deref().unwrap_or_default();
        cache = resources.load_cache(path)?;
        counters.cache_loads.fetch_add(1, Ordering::SeqCst);
        (
            Ranking::Cached(&cache),
            None,
            Some(cache.digest()),
            format!("cached:{}", cache.ranker),
        )
    } else {
        if config.ranker.model.name != BM25_RANKER {
            return Err(RunError::UnsupportedRanker(config.ranker.model.name.clone()));
        }
        index = resources.load_index(&config.ranker.model.es_index_name)?;
        counters.index_loads.fetch_add(1, Ordering::SeqCst);
        let p = index.params();
        (
            Ranking::Live(&index),
            Some(index.snapshot_checksum().to_string()),
            None,
            format!("{BM25_RANKER}(k1={},b={})", p.k1, p.b),
        )
    };
    let reader = resources.reader(&reader_spec)?;

    let process = |ex: &QAExample| -> Result<(RankedList, Vec<ScoredAnswer>), RunError> {
        let list = match &ranking {
            Ranking::Live(index) => {
                counters.rank_queries.fetch_add(1, Ordering::SeqCst);
                index.query(&ex.question_id, &ex.question, top_k)
            }
            Ranking::Cached(cache) => {
                let list = cache
                    .get(&ex.question_id)
                    .ok_or_else(|| RunError::CacheMiss(ex.question_id.clone()))?;
                if list.entries.len() < top_k && cache.depth < top_k {
                    return Err(RunError::CacheTooShallow {
                        question_id: ex.question_id.clone(),
                        depth: cache.depth,
                    });
                }
                list.truncated(top_k)
            }
        };
        let answers = read_and_fuse(reader.as_ref(), ex, &list, &fusion, counters)?;
        counters.questions_completed.fetch_add(1, Ordering::SeqCst);
        Ok((list, answers))
    };

    let results = run_parallel(dataset, options.workers.max(1), process);

    let mut rankings = BTreeMap::new();
    let mut predictions = BTreeMap::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Some(Ok((list, answers))) => {
                rankings.insert(dataset[i].question_id.clone(), list);
                predictions.insert(dataset[i].question_id.clone(), answers);
            }
            Some(Err(e)) => {
                return Err(RunError::Aborted {
                    completed: counters.questions_completed.load(Ordering::SeqCst),
                    total: dataset.len(),
                    source: Box::new(e),
                })
            }
            None => unreachable!("a question was skipped without an earlier error"),
        }
    }

    let report = evaluate(dataset, &rankings, &predictions, &report_ks(top_k))?;
    let manifest = RunManifest {
        config_digest: config.digest(),
        dataset_digest: dataset_digest(dataset),
        snapshot_id: config.ranker.model.es_index_name.clone(),
        snapshot_checksum,
        cache_digest,
        ranker: ranker_id,
        reader: reader.identity(),
        fusion,
        n_gpu: config.param.n_gpu,
        top_k,
        workers: options.workers.max(1),
        stages: counters.snapshot(),
        report_digest: report.digest(),
        started_at_ms,
        finished_at_ms: now_ms(),
    };
    Ok(RunOutput {
        report,
        manifest,
        rankings,
        predictions,
    })
}

fn read_and_fuse(
    reader: &dyn Reader,
    ex: &QAExample,
    list: &RankedList,
    fusion: &FusionParams,
    counters: &StageCounters,
) -> Result<Vec<ScoredAnswer>, RunError> {
    if list.entries.is_empty() {
        return Ok(Vec::new());
    }
    let passages: Vec<PassageRef<'_>> = list
        .entries
        .iter()
        .map(|e| PassageRef {
            passage_id: &e.passage_id,
            text: &e.text,
        })
        .collect();
    counters.reader_calls.fetch_add(1, Ordering::SeqCst);
    let output = reader.read(&ex.question_id, &ex.question, &passages)?;
    Ok(fuse(&output.candidates, list, fusion, ex.lang)?)
}

/// Runs `f` over `items` on `workers` threads. Slot `i` holds the result for
/// `items[i]`; after the first error, unstarted items are left as `None`.
fn run_parallel<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<Option<Result<R, RunError>>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, RunError> + Sync,
{
    if workers <= 1 {
        let mut out: Vec<Option<Result<R, RunError>>> = Vec::with_capacity(items.len());
        for item in items {
            let r = f(item);
            let failed = r.is_err();
            out.push(Some(r));
            if failed {
                break;
            }
        }
        out.resize_with(items.len(), || None);
        return out;
    }
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<R, RunError>>>> = (0..items.len()).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(items.len()) {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                if r.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    let mut out: Vec<_> = slots.into_iter().map(|m| m.into_inner().unwrap()).collect();
    // Report the earliest failure in dataset order; anything after it is moot.
    if let Some(first_err) = out.iter().position(|r| matches!(r, Some(Err(_)))) {
        for slot in out.iter_mut().take(first_err) {
            if slot.is_none() {
                *slot = Some(Err(RunError::Resource("skipped after an earlier failure".into())));
            }
        }
    }
    out
}
