//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use odqa_core::corpus::{build_snapshot, split_document, Document, SplitStrategy};
use odqa_core::eval::evaluate;
use odqa_core::fusion::{fuse, normalize, FusionParams, NormStrategy, ReaderScoreType};
use odqa_core::pipeline::{build_cache, run, MemoryResources, RunOptions, StageCounters};
use odqa_core::ranker::{read_cache, write_cache, Bm25Params, InvertedIndex, RankedEntry, RankedList};
use odqa_core::reader::SpanCandidate;
use odqa_core::text::{Lang, Span};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("bm25 oracle equivalence", bm25_oracle_equivalence),
        ("metric fixtures", metric_fixtures),
        ("fusion endpoints", fusion_endpoints),
        ("normalization properties", normalization_properties),
        ("cache/live equivalence", cache_live_equivalence),
        ("reproducibility", reproducibility),
        ("corpus-version sensitivity", corpus_version_sensitivity),
        ("splitter presets", splitter_presets),
        ("end-to-end planted answers", planted_end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {secs:>6.2}s  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {secs:>6.2}s  {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------

fn oracle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Scores every passage from scratch and sorts, independently of the index.
fn brute_force(corpus: &[(String, String)], query: &str, k: usize) -> Vec<(String, f64)> {
    let (k1, b) = (0.9, 0.4);
    let docs: Vec<Vec<String>> = corpus.iter().map(|(_, t)| oracle_tokens(t)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut terms: Vec<String> = Vec::new();
    for t in oracle_tokens(query) {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let dfs: Vec<f64> = terms
        .iter()
        .map(|t| docs.iter().filter(|d| d.contains(t)).count() as f64)
        .collect();
    let mut scored: Vec<(String, f64)> = Vec::new();
    for ((pid, _), doc) in corpus.iter().zip(&docs) {
        let mut score = 0.0;
        let mut matched = false;
        for (t, &df) in terms.iter().zip(&dfs) {
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let dl = doc.len() as f64;
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if matched {
            scored.push((pid.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn bm25_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen();
        format!("t{}", (u * u * 120.0) as usize)
    };
    let mut texts: Vec<String> = Vec::new();
    for i in 0..1000 {
        if i > 10 && rng.gen_bool(0.1) {
            // exact duplicates force score ties
            let j = rng.gen_range(0..texts.len());
            texts.push(texts[j].clone());
        } else {
            let n = rng.gen_range(3..40);
            let words: Vec<String> = (0..n).map(|_| vocab(&mut rng)).collect();
            texts.push(words.join(if rng.gen_bool(0.2) { ", " } else { " " }));
        }
    }
    let docs: Vec<Document> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(format!("doc{i:04}"), t.clone(), Lang::En))
        .collect();
    let snapshot = build_snapshot(docs, SplitStrategy::Paragraph, "oracle", "v1").map_err(|e| e.to_string())?;
    let index = InvertedIndex::build(&snapshot, Bm25Params::default()).map_err(|e| e.to_string())?;
    let corpus: Vec<(String, String)> = snapshot
        .passages()
        .iter()
        .map(|p| (p.passage_id.clone(), p.text.clone()))
        .collect();
    ensure!(corpus.len() == 1000, "expected 1000 passages, got {}", corpus.len());

    let mut ties = 0;
    for qi in 0..200 {
        let n = rng.gen_range(1..5);
        let mut words: Vec<String> = (0..n).map(|_| vocab(&mut rng)).collect();
        if rng.gen_bool(0.2) {
            words.push(words[0].to_uppercase());
        }
        if rng.gen_bool(0.1) {
            words.push("unseenterm".into());
        }
        let query = words.join(" ");
        let got = index.query(&format!("q{qi}"), &query, 50);
        let want = brute_force(&corpus, &query, 50);
        ensure!(got.entries.len() == want.len(), "query {qi} `{query}`: {} vs {} results", got.entries.len(), want.len());
        for (rank, (g, w)) in got.entries.iter().zip(&want).enumerate() {
            ensure!(
                g.passage_id == w.0,
                "query {qi} `{query}` rank {}: {} vs oracle {}",
                rank + 1,
                g.passage_id,
                w.0
            );
            ensure!((g.score - w.1).abs() <= 1e-9, "query {qi} {}: {} vs {}", g.passage_id, g.score, w.1);
        }
        ties += want.windows(2).filter(|p| p[0].1 == p[1].1).count();
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    ensure!(ties > 0, "fixture produced no ties");
    Ok(format!("200 queries, {ties} tied pairs"))
}

// ---------------------------------------------------------------------------

fn metric_fixtures() -> Outcome {
    let dataset = metric_dataset();
    let report = evaluate(&dataset, &metric_rankings(), &metric_predictions(), &[1, 5, 10]).map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;

    for (q, (c, &(em, f1))) in report.per_question.iter().zip(METRIC_CASES.iter().zip(&METRIC_EXPECTED)) {
        ensure!(close(q.em, em) && close(q.f1, f1), "{}: em/f1 {}/{} want {em}/{f1}", c.id, q.em, q.f1);
        ensure!(q.first_hit_rank == c.hit, "{}: hit {:?} want {:?}", c.id, q.first_hit_rank, c.hit);
    }
    // 8 exact matches; F1: nine 1s, four 2/3, two 1/2, two 0.8, 0.75, 0.4, 8/11.
    let em = 8.0 / 25.0;
    let f1 = (9.0 + 4.0 * 2.0 / 3.0 + 2.0 * 0.5 + 2.0 * 0.8 + 0.75 + 0.4 + 8.0 / 11.0) / 25.0;
    // Hits at ranks 1 ×5, 2 ×3, 3 ×2, 4 ×2, 5 ×2, 6, 7, 8, 9, 10 ×2; five misses.
    let r1 = 5.0 / 25.0;
    let r5 = 14.0 / 25.0;
    let r10 = 20.0 / 25.0;
    let mrr = (5.0 + 3.0 / 2.0 + 2.0 / 3.0 + 2.0 / 4.0 + 2.0 / 5.0 + 1.0 / 6.0 + 1.0 / 7.0 + 1.0 / 8.0 + 1.0 / 9.0 + 2.0 / 10.0)
        / 25.0;
    ensure!(close(report.em, em), "em {} want {em}", report.em);
    ensure!(close(report.f1, f1), "f1 {} want {f1}", report.f1);
    ensure!(close(report.mrr, mrr), "mrr {} want {mrr}", report.mrr);
    for (k, want) in [(1, r1), (5, r5), (10, r10)] {
        let got = report.recall_at_k[&k];
        ensure!(close(got, want), "R@{k} {got} want {want}");
        let oracle = report.oracle_em_at_k[&k];
        ensure!(close(oracle, want), "oracle_em@{k} {oracle} want {want}");
    }
    ensure!(report.n_questions == 25, "n_questions {}", report.n_questions);
    Ok(format!("em {em:.4} f1 {f1:.4} mrr {mrr:.4}"))
}

// ---------------------------------------------------------------------------

const ANSWER_POOL: [&str; 6] = ["alpha", "beta", "gamma", "delta", "Alpha.", "epsilon"];
const NORMS: [NormStrategy; 3] = [NormStrategy::None, NormStrategy::ZNorm, NormStrategy::Floor];

struct Instance {
    ranks: RankedList,
    candidates: Vec<SpanCandidate>,
}

/// Scores on a quarter-unit grid so that near-ties never collapse under the
/// ZNorm rounding.
fn grid(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 4.0
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=8);
    let mut entries: Vec<RankedEntry> = (0..n)
        .map(|i| RankedEntry {
            passage_id: format!("p{i}"),
            score: grid(rng, 0, 12),
            text: String::new(),
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.passage_id.cmp(&b.passage_id)));
    let mut candidates = Vec::new();
    for e in &entries {
        for _ in 0..rng.gen_range(0..=3) {
            let text = ANSWER_POOL[rng.gen_range(0..ANSWER_POOL.len())];
            candidates.push(SpanCandidate {
                question_id: "q".into(),
                passage_id: e.passage_id.clone(),
                answer_text: text.into(),
                char_span: Span::new(0, text.len()),
                logit: grid(rng, -20, 20),
                probability: rng.gen_range(0..=4) as f64 / 4.0,
            });
        }
    }
    if candidates.is_empty() {
        let e = &entries[rng.gen_range(0..entries.len())];
        candidates.push(SpanCandidate {
            question_id: "q".into(),
            passage_id: e.passage_id.clone(),
            answer_text: "alpha".into(),
            char_span: Span::new(0, 5),
            logit: 1.0,
            probability: 0.5,
        });
    }
    Instance {
        ranks: RankedList {
            question_id: "q".into(),
            entries,
            k: 8,
        },
        candidates,
    }
}

fn raw_reader(c: &SpanCandidate, t: ReaderScoreType) -> f64 {
    match t {
        ReaderScoreType::Logit => c.logit,
        ReaderScoreType::Probability => c.probability,
    }
}

fn fusion_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let inst = random_instance(&mut rng);
        let score_type = if rng.gen_bool(0.5) { ReaderScoreType::Logit } else { ReaderScoreType::Probability };
        let mut params = |alpha| FusionParams {
            alpha,
            reader_score_type: score_type,
            norm_rank: NORMS[rng.gen_range(0..3)],
            norm_reader: NORMS[rng.gen_range(0..3)],
            final_k: 10,
        };

        let (p0, p1) = (params(0.0), params(1.0));
        let out0 = fuse(&inst.candidates, &inst.ranks, &p0, Lang::En).map_err(|e| e.to_string())?;
        let best = inst.candidates.iter().map(|c| raw_reader(c, score_type)).fold(f64::MIN, f64::max);
        let top = &out0[0];
        let top_raw = inst
            .candidates
            .iter()
            .filter(|c| c.passage_id == top.passage_id && c.answer_text == top.answer_text)
            .map(|c| raw_reader(c, score_type))
            .fold(f64::MIN, f64::max);
        ensure!(top_raw == best, "trial {trial}: alpha=0 top reader score {top_raw}, max is {best}");

        let out1 = fuse(&inst.candidates, &inst.ranks, &p1, Lang::En).map_err(|e| e.to_string())?;
        let with_candidates: HashSet<&str> = inst.candidates.iter().map(|c| c.passage_id.as_str()).collect();
        let first = inst
            .ranks
            .entries
            .iter()
            .find(|e| with_candidates.contains(e.passage_id.as_str()))
            .map(|e| e.passage_id.as_str());
        ensure!(
            Some(out1[0].passage_id.as_str()) == first,
            "trial {trial}: alpha=1 top from {}, best-ranked candidate passage {first:?}",
            out1[0].passage_id
        );
    }
    Ok("100 random instances".into())
}

// ---------------------------------------------------------------------------

fn order_preserved(x: &[f64], y: &[f64]) -> bool {
    (0..x.len()).all(|i| (0..x.len()).all(|j| x[i].total_cmp(&x[j]) == y[i].total_cmp(&y[j])))
}

fn normalization_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let n = rng.gen_range(1..20);
        let xs: Vec<f64> = (0..n).map(|_| grid(&mut rng, -400, 400)).collect();
        for s in NORMS {
            let ys = normalize(&xs, s);
            ensure!(order_preserved(&xs, &ys), "{s:?} reorders {xs:?} into {ys:?}");
        }
    }
    for c in [0.0, -3.5, 42.0] {
        let xs = vec![c; 4];
        ensure!(normalize(&xs, NormStrategy::ZNorm) == vec![0.0; 4], "ZNorm of constant {c}");
        ensure!(normalize(&xs, NormStrategy::Floor) == vec![0.0; 4], "Floor of constant {c}");
        ensure!(normalize(&xs, NormStrategy::None) == xs, "None of constant {c}");
    }

    // Positive affine maps of the reader scores: exactly representable maps
    // (power-of-two scale, dyadic shift) must leave the output byte-identical.
    let mut checked = 0;
    for trial in 0..200 {
        let inst = random_instance(&mut rng);
        let a = 2f64.powi(rng.gen_range(-6..=6));
        let b = grid(&mut rng, -400, 400);
        let params = FusionParams {
            alpha: [0.0, 0.3, 0.8][trial % 3],
            reader_score_type: ReaderScoreType::Logit,
            norm_rank: NORMS[trial % 3],
            norm_reader: NormStrategy::ZNorm,
            final_k: 10,
        };
        let shifted: Vec<SpanCandidate> = inst
            .candidates
            .iter()
            .map(|c| SpanCandidate {
                logit: a * c.logit + b,
                ..c.clone()
            })
            .collect();
        let before = fuse(&inst.candidates, &inst.ranks, &params, Lang::En).map_err(|e| e.to_string())?;
        let after = fuse(&shifted, &inst.ranks, &params, Lang::En).map_err(|e| e.to_string())?;
        let (before, after) = (serde_json::to_string(&before).unwrap(), serde_json::to_string(&after).unwrap());
        ensure!(before == after, "trial {trial}: a={a} b={b} changed fused output");
        checked += 1;
    }
    Ok(format!("3 strategies, {checked} affine trials"))
}

// ---------------------------------------------------------------------------

fn cache_live_equivalence() -> Outcome {
    let planted = planted(600, 40, 21);
    let index = index_of(planted.docs, "planted", "v1");
    let questions: Vec<(String, String)> =
        planted.dataset.iter().map(|e| (e.question_id.clone(), e.question.clone())).collect();
    let cache = build_cache(&index, &questions, 10);
    let mut bytes = Vec::new();
    write_cache(&cache, &mut bytes).map_err(|e| e.to_string())?;
    let reloaded = read_cache(bytes.as_slice()).map_err(|e| e.to_string())?;
    let resources = MemoryResources::new().with_index(index).with_cache("rank.json", reloaded);

    let live_counters = StageCounters::default();
    let live = run(
        &lexical_config("planted", 10, None),
        &planted.dataset,
        &resources,
        RunOptions::default(),
        &live_counters,
        None,
    )
    .map_err(|e| e.to_string())?;
    let cached_counters = StageCounters::default();
    let cached = run(
        &lexical_config("planted", 10, Some("rank.json")),
        &planted.dataset,
        &resources,
        RunOptions::default(),
        &cached_counters,
        None,
    )
    .map_err(|e| e.to_string())?;

    ensure!(live.report.to_json(true) == cached.report.to_json(true), "reports differ");
    let c = cached_counters.snapshot();
    ensure!(c.index_loads == 0 && c.rank_queries == 0, "cached run touched the index: {c:?}");
    let l = live_counters.snapshot();
    ensure!(l.rank_queries == 40, "live run made {} queries", l.rank_queries);
    Ok(format!("report {} ; cached run: 0 index loads, 0 queries", &live.report.digest()[..12]))
}

fn reproducibility() -> Outcome {
    let planted = planted(800, 60, 31);
    let resources = MemoryResources::new().with_index(index_of(planted.docs, "planted", "v1"));
    let config = lexical_config("planted", 10, None);
    let mut digests = Vec::new();
    for workers in [1, 1, 3, 8] {
        let out = run(&config, &planted.dataset, &resources, RunOptions { workers }, &StageCounters::default(), None)
            .map_err(|e| e.to_string())?;
        digests.push((workers, out.report.digest(), out.predictions_json()));
    }
    for (w, d, p) in &digests[1..] {
        ensure!(*d == digests[0].1, "workers={w} report digest {d} vs {}", digests[0].1);
        ensure!(*p == digests[0].2, "workers={w} predictions differ");
    }
    Ok(format!("digest {} under workers 1,1,3,8", &digests[0].1[..12]))
}

fn corpus_version_sensitivity() -> Outcome {
    let planted = planted(2000, 50, 41);
    let mut edited = planted.docs.clone();
    let n_edit = 15; // 30% of 50
    for (i, &d) in planted.answer_docs.iter().enumerate().take(n_edit) {
        edited[d].text = edited[d].text.replace(&answer_word(i), &format!("w{}x", 5000 + i));
    }
    let config = lexical_config("wiki", 10, None);
    let mut reports = Vec::new();
    for (version, docs) in [("A", planted.docs), ("B", edited)] {
        let resources = MemoryResources::new().with_index(index_of(docs, "wiki", version));
        let out = run(&config, &planted.dataset, &resources, RunOptions { workers: 4 }, &StageCounters::default(), None)
            .map_err(|e| e.to_string())?;
        reports.push(out.report);
    }
    let (a, b) = (&reports[0], &reports[1]);
    let (ra, rb) = (a.recall_at_k[&10], b.recall_at_k[&10]);
    ensure!(rb < ra, "recall@10 A {ra} B {rb}");
    ensure!(b.em < a.em, "EM A {} B {}", a.em, b.em);
    Ok(format!("R@10 {ra:.2} -> {rb:.2}, EM {:.2} -> {:.2}", a.em, b.em))
}

// ---------------------------------------------------------------------------

fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("tok{i}")).collect()
}

fn splitter_presets() -> Outcome {
    for (n, want) in [
        (250, vec![(0, 100), (50, 150), (100, 200), (150, 250)]),
        (260, vec![(0, 100), (50, 150), (100, 200), (150, 250), (200, 260)]),
        (80, vec![(0, 80)]),
    ] {
        let w = words(n);
        let doc = Document::new("d", w.join(" "), Lang::En);
        let passages = split_document(&doc, &SplitStrategy::CHUNK_100_50).map_err(|e| e.to_string())?;
        let got: Vec<String> = passages.iter().map(|p| p.text.clone()).collect();
        let expected: Vec<String> = want.iter().map(|&(s, e)| w[s..e].join(" ")).collect();
        ensure!(got == expected, "Chunk(100, 50) on {n} tokens: {} windows, want {want:?}", got.len());
        for p in &passages {
            ensure!(p.char_span.slice(&doc.text) == p.text, "span of {} does not reproduce its text", p.passage_id);
        }
    }

    let sentence = |tag: &str, n: usize| format!("{}.", (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" "));
    let (s1, s2, s3) = (sentence("a", 60), sentence("b", 60), sentence("c", 60));
    let doc = Document::new("d", format!("{s1} {s2} {s3}"), Lang::En);
    let got: Vec<String> = split_document(&doc, &SplitStrategy::CONTEXT_150)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| p.text)
        .collect();
    ensure!(got == [format!("{s1} {s2}"), s3.clone()], "Context(150) on 60/60/60: {} passages", got.len());

    let (big, small) = (sentence("x", 170), sentence("y", 20));
    let doc = Document::new("d", format!("{small} {big} {small}"), Lang::En);
    let got: Vec<String> = split_document(&doc, &SplitStrategy::CONTEXT_150)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|p| p.text)
        .collect();
    ensure!(got == [small.clone(), big, small], "Context(150) with an oversized sentence: {got:?}");
    Ok("Chunk(100, 50) and Context(150) layouts exact".into())
}

fn planted_end_to_end() -> Outcome {
    let started = Instant::now();
    let planted = planted(5000, 100, 51);
    let resources = MemoryResources::new().with_index(index_of(planted.docs, "planted-5k", "v1"));
    let out = run(
        &lexical_config("planted-5k", 10, None),
        &planted.dataset,
        &resources,
        RunOptions { workers: 4 },
        &StageCounters::default(),
        None,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let r = &out.report;
    ensure!(r.recall_at_k[&10] == 1.0, "recall@10 {}", r.recall_at_k[&10]);
    ensure!(r.oracle_em_at_k[&10] == 1.0, "oracle_em@10 {}", r.oracle_em_at_k[&10]);
    ensure!(r.em > 0.0, "EM is zero");
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!("R@10 1.0, oracle_em@10 1.0, EM {:.2}, F1 {:.2}", r.em, r.f1))
}
