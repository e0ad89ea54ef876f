//! Fixtures shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use odqa_core::corpus::{build_snapshot, Document, SplitStrategy};
use odqa_core::eval::QAExample;
use odqa_core::fusion::ScoredAnswer;
use odqa_core::pipeline::{load_config, PipelineConfig};
use odqa_core::ranker::{Bm25Params, InvertedIndex, RankedEntry, RankedList};
use odqa_core::text::Lang;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Planted-answer corpus

const SYLLABLES: [&str; 8] = ["ka", "lo", "mi", "ru", "tu", "ve", "zo", "di"];

/// Six-letter answer word for question `i`. Fixed length means no answer is
/// a substring of another, and filler words (`w123`) never contain one.
pub fn answer_word(i: usize) -> String {
    assert!(i < 512);
    [i / 64, (i / 8) % 8, i % 8].iter().map(|&s| SYLLABLES[s]).collect()
}

pub fn question_text(i: usize) -> String {
    format!("which word sits between zq{i}a and zq{i}b")
}

pub struct Planted {
    pub docs: Vec<Document>,
    pub dataset: Vec<QAExample>,
    /// Index into `docs` of the passage holding each question's answer.
    pub answer_docs: Vec<usize>,
}

fn filler(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| format!("w{}", rng.gen_range(0..3000))).collect()
}

/// One-passage documents of random filler. For every question one document
/// reads `... zq{i}a ANSWER zq{i}b ...` and three distractors mention only
/// `zq{i}a`.
pub fn planted(n_passages: usize, n_questions: usize, seed: u64) -> Planted {
    assert!(n_passages >= 4 * n_questions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..n_passages).collect();
    slots.shuffle(&mut rng);
    let mut texts: Vec<Vec<String>> = (0..n_passages)
        .map(|_| {
            let n = rng.gen_range(20..50);
            filler(&mut rng, n)
        })
        .collect();
    let mut answer_docs = Vec::with_capacity(n_questions);
    let mut dataset = Vec::with_capacity(n_questions);
    for i in 0..n_questions {
        let doc = slots[4 * i];
        let at = rng.gen_range(0..texts[doc].len());
        let planted = [format!("zq{i}a"), answer_word(i), format!("zq{i}b")];
        texts[doc].splice(at..at, planted);
        for d in &slots[4 * i + 1..4 * i + 4] {
            let at = rng.gen_range(0..texts[*d].len());
            texts[*d].insert(at, format!("zq{i}a"));
        }
        answer_docs.push(doc);
        dataset.push(QAExample {
            question_id: format!("q{i:03}"),
            question: question_text(i),
            gold_answers: vec![answer_word(i)],
            lang: Lang::En,
        });
    }
    let docs = texts
        .into_iter()
        .enumerate()
        .map(|(d, words)| Document::new(format!("d{d:05}"), words.join(" "), Lang::En))
        .collect();
    Planted {
        docs,
        dataset,
        answer_docs,
    }
}

pub fn index_of(docs: Vec<Document>, snapshot_id: &str, version: &str) -> InvertedIndex {
    let snapshot = build_snapshot(docs, SplitStrategy::Paragraph, snapshot_id, version).unwrap();
    InvertedIndex::build(&snapshot, Bm25Params::default()).unwrap()
}

/// Built-in lexical reader over the given snapshot.
pub fn lexical_config(snapshot_id: &str, top_k: usize, cache_path: Option<&str>) -> PipelineConfig {
    let ranker = match cache_path {
        Some(p) => format!("    use_cached: true\n    cache_path: {p}\n"),
        None => "    use_cached: false\n".to_string(),
    };
    let src = format!(
        "data:\n    lang: en\n    name: planted\n    split: dev\nranker:\n{ranker}    model:\n        name: bm25\n        es_index_name: {snapshot_id}\nreader:\n    model_id: builtin-lexical\nparam:\n    n_gpu: 0\n    score_weight: 0.5\n    top_k: {top_k}\n"
    );
    load_config(&src).unwrap()
}

// ---------------------------------------------------------------------------
// Hand-scored metric fixture

pub struct MetricCase {
    pub id: &'static str,
    pub lang: Lang,
    pub golds: &'static [&'static str],
    pub prediction: Option<&'static str>,
    /// 1-based rank of the passage carrying the gold, if retrieved.
    pub hit: Option<usize>,
    /// How the gold appears in that passage.
    pub surface: &'static str,
}

const fn case(
    id: &'static str,
    lang: Lang,
    golds: &'static [&'static str],
    prediction: Option<&'static str>,
    hit: Option<usize>,
    surface: &'static str,
) -> MetricCase {
    MetricCase {
        id,
        lang,
        golds,
        prediction,
        hit,
        surface,
    }
}

use Lang::{En, Zh};

pub const METRIC_CASES: [MetricCase; 25] = [
    case("m01", En, &["Barack Obama"], Some("Barack Obama"), Some(1), "Barack Obama"),
    case("m02", En, &["Barack Obama"], Some("obama"), Some(2), "BARACK OBAMA"),
    case("m03", En, &["the Eiffel Tower"], Some("Eiffel Tower."), Some(1), "the Eiffel Tower!"),
    case("m04", En, &["1889"], Some("in 1889"), Some(3), "1889"),
    case("m05", En, &["Paris", "City of Paris"], Some("city of paris"), Some(5), "Paris,"),
    case("m06", En, &["red blue green"], Some("blue"), None, ""),
    case("m07", En, &["Marie Curie"], None, Some(10), "Marie Curie"),
    case("m08", En, &["an apple a day"], Some("apple day"), Some(7), "an apple a day"),
    case("m09", En, &["New York City"], Some("York"), None, ""),
    case("m10", En, &["four"], Some("five"), Some(4), "Four"),
    case("m11", En, &["Rock and Roll"], Some("rock & roll"), Some(1), "rock and roll"),
    case("m12", En, &["Lincoln", "Abraham Lincoln"], Some("President Lincoln"), Some(2), "Lincoln"),
    case("m13", En, &["cat cat dog"], Some("cat dog dog"), Some(6), "cat cat dog"),
    case("m14", En, &["H2O"], Some("h2o"), None, ""),
    case("m15", En, &["Mount Everest"], Some("Everest, Mount"), Some(8), "Mount Everest"),
    case("m16", Zh, &["北京"], Some("北京"), Some(1), "北京"),
    case("m17", Zh, &["北京市"], Some("北京"), Some(2), "北京市"),
    case("m18", Zh, &["长城"], Some("长城。"), Some(3), "长 城"),
    case("m19", Zh, &["鲁迅"], Some("周树人"), None, ""),
    case("m20", Zh, &["孔子"], None, Some(1), "孔子"),
    case("m21", Zh, &["上海", "上海市"], Some("上海市"), Some(9), "上海"),
    case("m22", Zh, &["黄河"], Some("长江"), Some(5), "黄河"),
    case("m23", Zh, &["人民大会堂"], Some("大会堂"), Some(4), "人民大会堂"),
    case("m24", Zh, &["中华人民共和国"], Some("人民共和"), None, ""),
    case("m25", Zh, &["ABC公司"], Some("abc公司"), Some(10), "ABC公司"),
];

/// Per-case (EM, F1), worked out by hand from the SQuAD rules (English) and
/// character overlap (Chinese).
pub const METRIC_EXPECTED: [(f64, f64); 25] = [
    (1.0, 1.0),
    (0.0, 2.0 / 3.0), // P 1, R 1/2
    (1.0, 1.0),
    (0.0, 2.0 / 3.0), // P 1/2, R 1
    (1.0, 1.0),
    (0.0, 0.5), // P 1, R 1/3
    (0.0, 0.0),
    (1.0, 1.0), // articles dropped on both sides
    (0.0, 0.5),
    (0.0, 0.0),
    (0.0, 0.8), // "&" is stripped: [rock, roll] vs [rock, and, roll]
    (0.0, 2.0 / 3.0),
    (0.0, 2.0 / 3.0), // multiset overlap 2 of 3
    (1.0, 1.0),
    (0.0, 1.0), // same bag of words, different order
    (1.0, 1.0),
    (0.0, 0.8),
    (1.0, 1.0),
    (0.0, 0.0),
    (0.0, 0.0),
    (1.0, 1.0),
    (0.0, 0.0),
    (0.0, 0.75), // P 1, R 3/5
    (0.0, 8.0 / 11.0), // P 1, R 4/7
    (0.0, 0.4), // no case folding for Chinese: 2 of 5 characters
];

pub fn metric_dataset() -> Vec<QAExample> {
    METRIC_CASES
        .iter()
        .map(|c| QAExample {
            question_id: c.id.to_string(),
            question: format!("question {}", c.id),
            gold_answers: c.golds.iter().map(|g| g.to_string()).collect(),
            lang: c.lang,
        })
        .collect()
}

/// Ten passages per question; only rank `hit` mentions the gold.
pub fn metric_rankings() -> BTreeMap<String, RankedList> {
    METRIC_CASES
        .iter()
        .map(|c| {
            let mut list = RankedList::new(c.id, 10);
            for r in 1..=10 {
                let text = match (c.hit == Some(r), c.lang) {
                    (true, En) => format!("This passage mentions {} here.", c.surface),
                    (true, Zh) => format!("这里提到{}。", c.surface),
                    (false, En) => "unrelated filler passage".to_string(),
                    (false, Zh) => "无关的段落内容".to_string(),
                };
                list.entries.push(RankedEntry {
                    passage_id: format!("{}-p{r:02}", c.id),
                    score: 20.0 - r as f64,
                    text,
                });
            }
            (c.id.to_string(), list)
        })
        .collect()
}

pub fn metric_predictions() -> BTreeMap<String, Vec<ScoredAnswer>> {
    METRIC_CASES
        .iter()
        .filter_map(|c| {
            let text = c.prediction?;
            Some((
                c.id.to_string(),
                vec![ScoredAnswer {
                    question_id: c.id.to_string(),
                    answer_text: text.to_string(),
                    y: 1.0,
                    y_reader: 1.0,
                    y_rank: 1.0,
                    passage_id: format!("{}-p01", c.id),
                    rank_in_list: 1,
                }],
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// In-process HTTP stub for the reader protocol

pub struct StubReply {
    pub status: u16,
    pub body: String,
}

/// Minimal HTTP/1.1 server on a loopback port. `handler` receives the
/// request path and body of every request.
pub struct Stub {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

impl Stub {
    pub fn start<F>(handler: F) -> Stub
    where
        F: Fn(&str, &str) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let handler = Arc::new(handler);
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let handler = handler.clone();
                let counter = counter.clone();
                thread::spawn(move || serve(stream, handler.as_ref(), &counter));
            }
        });
        Stub { url, hits }
    }
}

fn serve(stream: TcpStream, handler: &(dyn Fn(&str, &str) -> StubReply + Send + Sync), hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut stream = stream;
    loop {
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
            return;
        }
        let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
        let mut content_length = 0usize;
        let mut chunked = false;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            let (name, value) = line.split_once(':').unwrap_or((line, ""));
            match name.to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap(),
                "transfer-encoding" => chunked = value.trim().eq_ignore_ascii_case("chunked"),
                _ => {}
            }
        }
        let mut body = Vec::new();
        if chunked {
            loop {
                let mut size = String::new();
                reader.read_line(&mut size).unwrap();
                let n = usize::from_str_radix(size.trim(), 16).unwrap();
                let mut chunk = vec![0; n + 2];
                reader.read_exact(&mut chunk).unwrap();
                if n == 0 {
                    break;
                }
                body.extend_from_slice(&chunk[..n]);
            }
        } else {
            body.resize(content_length, 0);
            reader.read_exact(&mut body).unwrap();
        }
        hits.fetch_add(1, Ordering::SeqCst);
        let reply = handler(&path, &String::from_utf8(body).unwrap());
        let head = format!(
            "HTTP/1.1 {} Stub\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n",
            reply.status,
            reply.body.len()
        );
        if stream.write_all(head.as_bytes()).is_err() || stream.write_all(reply.body.as_bytes()).is_err() {
            return;
        }
    }
}
