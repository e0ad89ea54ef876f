//! Browser demo over the core library. Every export takes plain strings and
//! numbers and returns a JSON string, so the page needs no glue beyond
//! `JSON.parse`.

use odqa_core::corpus::{build_snapshot, split_document, Document, SplitStrategy};
use odqa_core::fusion::{fuse, FusionParams, NormStrategy, ReaderScoreType, ScoredAnswer};
use odqa_core::ranker::{Bm25Params, InvertedIndex};
use odqa_core::reader::{LexicalReader, PassageRef, Reader, DEFAULT_MAX_ANSWERS};
use odqa_core::text::Lang;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct PreviewPassage {
    pub passage_id: String,
    pub start: usize,
    pub end: usize,
    pub tokens: usize,
    pub text: String,
}

#[derive(Debug, Serialize)]
pub struct Hit {
    pub passage_id: String,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Serialize)]
pub struct SearchResult {
    pub passages: usize,
    pub hits: Vec<Hit>,
    pub answers: Vec<ScoredAnswer>,
}

fn parse_lang(lang: &str) -> Result<Lang, String> {
    lang.parse().map_err(|_| format!("unsupported language `{lang}`"))
}

/// `kind` is one of sentence, paragraph, chunk, context; `size` and `stride`
/// are read only by the kinds that use them.
pub fn parse_strategy(kind: &str, size: usize, stride: usize) -> Result<SplitStrategy, String> {
    let s = match kind {
        "sentence" => SplitStrategy::Sentence,
        "paragraph" => SplitStrategy::Paragraph,
        "chunk" => SplitStrategy::Chunk { chunk_size: size, stride },
        "context" => SplitStrategy::Context { max_tokens: size },
        other => return Err(format!("unknown strategy `{other}`")),
    };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

pub fn split_preview(text: &str, lang: &str, kind: &str, size: usize, stride: usize) -> Result<String, String> {
    let lang = parse_lang(lang)?;
    let strategy = parse_strategy(kind, size, stride)?;
    if text.trim().is_empty() {
        return Ok("[]".into());
    }
    let doc = Document::new("doc", text, lang);
    let passages = split_document(&doc, &strategy).map_err(|e| e.to_string())?;
    let out: Vec<PreviewPassage> = passages
        .into_iter()
        .map(|p| PreviewPassage {
            tokens: odqa_core::text::count_size_tokens(&p.text, lang),
            start: text[..p.char_span.start].chars().count(),
            end: text[..p.char_span.end].chars().count(),
            passage_id: p.passage_id,
            text: p.text,
        })
        .collect();
    Ok(serde_json::to_string(&out).expect("preview serializes"))
}

/// Indexes `corpus` (paragraphs become documents, then split by `kind`),
/// retrieves `top_k` passages for `question`, reads them with the built-in
/// lexical reader and fuses with weight `alpha` on the rank score.
pub fn search(
    corpus: &str,
    lang: &str,
    kind: &str,
    size: usize,
    stride: usize,
    question: &str,
    top_k: usize,
    alpha: f64,
) -> Result<String, String> {
    let lang = parse_lang(lang)?;
    let strategy = parse_strategy(kind, size, stride)?;
    let docs: Vec<Document> = corpus
        .split("\n\n")
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(i, p)| Document::new(format!("doc{i:03}"), p, lang))
        .collect();
    if docs.is_empty() {
        return Err("paste some text first".into());
    }
    let snapshot = build_snapshot(docs, strategy, "demo", "live").map_err(|e| e.to_string())?;
    let index = InvertedIndex::build(&snapshot, Bm25Params::default()).map_err(|e| e.to_string())?;
    let list = index.query("demo", question, top_k.max(1));

    let answers = if list.entries.is_empty() {
        Vec::new()
    } else {
        let refs: Vec<PassageRef<'_>> = list
            .entries
            .iter()
            .map(|e| PassageRef {
                passage_id: &e.passage_id,
                text: &e.text,
            })
            .collect();
        let read = LexicalReader::new(DEFAULT_MAX_ANSWERS)
            .read("demo", question, &refs)
            .map_err(|e| e.to_string())?;
        let params = FusionParams {
            alpha: alpha.clamp(0.0, 1.0),
            reader_score_type: ReaderScoreType::Probability,
            norm_rank: NormStrategy::ZNorm,
            norm_reader: NormStrategy::ZNorm,
            final_k: 5,
        };
        fuse(&read.candidates, &list, &params, lang).map_err(|e| e.to_string())?
    };
    let result = SearchResult {
        passages: snapshot.passages().len(),
        hits: list
            .entries
            .into_iter()
            .map(|e| Hit {
                passage_id: e.passage_id,
                score: e.score,
                text: e.text,
            })
            .collect(),
        answers,
    };
    Ok(serde_json::to_string(&result).expect("result serializes"))
}

#[wasm_bindgen(js_name = splitPreview)]
pub fn split_preview_js(text: &str, lang: &str, kind: &str, size: usize, stride: usize) -> Result<String, JsValue> {
    split_preview(text, lang, kind, size, stride).map_err(|e| JsValue::from_str(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = search)]
pub fn search_js(
    corpus: &str,
    lang: &str,
    kind: &str,
    size: usize,
    stride: usize,
    question: &str,
    top_k: usize,
    alpha: f64,
) -> Result<String, JsValue> {
    search(corpus, lang, kind, size, stride, question, top_k, alpha).map_err(|e| JsValue::from_str(&e))
}
