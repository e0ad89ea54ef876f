use super::{passage_id, segment_sentences, CorpusError, Document, Passage, SplitStrategy};
use crate::text::{count_size_tokens, size_tokens, Lang, Span};

/// Cuts one document into passages under `strategy`.
pub fn split_document(doc: &Document, strategy: &SplitStrategy) -> Result<Vec<Passage>, CorpusError> {
    strategy.validate()?;
    let spans = match *strategy {
        SplitStrategy::Sentence => segment_sentences(&doc.text, doc.lang)
            .into_iter()
            .map(|(_, span)| span)
            .collect(),
        SplitStrategy::Paragraph => paragraph_spans(&doc.text),
        SplitStrategy::Chunk { chunk_size, stride } => chunk_spans(&doc.text, doc.lang, chunk_size, stride),
        SplitStrategy::Context { max_tokens } => context_spans(&doc.text, doc.lang, max_tokens),
    };
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(ordinal, span)| Passage {
            passage_id: passage_id(&doc.doc_id, ordinal),
            doc_id: doc.doc_id.clone(),
            text: span.slice(&doc.text).to_string(),
            char_span: span,
            ordinal,
        })
        .collect())
}

/// Maximal runs of non-blank lines; one or more blank lines separate paragraphs.
fn paragraph_spans(text: &str) -> Vec<Span> {
    let mut out = Vec::new();
    let mut current: Option<Span> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            out.extend(current.take());
            continue;
        }
        let lead = line.len() - line.trim_start().len();
        let s = line_start + lead;
        let e = s + trimmed.len();
        current = Some(match current {
            Some(span) => Span::new(span.start, e),
            None => Span::new(s, e),
        });
    }
    out.extend(current);
    out
}

/// Windows of `chunk_size` tokens starting every `stride` tokens. The final
/// window ends at the last token and may be short.
fn chunk_spans(text: &str, lang: Lang, chunk_size: usize, stride: usize) -> Vec<Span> {
    let tokens = size_tokens(text, lang);
    token_windows(tokens.len(), chunk_size, stride)
        .into_iter()
        .map(|(a, b)| Span::new(tokens[a].start, tokens[b - 1].end))
        .collect()
}

/// Token index ranges `[start, end)` for a sliding window over `n` tokens.
pub(crate) fn token_windows(n: usize, size: usize, stride: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut start = 0;
    loop {
        let end = (start + size).min(n);
        out.push((start, end));
        if end == n {
            break;
        }
        start += stride;
    }
    out
}

/// Greedy packing of whole sentences up to `max_tokens`. A sentence longer
/// than the budget becomes a passage of its own.
fn context_spans(text: &str, lang: Lang, max_tokens: usize) -> Vec<Span> {
    let mut out = Vec::new();
    let mut current: Option<(Span, usize)> = None;
    for (sentence, span) in segment_sentences(text, lang) {
        let n = count_size_tokens(&sentence, lang);
        current = match current {
            Some((acc, used)) if used + n <= max_tokens => Some((Span::new(acc.start, span.end), used + n)),
            Some((acc, _)) => {
                out.push(acc);
                Some((span, n))
            }
            None => Some((span, n)),
        };
    }
    out.extend(current.map(|(span, _)| span));
    out
}
