use crate::text::{Lang, Span};

fn is_terminator(c: char, lang: Lang) -> bool {
    match lang {
        Lang::En => matches!(c, '.' | '!' | '?'),
        Lang::Zh => matches!(c, '。' | '！' | '？'),
    }
}

/// Splits `text` into sentences.
///
/// English breaks after `.`, `!` or `?` when followed by whitespace or the end
/// of text. Chinese breaks after `。`, `！` or `？` unconditionally. A run of
/// terminators stays with the sentence it closes. Spans are trimmed of
/// surrounding whitespace; abbreviations are not special-cased.
pub fn segment_sentences(text: &str, lang: Lang) -> Vec<(String, Span)> {
    let mut out = Vec::new();
    let mut push = |start: usize, end: usize| {
        let raw = &text[start..end];
        let lead = raw.len() - raw.trim_start().len();
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let s = start + lead;
            let span = Span::new(s, s + trimmed.len());
            out.push((trimmed.to_string(), span));
        }
    };

    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c, lang) {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = chars.peek() {
            if is_terminator(d, lang) {
                end = j + d.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let boundary = match lang {
            Lang::En => chars.peek().is_none_or(|&(_, d)| d.is_whitespace()),
            Lang::Zh => true,
        };
        if boundary {
            push(start, end);
            start = end;
        }
    }
    push(start, text.len());
    out
}
