//! Language tags and the tokenizers shared by the corpus splitter, the BM25
//! analyzer and the lexical reader.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Supported corpus / dataset languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Zh,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Zh => "zh",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lang {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Lang::En),
            "zh" => Ok(Lang::Zh),
            other => Err(format!("unsupported language `{other}` (expected en or zh)")),
        }
    }
}

/// Byte offsets `[start, end)` into a UTF-8 string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF       // kana
        | 0x3400..=0x4DBF     // CJK ext A
        | 0x4E00..=0x9FFF     // CJK unified
        | 0xAC00..=0xD7AF     // hangul
        | 0xF900..=0xFAFF     // compatibility ideographs
        | 0x20000..=0x2A6DF)
}

/// Size-counting tokens: whitespace-delimited words for English, one token per
/// non-whitespace character for Chinese.
pub fn size_tokens(text: &str, lang: Lang) -> Vec<Span> {
    match lang {
        Lang::En => {
            let mut out = Vec::new();
            let mut start = None;
            for (i, c) in text.char_indices() {
                if c.is_whitespace() {
                    if let Some(s) = start.take() {
                        out.push(Span::new(s, i));
                    }
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                out.push(Span::new(s, text.len()));
            }
            out
        }
        Lang::Zh => text
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .map(|(i, c)| Span::new(i, i + c.len_utf8()))
            .collect(),
    }
}

pub fn count_size_tokens(text: &str, lang: Lang) -> usize {
    match lang {
        Lang::En => text.split_whitespace().count(),
        Lang::Zh => text.chars().filter(|c| !c.is_whitespace()).count(),
    }
}

/// An analyzed term with its position in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub text: String,
    pub span: Span,
}

/// Retrieval analyzer: lowercased alphanumeric runs, with every CJK character
/// emitted as its own unigram. Whitespace and punctuation separate terms.
/// No stemming, no stopwords.
pub fn analyze(text: &str) -> Vec<Term> {
    let mut out = Vec::new();
    let mut run: Option<usize> = None;
    let flush = |out: &mut Vec<Term>, s: usize, e: usize| {
        out.push(Term {
            text: text[s..e].to_lowercase(),
            span: Span::new(s, e),
        });
    };
    for (i, c) in text.char_indices() {
        if is_cjk(c) {
            if let Some(s) = run.take() {
                flush(&mut out, s, i);
            }
            flush(&mut out, i, i + c.len_utf8());
        } else if c.is_alphanumeric() {
            if run.is_none() {
                run = Some(i);
            }
        } else if let Some(s) = run.take() {
            flush(&mut out, s, i);
        }
    }
    if let Some(s) = run {
        flush(&mut out, s, text.len());
    }
    out
}

/// Analyzed term strings only.
pub fn analyze_terms(text: &str) -> Vec<String> {
    analyze(text).into_iter().map(|t| t.text).collect()
}
