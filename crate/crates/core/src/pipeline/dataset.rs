//! Newline-delimited dataset records: `{"id", "question", "answers": [...], "lang"}`.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{normalize_answer, QAExample};
use crate::text::Lang;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub answers: Vec<String>,
    #[serde(default)]
    pub lang: Option<Lang>,
}

impl From<&QAExample> for DatasetRecord {
    fn from(ex: &QAExample) -> Self {
        DatasetRecord {
            id: ex.question_id.clone(),
            question: ex.question.clone(),
            answers: ex.gold_answers.clone(),
            lang: Some(ex.lang),
        }
    }
}

fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, DatasetRecord), DatasetError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(
            serde_json::from_str(&line)
                .map(|r| (i + 1, r))
                .map_err(|e| DatasetError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                }),
        )
    })
}

/// Reads QA examples. Every record needs at least one gold answer that is
/// non-empty after normalization; a missing `lang` falls back to `default_lang`.
pub fn read_dataset<R: BufRead>(reader: R, default_lang: Lang) -> Result<Vec<QAExample>, DatasetError> {
    let mut out = Vec::new();
    for rec in records(reader) {
        let (line, r) = rec?;
        let lang = r.lang.unwrap_or(default_lang);
        if r.answers.is_empty() {
            return Err(DatasetError::Malformed {
                line,
                message: format!("question `{}` has no gold answers", r.id),
            });
        }
        if let Some(bad) = r.answers.iter().find(|a| normalize_answer(a, lang).is_empty()) {
            return Err(DatasetError::Malformed {
                line,
                message: format!("gold answer `{bad}` of `{}` is empty after normalization", r.id),
            });
        }
        out.push(QAExample {
            question_id: r.id,
            question: r.question,
            gold_answers: r.answers,
            lang,
        });
    }
    Ok(out)
}

/// Reads `(id, question)` pairs; gold answers are optional here.
pub fn read_questions<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, DatasetError> {
    records(reader).map(|r| r.map(|(_, r)| (r.id, r.question))).collect()
}

pub fn write_dataset(examples: &[QAExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(&DatasetRecord::from(ex)).expect("record serializes"));
        out.push('\n');
    }
    out
}
