use std::fmt::Display;

use super::{rank_order, RankedList, RankerError};
use crate::ranker::RankedEntry;

/// Re-scores every entry with `scorer` and re-sorts (score descending, then
/// passage_id). The entry set is unchanged; the first scorer error aborts.
pub fn rerank<F, E>(list: &RankedList, mut scorer: F) -> Result<RankedList, RankerError>
where
    F: FnMut(&RankedEntry) -> Result<f64, E>,
    E: Display,
{
    let mut entries = Vec::with_capacity(list.entries.len());
    for entry in &list.entries {
        let score = scorer(entry).map_err(|e| RankerError::ScorerFailure {
            passage_id: entry.passage_id.clone(),
            message: e.to_string(),
        })?;
        if score.is_nan() {
            return Err(RankerError::ScorerFailure {
                passage_id: entry.passage_id.clone(),
                message: "scorer returned NaN".into(),
            });
        }
        entries.push(RankedEntry { score, ..entry.clone() });
    }
    entries.sort_by(rank_order);
    Ok(RankedList {
        question_id: list.question_id.clone(),
        entries,
        k: list.k,
    })
}
