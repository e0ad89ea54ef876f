//! Ranking cache wire format.
//!
//! ```json
//! {"_meta": {"snapshot_id": "en-wiki-2016", "ranker": "bm25", "depth": 50},
//!  "<question_id>": [{"score": 42.86, "answer": "<passage text>", "passage_id": "d#0"}, ...]}
//! ```
//!
//! Arrays are ordered by descending score. `_meta` and `passage_id` are
//! optional on read so bare `{question_id: [{score, answer}]}` files load.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RankedEntry, RankedList, RankerError};

pub const META_KEY: &str = "_meta";

#[derive(Debug, Clone, PartialEq)]
pub struct RankingCache {
    pub snapshot_id: String,
    pub ranker: String,
    pub depth: usize,
    results: BTreeMap<String, RankedList>,
}

impl RankingCache {
    pub fn new(snapshot_id: impl Into<String>, ranker: impl Into<String>, depth: usize) -> Self {
        RankingCache {
            snapshot_id: snapshot_id.into(),
            ranker: ranker.into(),
            depth,
            results: BTreeMap::new(),
        }
    }

    /// Adds a list, stamping its `k` with the cache depth.
    pub fn insert(&mut self, mut list: RankedList) -> Result<(), RankerError> {
        if list.question_id == META_KEY {
            return Err(RankerError::MalformedCache {
                question_id: list.question_id,
                message: "question id collides with the metadata key".into(),
            });
        }
        if list.entries.len() > self.depth {
            return Err(RankerError::DepthExceeded {
                question_id: list.question_id,
                len: list.entries.len(),
                depth: self.depth,
            });
        }
        list.k = self.depth;
        self.results.insert(list.question_id.clone(), list);
        Ok(())
    }

    pub fn get(&self, question_id: &str) -> Option<&RankedList> {
        self.results.get(question_id)
    }

    pub fn results(&self) -> &BTreeMap<String, RankedList> {
        &self.results
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_cache(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// SHA-256 of the serialized form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct WireMeta {
    snapshot_id: String,
    ranker: String,
    depth: usize,
}

#[derive(Serialize, Deserialize)]
struct WireEntry<'a> {
    score: f64,
    #[serde(borrow)]
    answer: std::borrow::Cow<'a, str>,
    #[serde(default, skip_serializing_if = "Option::is_none", borrow)]
    passage_id: Option<std::borrow::Cow<'a, str>>,
}

struct WireList<'a>(&'a [RankedEntry]);

impl Serialize for WireList<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|e| WireEntry {
            score: e.score,
            answer: e.text.as_str().into(),
            passage_id: Some(e.passage_id.as_str().into()),
        }))
    }
}

impl Serialize for RankingCache {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.results.len() + 1))?;
        map.serialize_entry(
            META_KEY,
            &WireMeta {
                snapshot_id: self.snapshot_id.clone(),
                ranker: self.ranker.clone(),
                depth: self.depth,
            },
        )?;
        for (qid, list) in &self.results {
            map.serialize_entry(qid, &WireList(&list.entries))?;
        }
        map.end()
    }
}

/// Writes the cache as one JSON object, questions in ascending id order.
pub fn write_cache<W: Write>(cache: &RankingCache, mut dest: W) -> Result<(), RankerError> {
    for list in cache.results.values() {
        if list.entries.len() > cache.depth {
            return Err(RankerError::DepthExceeded {
                question_id: list.question_id.clone(),
                len: list.entries.len(),
                depth: cache.depth,
            });
        }
    }
    serde_json::to_writer(&mut dest, cache).map_err(|e| RankerError::Io(e.into()))?;
    dest.write_all(b"\n")?;
    Ok(())
}

pub fn read_cache<R: Read>(mut source: R) -> Result<RankingCache, RankerError> {
    let mut raw = String::new();
    source.read_to_string(&mut raw)?;
    parse_cache(&raw)
}

fn malformed(question_id: &str, message: impl Into<String>) -> RankerError {
    RankerError::MalformedCache {
        question_id: question_id.to_string(),
        message: message.into(),
    }
}

fn parse_cache(raw: &str) -> Result<RankingCache, RankerError> {
    let top: BTreeMap<String, &serde_json::value::RawValue> =
        serde_json::from_str(raw).map_err(|e| malformed("", e.to_string()))?;

    let meta = match top.get(META_KEY) {
        Some(v) => Some(
            serde_json::from_str::<WireMeta>(v.get()).map_err(|e| malformed(META_KEY, e.to_string()))?,
        ),
        None => None,
    };

    let mut results = BTreeMap::new();
    for (qid, value) in &top {
        if qid == META_KEY {
            continue;
        }
        let wire: Vec<WireEntry> = serde_json::from_str(value.get()).map_err(|e| malformed(qid, e.to_string()))?;
        let mut entries = Vec::with_capacity(wire.len());
        for (rank, e) in wire.into_iter().enumerate() {
            if !e.score.is_finite() {
                return Err(malformed(qid, format!("non-finite score at rank {}", rank + 1)));
            }
            entries.push(RankedEntry {
                passage_id: e
                    .passage_id
                    .map(|p| p.into_owned())
                    .unwrap_or_else(|| format!("{qid}@{}", rank + 1)),
                score: e.score,
                text: e.answer.into_owned(),
            });
        }
        if let Some(w) = entries.windows(2).position(|w| w[0].score < w[1].score) {
            return Err(malformed(qid, format!("scores not descending at rank {}", w + 2)));
        }
        results.insert(qid.clone(), entries);
    }

    let (snapshot_id, ranker, depth) = match meta {
        Some(m) => (m.snapshot_id, m.ranker, m.depth),
        None => (
            String::new(),
            "unknown".to_string(),
            results.values().map(Vec::len).max().unwrap_or(0),
        ),
    };
    let mut cache = RankingCache::new(snapshot_id, ranker, depth);
    for (qid, entries) in results {
        if entries.len() > depth {
            return Err(malformed(&qid, format!("{} entries exceed depth {depth}", entries.len())));
        }
        cache.insert(RankedList {
            question_id: qid,
            entries,
            k: depth,
        })?;
    }
    Ok(cache)
}
