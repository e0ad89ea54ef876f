use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{rank_order, RankedEntry, RankedList, RankerError};
use crate::corpus::CorpusSnapshot;
use crate::text::{analyze_terms, Lang};

/// Okapi BM25 parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RankerError> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(RankerError::InvalidParams(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RankerError::InvalidParams(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// `(doc, tf)` where `doc` is the passage's position in ascending
/// passage_id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Immutable BM25 index. Passages are numbered in ascending passage_id order,
/// so every postings list sorted by `doc` is also sorted by passage_id.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    snapshot_id: String,
    checksum: String,
    lang: Lang,
    params: Bm25Params,
    ids: Vec<String>,
    texts: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    lookup: HashMap<String, u32>,
    postings: HashMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub fn build(snapshot: &CorpusSnapshot, params: Bm25Params) -> Result<Self, RankerError> {
        params.validate()?;
        if snapshot.passages().is_empty() {
            return Err(RankerError::EmptyCorpus);
        }
        let mut ordered: Vec<_> = snapshot.passages().iter().collect();
        ordered.sort_by(|a, b| a.passage_id.cmp(&b.passage_id));

        let mut ids = Vec::with_capacity(ordered.len());
        let mut texts = Vec::with_capacity(ordered.len());
        let mut doc_lengths = Vec::with_capacity(ordered.len());
        let mut lookup = HashMap::with_capacity(ordered.len());
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();

        for (doc, passage) in ordered.into_iter().enumerate() {
            let doc = doc as u32;
            let terms = analyze_terms(&passage.text);
            doc_lengths.push(terms.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc, tf });
            }
            lookup.insert(passage.passage_id.clone(), doc);
            ids.push(passage.passage_id.clone());
            texts.push(passage.text.clone());
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;

        Ok(InvertedIndex {
            snapshot_id: snapshot.snapshot_id().to_string(),
            checksum: snapshot.checksum().to_string(),
            lang: snapshot.lang(),
            params,
            ids,
            texts,
            doc_lengths,
            avg_doc_length,
            lookup,
            postings,
        })
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    /// Checksum of the snapshot this index was built from.
    pub fn snapshot_checksum(&self) -> &str {
        &self.checksum
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn passage_count(&self) -> usize {
        self.ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_length(&self, passage_id: &str) -> Option<u32> {
        self.lookup.get(passage_id).map(|&d| self.doc_lengths[d as usize])
    }

    pub fn passage_text(&self, passage_id: &str) -> Option<&str> {
        self.lookup.get(passage_id).map(|&d| self.texts[d as usize].as_str())
    }

    pub fn passage_ids(&self) -> &[String] {
        &self.ids
    }

    /// Postings for `term` (already analyzed); empty when the term is unseen.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// `ln(1 + (N - n + 0.5) / (n + 0.5))`; `None` for unseen terms.
    pub fn idf(&self, term: &str) -> Option<f64> {
        let n = self.document_frequency(term);
        (n > 0).then(|| idf(self.passage_count(), n))
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = tf as f64;
        let len_ratio = if self.avg_doc_length > 0.0 {
            self.doc_lengths[doc as usize] as f64 / self.avg_doc_length
        } else {
            0.0
        };
        idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len_ratio))
    }

    /// BM25 of one passage, summed over `query_terms` as given (duplicates
    /// count once per occurrence).
    pub fn bm25_score(&self, query_terms: &[String], passage_id: &str) -> Result<f64, RankerError> {
        let doc = *self
            .lookup
            .get(passage_id)
            .ok_or_else(|| RankerError::UnknownPassage(passage_id.to_string()))?;
        let mut score = 0.0;
        for term in query_terms {
            let list = self.postings(term);
            if let Ok(i) = list.binary_search_by_key(&doc, |p| p.doc) {
                score += self.term_weight(idf(self.passage_count(), list.len()), list[i].tf, doc);
            }
        }
        Ok(score)
    }

    /// Top-`k` passages for a question. The question is analyzed and its
    /// distinct terms scored term-at-a-time over their postings, so only
    /// passages sharing at least one term are candidates.
    pub fn query(&self, question_id: &str, question: &str, k: usize) -> RankedList {
        let mut seen = HashSet::new();
        let terms: Vec<String> = analyze_terms(question)
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .collect();
        self.query_terms(question_id, &terms, k)
    }

    /// Like [`query`](Self::query) but over pre-analyzed terms, used as given.
    pub fn query_terms(&self, question_id: &str, terms: &[String], k: usize) -> RankedList {
        let mut list = RankedList::new(question_id, k);
        if k == 0 {
            return list;
        }
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = idf(self.passage_count(), postings.len());
            for p in postings {
                *acc.entry(p.doc).or_insert(0.0) += self.term_weight(idf, p.tf, p.doc);
            }
        }
        let mut hits: Vec<(u32, f64)> = acc.into_iter().collect();
        // Doc numbers follow passage_id order, so comparing them is the tie-break.
        let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, order);
            hits.truncate(k);
        }
        hits.sort_unstable_by(order);
        list.entries = hits
            .into_iter()
            .map(|(doc, score)| RankedEntry {
                passage_id: self.ids[doc as usize].clone(),
                score,
                text: self.texts[doc as usize].clone(),
            })
            .collect();
        debug_assert!(list.entries.windows(2).all(|w| rank_order(&w[0], &w[1]).is_lt()));
        list
    }
}

pub(crate) fn idf(passage_count: usize, df: usize) -> f64 {
    let n = passage_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}
