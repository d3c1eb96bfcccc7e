//! On-screen text: preprocessing, per-video documents, and vector-space scoring.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{SimilarityScore, TermVector, VideoArtifact};

const STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const LEMMAS: &str = include_str!("../data/lemmas_en.tsv");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn lemma_table() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        LEMMAS
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Lemma from the bundled table; unknown tokens are returned unchanged.
pub fn lemmatize(token: &str) -> &str {
    lemma_table().get(token).copied().unwrap_or(token)
}

/// Splits on non-alphanumeric characters, lowercases, drops non-ASCII
/// characters and stopwords, and lemmatizes.
pub fn preprocess(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .map(|t| {
            t.chars()
                .filter(char::is_ascii)
                .collect::<String>()
                .to_ascii_lowercase()
        })
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(|t| lemmatize(&t).to_string())
        .filter(|t| !is_stopword(t))
        .collect()
}

/// String interner shared by all documents that are compared with each other.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    pub fn intern(&mut self, term: &str) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term.to_string());
        self.ids.insert(term.to_string(), id);
        id
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Preprocessed text of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct TextDocument {
    pub video_id: String,
    /// Tokens over all frames, in frame order then reading order.
    pub tokens: Vec<String>,
    pub term_counts: TermVector,
    /// Term counts of each frame, one entry per frame.
    pub frame_counts: Vec<TermVector>,
}

impl TextDocument {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Debug dump with terms spelled out.
    pub fn dump(&self, vocab: &Vocabulary) -> TextDocumentDump {
        TextDocumentDump {
            video_id: self.video_id.clone(),
            tokens: self.tokens.clone(),
            term_counts: self
                .term_counts
                .iter()
                .map(|(t, c)| (vocab.term(t).to_string(), c as u64))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextDocumentDump {
    pub video_id: String,
    pub tokens: Vec<String>,
    pub term_counts: BTreeMap<String, u64>,
}

pub fn build_document(video: &VideoArtifact, vocab: &mut Vocabulary) -> TextDocument {
    let mut tokens = Vec::new();
    let mut frame_counts = Vec::with_capacity(video.texts().len());
    for frame in video.texts() {
        let mut ids = Vec::new();
        for text in frame.texts_in_reading_order() {
            for tok in preprocess(text) {
                ids.push(vocab.intern(&tok));
                tokens.push(tok);
            }
        }
        frame_counts.push(TermVector::from_counts(ids));
    }
    let term_counts = TermVector::from_counts(tokens.iter().map(|t| vocab.id(t).expect("interned above")));
    TextDocument {
        video_id: video.video_id().to_string(),
        tokens,
        term_counts,
        frame_counts,
    }
}

/// Document frequencies over a set of indexed documents.
#[derive(Debug, Clone)]
pub struct TextCorpusIndex {
    documents: BTreeMap<String, Arc<TextDocument>>,
    doc_freq: BTreeMap<u32, u64>,
}

impl TextCorpusIndex {
    pub fn new(documents: impl IntoIterator<Item = Arc<TextDocument>>) -> Result<Self> {
        let mut docs = BTreeMap::new();
        for d in documents {
            let id = d.video_id.clone();
            if docs.insert(id.clone(), d).is_some() {
                return Err(Error::DuplicateVideoId(id));
            }
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut doc_freq = BTreeMap::new();
        for d in docs.values() {
            for t in d.term_counts.terms() {
                *doc_freq.entry(t).or_insert(0u64) += 1;
            }
        }
        Ok(TextCorpusIndex {
            documents: docs,
            doc_freq,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn doc_freq(&self, term: u32) -> u64 {
        self.doc_freq.get(&term).copied().unwrap_or(0)
    }

    pub fn document(&self, video_id: &str) -> Option<&TextDocument> {
        self.documents.get(video_id).map(Arc::as_ref)
    }

    pub fn documents(&self) -> impl Iterator<Item = &TextDocument> {
        self.documents.values().map(Arc::as_ref)
    }

    /// `1 + ln(N / (df + 1))`.
    pub fn idf(&self, term: u32) -> f64 {
        1.0 + (self.doc_count() as f64 / (self.doc_freq(term) as f64 + 1.0)).ln()
    }

    /// Unnormalized vector-space score of `doc` for `query`:
    /// `sum over shared terms of sqrt(tf_d) * idf^2 / sqrt(|d|)`, times the
    /// fraction of distinct query terms that `doc` contains.
    pub fn raw_score(&self, query: &TextDocument, doc: &TextDocument) -> f64 {
        let distinct_q = query.term_counts.len();
        if distinct_q == 0 || doc.is_empty() {
            return 0.0;
        }
        let length_norm = 1.0 / (doc.token_count() as f64).sqrt();
        let mut sum = 0.0;
        let mut shared = 0usize;
        for t in query.term_counts.terms() {
            let tf = doc.term_counts.get(t);
            if tf > 0.0 {
                let idf = self.idf(t);
                sum += tf.sqrt() * idf * idf * length_norm;
                shared += 1;
            }
        }
        sum * (shared as f64 / distinct_q as f64)
    }

    /// Scores of every indexed document other than the query itself,
    /// divided by the largest of them. Returned in video id order.
    pub fn normalized_scores(&self, query: &TextDocument) -> Vec<(&str, SimilarityScore)> {
        let raw: Vec<(&str, f64)> = self
            .documents
            .iter()
            .filter(|(id, _)| **id != query.video_id)
            .map(|(id, d)| (id.as_str(), self.raw_score(query, d)))
            .collect();
        let max = raw.iter().map(|&(_, s)| s).fold(0.0, f64::max);
        raw.into_iter()
            .map(|(id, s)| {
                let v = if max > 0.0 { s / max } else { 0.0 };
                (id, SimilarityScore::new(v))
            })
            .collect()
    }

    /// Per-frame TF-IDF vectors (`sqrt(tf) * idf`) of a document.
    pub fn frame_vectors(&self, doc: &TextDocument) -> Vec<TermVector> {
        doc.frame_counts
            .iter()
            .map(|c| c.map_weights(|t, tf| tf.sqrt() * self.idf(t)))
            .collect()
    }
}

/// Textual similarity of `doc` to `query`, max-normalized over the index.
pub fn textual_similarity(
    query: &TextDocument,
    doc: &TextDocument,
    index: &TextCorpusIndex,
) -> Result<SimilarityScore> {
    if index.document(&doc.video_id).is_none() {
        return Err(Error::UnknownVideo(doc.video_id.clone()));
    }
    Ok(index
        .normalized_scores(query)
        .into_iter()
        .find(|(id, _)| *id == doc.video_id)
        .map(|(_, s)| s)
        .unwrap_or(SimilarityScore::ZERO))
}
