//! TF-IDF over visual words and ensemble-averaged visual similarity.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::{build_bovw, CodebookEnsemble};
use crate::error::{Error, Result};
use crate::model::{cosine_similarity, ordered_mean, SimilarityScore, TermVector, VideoArtifact};

/// Document frequencies of visual words over a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    doc_count: u64,
    doc_freq: BTreeMap<u32, u64>,
}

impl CorpusStats {
    pub fn new(doc_count: u64, doc_freq: BTreeMap<u32, u64>) -> Result<Self> {
        let stats = CorpusStats { doc_count, doc_freq };
        stats.validate()?;
        Ok(stats)
    }

    fn validate(&self) -> Result<()> {
        if self.doc_count == 0 {
            return Err(Error::EmptyCorpus);
        }
        if let Some((w, df)) = self.doc_freq.iter().find(|(_, &df)| df > self.doc_count || df == 0) {
            return Err(Error::InvalidConfig(format!(
                "document frequency {df} of word {w} outside [1, {}]",
                self.doc_count
            )));
        }
        Ok(())
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn doc_freq(&self, word: u32) -> u64 {
        self.doc_freq.get(&word).copied().unwrap_or(0)
    }

    /// Smoothed idf: `ln((N + 1) / (df + 1)) + 1`.
    pub fn idf(&self, word: u32) -> f64 {
        let n = self.doc_count as f64;
        let df = self.doc_freq(word) as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stats: CorpusStats = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        stats.validate().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(stats)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(self).expect("stats serialize");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn compute_corpus_stats(corpus_docs: &[TermVector]) -> Result<CorpusStats> {
    if corpus_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut doc_freq = BTreeMap::new();
    for doc in corpus_docs {
        for w in doc.terms() {
            *doc_freq.entry(w).or_insert(0u64) += 1;
        }
    }
    CorpusStats::new(corpus_docs.len() as u64, doc_freq)
}

/// Raw-count tf times smoothed idf.
pub fn tfidf(bovw: &TermVector, stats: &CorpusStats) -> TermVector {
    bovw.map_weights(|w, tf| tf * stats.idf(w))
}

/// Per-ensemble-member TF-IDF vectors of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualSignature(Vec<TermVector>);

impl VisualSignature {
    pub fn members(&self) -> &[TermVector] {
        &self.0
    }
}

pub fn visual_signature(video: &VideoArtifact, ensemble: &CodebookEnsemble) -> Result<VisualSignature> {
    ensemble
        .members()
        .iter()
        .map(|m| build_bovw(video, &m.codebook).map(|b| tfidf(&b, &m.stats)))
        .collect::<Result<Vec<_>>>()
        .map(VisualSignature)
}

/// Mean over members of the TF-IDF cosine, in member order.
pub fn signature_similarity(a: &VisualSignature, b: &VisualSignature) -> SimilarityScore {
    assert_eq!(a.0.len(), b.0.len(), "signatures from different ensembles");
    let per_member: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| cosine_similarity(x, y)).collect();
    SimilarityScore::new(ordered_mean(&per_member))
}

pub fn visual_similarity(a: &VideoArtifact, b: &VideoArtifact, ensemble: &CodebookEnsemble) -> Result<SimilarityScore> {
    let sa = visual_signature(a, ensemble)?;
    let sb = visual_signature(b, ensemble)?;
    Ok(signature_similarity(&sa, &sb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Codebook, EnsembleMember};
    use crate::model::FrameEmbedding;
    use proptest::prelude::*;

    #[test]
    fn corpus_stats_examples() {
        let docs = [
            TermVector::from_counts([0]),
            TermVector::from_counts([0, 1]),
            TermVector::from_counts([1]),
        ];
        let s = compute_corpus_stats(&docs).unwrap();
        assert_eq!(s.doc_count(), 3);
        assert_eq!((s.doc_freq(0), s.doc_freq(1)), (2, 2));
        assert_eq!(s.doc_freq(9), 0);

        let same = vec![TermVector::from_counts([4, 4]); 5];
        let s = compute_corpus_stats(&same).unwrap();
        assert_eq!(s.doc_freq(4), 5);
        assert!(matches!(compute_corpus_stats(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn tfidf_examples() {
        let stats = CorpusStats::new(3, BTreeMap::from([(7, 1), (8, 3)])).unwrap();
        let v = tfidf(&TermVector::from_pairs([(7, 2.0)]), &stats);
        assert!((v.get(7) - 2.0 * (2f64.ln() + 1.0)).abs() < 1e-12);
        assert!((v.get(7) - 3.386).abs() < 1e-3);
        assert_eq!(stats.idf(8), 1.0);
        assert!(tfidf(&TermVector::new(), &stats).is_empty());
        // unseen words get the largest idf
        assert!(stats.idf(99) > stats.idf(7));
    }

    #[test]
    fn stats_validation() {
        assert!(CorpusStats::new(0, BTreeMap::new()).is_err());
        assert!(CorpusStats::new(2, BTreeMap::from([(1, 3)])).is_err());
    }

    fn video(id: &str, xs: &[f32]) -> VideoArtifact {
        let frames = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| FrameEmbedding {
                frame_index: i as u64,
                vector: vec![x, 1.0],
            })
            .collect();
        VideoArtifact::new(id, "a", "b", frames, vec![], 1).unwrap()
    }

    fn ensemble() -> CodebookEnsemble {
        let stats = CorpusStats::new(10, BTreeMap::from([(0, 2), (1, 5), (2, 9), (3, 1)])).unwrap();
        let m1 = Codebook::from_centroids(
            vec![vec![0.0, 1.0], vec![10.0, 1.0], vec![20.0, 1.0], vec![30.0, 1.0]],
            1,
            "",
        )
        .unwrap();
        let m2 = Codebook::from_centroids(
            vec![vec![5.0, 1.0], vec![15.0, 1.0], vec![25.0, 1.0], vec![35.0, 1.0]],
            2,
            "",
        )
        .unwrap();
        CodebookEnsemble::new(vec![
            EnsembleMember {
                codebook: m1,
                stats: stats.clone(),
            },
            EnsembleMember { codebook: m2, stats },
        ])
        .unwrap()
    }

    #[test]
    fn self_similarity_and_disjoint_support() {
        let ens = ensemble();
        let a = video("a", &[0.0, 11.0, 19.0]);
        assert!((visual_similarity(&a, &a, &ens).unwrap().value() - 1.0).abs() < 1e-12);
        let far = video("b", &[1000.0]);
        let near_zero = video("c", &[-1000.0]);
        assert_eq!(visual_similarity(&far, &near_zero, &ens).unwrap().value(), 0.0);
        let wrong_dim = VideoArtifact::new(
            "d",
            "a",
            "b",
            vec![FrameEmbedding {
                frame_index: 0,
                vector: vec![1.0],
            }],
            vec![],
            1,
        )
        .unwrap();
        assert!(visual_similarity(&a, &wrong_dim, &ens).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            xa in prop::collection::vec(-5.0f32..40.0, 1..8),
            xb in prop::collection::vec(-5.0f32..40.0, 1..8),
        ) {
            let ens = ensemble();
            let (a, b) = (video("a", &xa), video("b", &xb));
            let ab = visual_similarity(&a, &b, &ens).unwrap().value();
            let ba = visual_similarity(&b, &a, &ens).unwrap().value();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((visual_similarity(&a, &a, &ens).unwrap().value() - 1.0).abs() < 1e-12);
        }
    }
}
