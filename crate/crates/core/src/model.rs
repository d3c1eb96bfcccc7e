//! Shared domain types and elementary vector math.
//!
//! All floating-point reductions run in index order so that scores are
//! bit-reproducible regardless of how work is split across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense embedding of one sampled frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEmbedding {
    /// Frame number in the raw recording (row ordinal times the stored stride).
    pub frame_index: u64,
    pub vector: Vec<f32>,
}

/// One OCR text region. `x`/`y` is the top-left corner in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
    pub text: String,
    pub conf: f32,
}

impl TextRegion {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 || self.h == 0 {
            return Err(Error::InvalidArtifact(format!(
                "text region {:?} has zero width or height",
                self.text
            )));
        }
        if !(0.0..=1.0).contains(&self.conf) {
            return Err(Error::InvalidArtifact(format!(
                "text region {:?} has confidence {} outside [0, 1]",
                self.text, self.conf
            )));
        }
        Ok(())
    }
}

/// OCR output for one sampled frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameText {
    pub frame_index: u64,
    pub regions: Vec<TextRegion>,
}

impl FrameText {
    pub fn empty(frame_index: u64) -> Self {
        FrameText {
            frame_index,
            regions: Vec::new(),
        }
    }

    /// Region texts in reading order: top-to-bottom, then left-to-right.
    pub fn texts_in_reading_order(&self) -> Vec<&str> {
        let mut regions: Vec<&TextRegion> = self.regions.iter().collect();
        regions.sort_by_key(|r| (r.y, r.x));
        regions.into_iter().map(|r| r.text.as_str()).collect()
    }
}

/// A video-based bug report: sampled frame embeddings plus per-frame OCR text.
///
/// `texts` always holds exactly one entry per frame, in frame order; frames
/// without recognised text carry an empty region list.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoArtifact {
    video_id: String,
    app_id: String,
    bug_id: String,
    frames: Vec<FrameEmbedding>,
    texts: Vec<FrameText>,
    sample_stride: u32,
}

impl VideoArtifact {
    /// Builds an artifact, filling in empty text for frames that have none.
    ///
    /// Text entries must refer to frame indices present in `frames`.
    pub fn new(
        video_id: impl Into<String>,
        app_id: impl Into<String>,
        bug_id: impl Into<String>,
        frames: Vec<FrameEmbedding>,
        texts: Vec<FrameText>,
        sample_stride: u32,
    ) -> Result<Self> {
        let video_id = video_id.into();
        if frames.is_empty() {
            return Err(Error::InvalidArtifact(format!("video {video_id} has no frames")));
        }
        if sample_stride == 0 {
            return Err(Error::InvalidArtifact(format!("video {video_id} has sample stride 0")));
        }
        let dim = frames[0].vector.len();
        if dim == 0 {
            return Err(Error::InvalidArtifact(format!(
                "video {video_id} has zero-dimensional embeddings"
            )));
        }
        for pair in frames.windows(2) {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(Error::InvalidArtifact(format!(
                    "video {video_id}: frame indices not strictly increasing at {}",
                    pair[1].frame_index
                )));
            }
        }
        for f in &frames {
            if f.vector.len() != dim {
                return Err(Error::InvalidArtifact(format!(
                    "video {video_id}: frame {} has dimension {}, expected {dim}",
                    f.frame_index,
                    f.vector.len()
                )));
            }
        }

        let mut aligned: Vec<FrameText> = frames.iter().map(|f| FrameText::empty(f.frame_index)).collect();
        let mut last: Option<u64> = None;
        for t in texts {
            if last.is_some_and(|l| t.frame_index <= l) {
                return Err(Error::InvalidArtifact(format!(
                    "video {video_id}: text frame indices not strictly increasing at {}",
                    t.frame_index
                )));
            }
            last = Some(t.frame_index);
            for r in &t.regions {
                r.validate()
                    .map_err(|e| Error::InvalidArtifact(format!("video {video_id}: {e}")))?;
            }
            let slot = frames
                .binary_search_by_key(&t.frame_index, |f| f.frame_index)
                .map_err(|_| {
                    Error::InvalidArtifact(format!(
                        "video {video_id}: text refers to frame {} which has no embedding",
                        t.frame_index
                    ))
                })?;
            aligned[slot] = t;
        }

        Ok(VideoArtifact {
            video_id,
            app_id: app_id.into(),
            bug_id: bug_id.into(),
            frames,
            texts: aligned,
            sample_stride,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn app_id(&self) -> &str {
        &self.app_id
    }

    pub fn bug_id(&self) -> &str {
        &self.bug_id
    }

    pub fn frames(&self) -> &[FrameEmbedding] {
        &self.frames
    }

    pub fn texts(&self) -> &[FrameText] {
        &self.texts
    }

    pub fn sample_stride(&self) -> u32 {
        self.sample_stride
    }

    pub fn dim(&self) -> usize {
        self.frames[0].vector.len()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Same video with every embedding scaled by `factor`.
    pub fn scaled(&self, factor: f32) -> VideoArtifact {
        let mut out = self.clone();
        for f in &mut out.frames {
            for x in &mut f.vector {
                *x *= factor;
            }
        }
        out
    }

    pub(crate) fn into_parts(self) -> (String, String, String, Vec<FrameEmbedding>, Vec<FrameText>, u32) {
        (
            self.video_id,
            self.app_id,
            self.bug_id,
            self.frames,
            self.texts,
            self.sample_stride,
        )
    }
}

/// Sparse term-id to weight map, stored sorted by term id.
///
/// Zero weights are never stored and all weights are non-negative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermVector {
    entries: Vec<(u32, f64)>,
}

impl TermVector {
    pub fn new() -> Self {
        TermVector::default()
    }

    /// Collects `(term, weight)` pairs, summing repeated terms.
    ///
    /// Panics on a negative or non-finite weight.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().collect();
        for &(t, w) in &entries {
            assert!(w.is_finite() && w >= 0.0, "term {t} has invalid weight {w}");
        }
        entries.sort_by_key(|&(t, _)| t);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (t, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == t => *acc += w,
                _ => merged.push((t, w)),
            }
        }
        merged.retain(|&(_, w)| w > 0.0);
        TermVector { entries: merged }
    }

    /// Counts occurrences of each term.
    pub fn from_counts(terms: impl IntoIterator<Item = u32>) -> Self {
        TermVector::from_pairs(terms.into_iter().map(|t| (t, 1.0)))
    }

    pub fn get(&self, term: u32) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn contains(&self, term: u32) -> bool {
        self.entries.binary_search_by_key(&term, |&(t, _)| t).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// Applies `f` to every weight; resulting zeros are dropped.
    pub fn map_weights(&self, mut f: impl FnMut(u32, f64) -> f64) -> TermVector {
        TermVector::from_pairs(self.entries.iter().map(|&(t, w)| (t, f(t, w))))
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            let (ta, wa) = self.entries[i];
            let (tb, wb) = other.entries[j];
            match ta.cmp(&tb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// A similarity value clamped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore(0.0);
    pub const ONE: SimilarityScore = SimilarityScore(1.0);

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            SimilarityScore(0.0)
        } else {
            SimilarityScore(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

/// Vectors that support cosine similarity.
pub trait CosineVector {
    fn dot_with(&self, other: &Self) -> f64;
    fn norm_sq(&self) -> f64;
}

impl CosineVector for [f32] {
    /// Panics when the two vectors differ in length.
    fn dot_with(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "cosine over vectors of different dimension");
        self.iter().zip(other).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum()
    }

    fn norm_sq(&self) -> f64 {
        self.iter().map(|&a| f64::from(a) * f64::from(a)).sum()
    }
}

impl CosineVector for [f64] {
    fn dot_with(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "cosine over vectors of different dimension");
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn norm_sq(&self) -> f64 {
        self.iter().map(|a| a * a).sum()
    }
}

impl CosineVector for TermVector {
    fn dot_with(&self, other: &Self) -> f64 {
        self.dot(other)
    }

    fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }
}

/// `dot(a, b) / (|a| |b|)`, or 0 when either vector is all zeros.
pub fn cosine_similarity<V: CosineVector + ?Sized>(a: &V, b: &V) -> f64 {
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let c = a.dot_with(b) / (na.sqrt() * nb.sqrt());
    c.clamp(-1.0, 1.0)
}

/// Cosine similarity with negative values clamped to 0.
pub fn clamped_cosine<V: CosineVector + ?Sized>(a: &V, b: &V) -> SimilarityScore {
    SimilarityScore::new(cosine_similarity(a, b))
}

/// Arithmetic mean accumulated left to right. Empty input gives 0.
pub fn ordered_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for v in values {
        acc += v;
    }
    acc / values.len() as f64
}
