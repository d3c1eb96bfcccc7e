//! Order-aware similarity: a weighted soft longest common substring over
//! per-frame vectors, where matches late in both videos count for more.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{clamped_cosine, CosineVector, SimilarityScore, TermVector};

/// Denominator guard for [`seq_similarity`].
pub const DENOMINATOR_EPSILON: f64 = 1e-12;

/// How the best achievable overlap of two videos is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorVariant {
    /// `sum_{i=1..min} (i/min) * ((max - i)/max)`.
    #[default]
    Literal,
    /// `sum_{i=1..min} (i/min) * ((max - min + i)/max)`: the shorter video's
    /// end aligned with the longer video's end.
    EndAligned,
}

impl std::str::FromStr for DenominatorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(DenominatorVariant::Literal),
            "end-aligned" | "end_aligned" => Ok(DenominatorVariant::EndAligned),
            other => Err(Error::InvalidConfig(format!(
                "unknown denominator variant {other:?} (expected literal or end-aligned)"
            ))),
        }
    }
}

impl std::fmt::Display for DenominatorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DenominatorVariant::Literal => "literal",
            DenominatorVariant::EndAligned => "end-aligned",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SeqConfig {
    pub denominator: DenominatorVariant,
    /// A frame pair only matches when its similarity exceeds this threshold.
    pub tau: f64,
}

/// Per-frame representations of one video in one modality.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSequence<'a> {
    /// Raw frame embeddings.
    Visual(Vec<&'a [f32]>),
    /// Per-frame text TF-IDF vectors.
    Textual(Vec<TermVector>),
}

impl FrameSequence<'_> {
    pub fn len(&self) -> usize {
        match self {
            FrameSequence::Visual(v) => v.len(),
            FrameSequence::Textual(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Clamped cosine between every frame pair, `m x n` row-major.
fn pairwise<T: CosineVector + ?Sized>(a: &[&T], b: &[&T]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(clamped_cosine(*x, *y).value());
        }
    }
    out
}

fn similarity_matrix(a: &FrameSequence<'_>, b: &FrameSequence<'_>) -> Result<Vec<f64>> {
    match (a, b) {
        (FrameSequence::Visual(x), FrameSequence::Visual(y)) => {
            let dim = x[0].len();
            if let Some(bad) = x.iter().chain(y).find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: bad.len(),
                });
            }
            Ok(pairwise::<[f32]>(x, y))
        }
        (FrameSequence::Textual(x), FrameSequence::Textual(y)) => {
            let (x, y): (Vec<&TermVector>, Vec<&TermVector>) = (x.iter().collect(), y.iter().collect());
            Ok(pairwise::<TermVector>(&x, &y))
        }
        _ => Err(Error::InvalidConfig("cannot align visual and textual sequences".into())),
    }
}

/// Weighted soft LCS over a precomputed `m x n` similarity matrix.
///
/// `M[i][j] = sigma(i,j) * (i/m) * (j/n) + M[i-1][j-1]` when `sigma(i,j) > tau`,
/// else 0 (1-based `i`, `j`); the result is the largest cell.
pub fn weighted_lcs_from_matrix(sim: &[f64], m: usize, n: usize, tau: f64) -> f64 {
    assert_eq!(sim.len(), m * n, "similarity matrix shape");
    let mut prev = vec![0f64; n + 1];
    let mut cur = vec![0f64; n + 1];
    let mut best = 0f64;
    for i in 1..=m {
        let wi = i as f64 / m as f64;
        for j in 1..=n {
            let s = sim[(i - 1) * n + (j - 1)];
            cur[j] = if s > tau {
                // weight computed first so the transposed problem rounds identically
                let weight = wi * (j as f64 / n as f64);
                s * weight + prev[j - 1]
            } else {
                0.0
            };
            best = best.max(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

pub fn weighted_lcs(a: &FrameSequence<'_>, b: &FrameSequence<'_>, tau: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArtifact("sequence has no frames".into()));
    }
    let sim = similarity_matrix(a, b)?;
    Ok(weighted_lcs_from_matrix(&sim, a.len(), b.len(), tau))
}

/// Largest achievable overlap for videos of lengths `min <= max`.
pub fn max_wlcs(min: usize, max: usize, variant: DenominatorVariant) -> f64 {
    assert!(
        1 <= min && min <= max,
        "max_wlcs needs 1 <= min <= max, got {min}, {max}"
    );
    let (mn, mx) = (min as f64, max as f64);
    (1..=min)
        .map(|i| {
            let i = i as f64;
            let later = match variant {
                DenominatorVariant::Literal => mx - i,
                DenominatorVariant::EndAligned => mx - mn + i,
            };
            (i / mn) * (later / mx)
        })
        .sum()
}

/// `w-LCS / max w-LCS`, clamped to `[0, 1]`; 0 when the denominator vanishes.
pub fn seq_similarity(a: &FrameSequence<'_>, b: &FrameSequence<'_>, cfg: &SeqConfig) -> Result<SimilarityScore> {
    let wlcs = weighted_lcs(a, b, cfg.tau)?;
    let (m, n) = (a.len(), b.len());
    let denom = max_wlcs(m.min(n), m.max(n), cfg.denominator);
    if denom <= DENOMINATOR_EPSILON {
        return Ok(SimilarityScore::ZERO);
    }
    Ok(SimilarityScore::new((wlcs / denom).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vis(v: &[Vec<f32>]) -> FrameSequence<'_> {
        FrameSequence::Visual(v.iter().map(|x| x.as_slice()).collect())
    }

    #[test]
    fn wlcs_examples() {
        let one = vec![vec![1.0f32, 0.0]];
        assert_eq!(weighted_lcs(&vis(&one), &vis(&one), 0.0).unwrap(), 1.0);

        let two = vec![vec![1.0f32, 0.0], vec![1.0, 0.0]];
        assert!((weighted_lcs(&vis(&two), &vis(&two), 0.0).unwrap() - 1.25).abs() < 1e-12);

        let a = vec![vec![1.0f32, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0f32, 1.0], vec![0.0, 2.0], vec![-1.0, 0.0]];
        assert_eq!(weighted_lcs(&vis(&a), &vis(&b), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn wlcs_rejects_empty_and_mixed() {
        let one = vec![vec![1.0f32]];
        assert!(weighted_lcs(&vis(&one), &vis(&[]), 0.0).is_err());
        let text = FrameSequence::Textual(vec![TermVector::from_counts([1])]);
        assert!(weighted_lcs(&vis(&one), &text, 0.0).is_err());
        let two_d = vec![vec![1.0f32, 0.0]];
        assert!(weighted_lcs(&vis(&one), &vis(&two_d), 0.0).is_err());
    }

    #[test]
    fn max_wlcs_examples() {
        assert_eq!(max_wlcs(2, 2, DenominatorVariant::Literal), 0.25);
        assert_eq!(max_wlcs(2, 2, DenominatorVariant::EndAligned), 1.25);
        assert_eq!(max_wlcs(1, 1, DenominatorVariant::Literal), 0.0);
        assert_eq!(max_wlcs(1, 1, DenominatorVariant::EndAligned), 1.0);
    }

    #[test]
    fn seq_similarity_examples() {
        let two = vec![vec![1.0f32, 0.0], vec![1.0, 0.0]];
        let end = SeqConfig {
            denominator: DenominatorVariant::EndAligned,
            tau: 0.0,
        };
        assert_eq!(seq_similarity(&vis(&two), &vis(&two), &end).unwrap().value(), 1.0);
        let lit = SeqConfig::default();
        assert_eq!(seq_similarity(&vis(&two), &vis(&two), &lit).unwrap().value(), 1.0);

        let one = vec![vec![1.0f32, 0.0]];
        assert_eq!(seq_similarity(&vis(&one), &vis(&one), &lit).unwrap().value(), 0.0);
        assert_eq!(seq_similarity(&vis(&one), &vis(&one), &end).unwrap().value(), 1.0);

        let orth = vec![vec![0.0f32, 1.0], vec![0.0, 1.0]];
        assert_eq!(seq_similarity(&vis(&two), &vis(&orth), &end).unwrap().value(), 0.0);
    }

    #[test]
    fn tau_gates_matches() {
        let a = vec![vec![1.0f32, 0.0]];
        let b = vec![vec![1.0f32, 1.0]];
        let s = weighted_lcs(&vis(&a), &vis(&b), 0.0).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(weighted_lcs(&vis(&a), &vis(&b), 0.8).unwrap(), 0.0);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "literal".parse::<DenominatorVariant>().unwrap(),
            DenominatorVariant::Literal
        );
        assert_eq!(
            "end-aligned".parse::<DenominatorVariant>().unwrap(),
            DenominatorVariant::EndAligned
        );
        assert!("other".parse::<DenominatorVariant>().is_err());
        assert_eq!(DenominatorVariant::EndAligned.to_string(), "end-aligned");
    }

    #[test]
    fn textual_sequences() {
        let a = FrameSequence::Textual(vec![TermVector::new(), TermVector::from_counts([3, 4])]);
        let b = FrameSequence::Textual(vec![TermVector::from_counts([3, 4])]);
        // only frame 2 of a matches frame 1 of b: 1 * (2/2) * (1/1)
        assert!((weighted_lcs(&a, &b, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn later_matches_weigh_more(m in 2usize..8, n in 2usize..8, s in 0.01f64..1.0, i in 0usize..7, j in 0usize..7) {
            let (i, j) = (i % (m - 1), j % (n - 1));
            let single = |ii: usize, jj: usize| {
                let mut sim = vec![0.0; m * n];
                sim[ii * n + jj] = s;
                weighted_lcs_from_matrix(&sim, m, n, 0.0)
            };
            prop_assert!(single(i + 1, j + 1) >= single(i, j));
        }

        #[test]
        fn symmetric_and_bounded(
            a in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 3), 1..7),
            b in prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 3), 1..7),
            end in any::<bool>(),
        ) {
            let cfg = SeqConfig {
                denominator: if end { DenominatorVariant::EndAligned } else { DenominatorVariant::Literal },
                tau: 0.0,
            };
            let ab = seq_similarity(&vis(&a), &vis(&b), &cfg).unwrap().value();
            let ba = seq_similarity(&vis(&b), &vis(&a), &cfg).unwrap().value();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
