//! Duplicate detection for video-based bug reports.
//!
//! Videos arrive as per-frame embeddings plus OCR text. They are compared
//! through bags of visual words, textual vector-space scores and an
//! order-aware weighted LCS, and the combination is evaluated on
//! retrieval tasks with mRR, mAP and a Wilcoxon signed-rank test.

pub mod codebook;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod sequential;
pub mod synth;
pub mod textual;
pub mod visual;

pub use error::{Error, Result};
