//! On-disk artifact formats, the dataset manifest, and loading.

mod embedding;
mod manifest;
mod ocr;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use embedding::{EmbeddingFile, EMBEDDING_HEADER_LEN, EMBEDDING_MAGIC, EMBEDDING_VERSION};
pub use manifest::{
    load_manifest, write_manifest, AppEntry, BugEntry, DatasetManifest, ManifestDocument, VideoEntry, VideoRef,
    VIDEOS_PER_BUG,
};
pub use ocr::{format_ocr, parse_ocr, read_ocr, write_ocr};

use crate::error::{Error, Result};
use crate::model::VideoArtifact;

/// Loads one video's embeddings and OCR text.
pub fn read_video_artifact(manifest: &DatasetManifest, video_id: &str) -> Result<VideoArtifact> {
    let r = manifest.video(video_id)?;
    let emb = EmbeddingFile::read(&r.embeddings)?;
    let texts = read_ocr(&r.ocr)?;
    VideoArtifact::new(
        r.video_id.clone(),
        r.app_id.clone(),
        r.bug_id.clone(),
        emb.to_frames(),
        texts,
        emb.sample_stride,
    )
    .map_err(|e| match e {
        Error::InvalidArtifact(msg) => Error::format(&r.ocr, msg),
        other => other,
    })
}

/// Keeps every frame whose raw frame number is a multiple of `stride`.
///
/// `stride` must be a multiple of the artifact's stored stride.
pub fn resample(artifact: &VideoArtifact, stride: u32) -> Result<VideoArtifact> {
    let stored = artifact.sample_stride();
    if stride == 0 || !stride.is_multiple_of(stored) {
        return Err(Error::Stride {
            stored,
            requested: stride,
        });
    }
    if stride == stored {
        return Ok(artifact.clone());
    }
    let step = (stride / stored) as usize;
    let (video_id, app_id, bug_id, frames, texts, _) = artifact.clone().into_parts();
    let frames: Vec<_> = frames.into_iter().step_by(step).collect();
    let texts: Vec<_> = texts.into_iter().step_by(step).collect();
    VideoArtifact::new(video_id, app_id, bug_id, frames, texts, stride)
}

/// All videos of a manifest, keyed by id, with a common embedding dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    videos: BTreeMap<String, VideoArtifact>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset from already-loaded videos, checking dimensions agree.
    pub fn from_videos(videos: impl IntoIterator<Item = VideoArtifact>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for v in videos {
            match dim {
                None => dim = Some(v.dim()),
                Some(d) if d != v.dim() => {
                    return Err(Error::DatasetDimension {
                        video_id: v.video_id().to_string(),
                        expected: d,
                        actual: v.dim(),
                    })
                }
                _ => {}
            }
            let id = v.video_id().to_string();
            if map.insert(id.clone(), v).is_some() {
                return Err(Error::DuplicateVideoId(id));
            }
        }
        let dim = dim.ok_or(Error::EmptyCorpus)?;
        Ok(Dataset { videos: map, dim })
    }

    pub fn get(&self, video_id: &str) -> Result<&VideoArtifact> {
        self.videos
            .get(video_id)
            .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Videos in id order.
    pub fn iter(&self) -> impl Iterator<Item = &VideoArtifact> {
        self.videos.values()
    }
}

/// Loads the listed videos in parallel, optionally resampling each to `stride`.
pub fn load_videos(manifest: &DatasetManifest, video_ids: &[&str], stride: Option<u32>) -> Result<Dataset> {
    let loaded: Vec<VideoArtifact> = video_ids
        .par_iter()
        .map(|id| {
            let v = read_video_artifact(manifest, id)?;
            match stride {
                Some(s) => resample(&v, s),
                None => Ok(v),
            }
        })
        .collect::<Result<_>>()?;
    Dataset::from_videos(loaded)
}

/// Loads every video in the manifest.
pub fn load_dataset(manifest: &DatasetManifest, stride: Option<u32>) -> Result<Dataset> {
    load_videos(manifest, &manifest.video_ids(), stride)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrameEmbedding, FrameText, TextRegion};

    fn raw_video(n: u64) -> VideoArtifact {
        let frames = (0..n)
            .map(|i| FrameEmbedding {
                frame_index: i,
                vector: vec![i as f32, 1.0],
            })
            .collect();
        let texts = [FrameText {
            frame_index: 6,
            regions: vec![TextRegion {
                x: 0,
                y: 0,
                w: 4,
                h: 4,
                text: "six".into(),
                conf: 1.0,
            }],
        }]
        .into_iter()
        .filter(|t| t.frame_index < n)
        .collect();
        VideoArtifact::new("v", "a", "b", frames, texts, 1).unwrap()
    }

    fn indices(v: &VideoArtifact) -> Vec<u64> {
        v.frames().iter().map(|f| f.frame_index).collect()
    }

    #[test]
    fn resample_every_sixth_frame() {
        let r = resample(&raw_video(12), 6).unwrap();
        assert_eq!(indices(&r), vec![0, 6]);
        assert_eq!(r.sample_stride(), 6);
        assert_eq!(r.texts()[1].regions[0].text, "six");

        let r = resample(&raw_video(7), 6).unwrap();
        assert_eq!(indices(&r), vec![0, 6]);
    }

    #[test]
    fn resample_identity_and_errors() {
        let v = raw_video(5);
        assert_eq!(resample(&v, 1).unwrap(), v);
        let six = resample(&raw_video(30), 6).unwrap();
        assert!(matches!(resample(&six, 4), Err(Error::Stride { .. })));
        assert_eq!(indices(&resample(&six, 12).unwrap()), vec![0, 12, 24]);
        assert!(resample(&v, 0).is_err());
    }

    #[test]
    fn dataset_rejects_mixed_dimensions() {
        let a = raw_video(2);
        let b = VideoArtifact::new(
            "w",
            "a",
            "b",
            vec![FrameEmbedding {
                frame_index: 0,
                vector: vec![1.0, 2.0, 3.0],
            }],
            vec![],
            1,
        )
        .unwrap();
        assert!(matches!(
            Dataset::from_videos([a, b]),
            Err(Error::DatasetDimension { ref video_id, .. }) if video_id == "w"
        ));
    }
}
