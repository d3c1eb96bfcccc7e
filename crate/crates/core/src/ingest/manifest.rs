//! Dataset manifest: a single JSON document listing apps, bugs and videos.
//!
//! ```json
//! {
//!   "artifact_dir": "artifacts",
//!   "apps": [
//!     {"app_id": "app0", "bugs": [
//!       {"bug_id": "bug0", "videos": [
//!         {"video_id": "app0-bug0-v0", "embeddings": "app0/app0-bug0-v0.dvbe", "ocr": "app0/app0-bug0-v0.ocr.jsonl"}
//!       ]}
//!     ]}
//!   ]
//! }
//! ```
//!
//! A relative `artifact_dir` is resolved against the manifest's directory;
//! per-video paths are resolved against `artifact_dir`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Videos per bug the evaluation protocol expects.
pub const VIDEOS_PER_BUG: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDocument {
    pub artifact_dir: PathBuf,
    pub apps: Vec<AppEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppEntry {
    pub app_id: String,
    pub bugs: Vec<BugEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugEntry {
    pub bug_id: String,
    pub videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub embeddings: PathBuf,
    pub ocr: PathBuf,
}

/// Resolved location and ownership of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRef {
    pub video_id: String,
    pub app_id: String,
    pub bug_id: String,
    pub embeddings: PathBuf,
    pub ocr: PathBuf,
}

/// A validated manifest. Read-only after loading.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    document: ManifestDocument,
    artifact_dir: PathBuf,
    videos: BTreeMap<String, VideoRef>,
    warnings: Vec<String>,
}

impl DatasetManifest {
    pub fn from_document(document: ManifestDocument, base_dir: &Path) -> Result<Self> {
        let artifact_dir = if document.artifact_dir.is_absolute() {
            document.artifact_dir.clone()
        } else {
            base_dir.join(&document.artifact_dir)
        };

        let mut warnings = Vec::new();
        let mut videos = BTreeMap::new();
        let mut app_ids = BTreeSet::new();
        for app in &document.apps {
            if !app_ids.insert(app.app_id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate app id {}", app.app_id)));
            }
            let mut bug_ids = BTreeSet::new();
            for bug in &app.bugs {
                if !bug_ids.insert(bug.bug_id.as_str()) {
                    return Err(Error::InvalidConfig(format!(
                        "app {}: duplicate bug id {}",
                        app.app_id, bug.bug_id
                    )));
                }
                if bug.videos.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "app {} bug {} lists no videos",
                        app.app_id, bug.bug_id
                    )));
                }
                if bug.videos.len() != VIDEOS_PER_BUG {
                    let msg = format!(
                        "app {} bug {} has {} videos; evaluation expects {VIDEOS_PER_BUG}",
                        app.app_id,
                        bug.bug_id,
                        bug.videos.len()
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                for v in &bug.videos {
                    let r = VideoRef {
                        video_id: v.video_id.clone(),
                        app_id: app.app_id.clone(),
                        bug_id: bug.bug_id.clone(),
                        embeddings: artifact_dir.join(&v.embeddings),
                        ocr: artifact_dir.join(&v.ocr),
                    };
                    for p in [&r.embeddings, &r.ocr] {
                        if !p.is_file() {
                            return Err(Error::MissingArtifact {
                                video_id: v.video_id.clone(),
                                path: p.clone(),
                            });
                        }
                    }
                    if videos.insert(v.video_id.clone(), r).is_some() {
                        return Err(Error::DuplicateVideoId(v.video_id.clone()));
                    }
                }
            }
        }

        Ok(DatasetManifest {
            document,
            artifact_dir,
            videos,
            warnings,
        })
    }

    pub fn document(&self) -> &ManifestDocument {
        &self.document
    }

    pub fn artifact_dir(&self) -> &Path {
        &self.artifact_dir
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn apps(&self) -> &[AppEntry] {
        &self.document.apps
    }

    pub fn app(&self, app_id: &str) -> Result<&AppEntry> {
        self.document
            .apps
            .iter()
            .find(|a| a.app_id == app_id)
            .ok_or_else(|| Error::UnknownApp(app_id.to_string()))
    }

    pub fn video(&self, video_id: &str) -> Result<&VideoRef> {
        self.videos
            .get(video_id)
            .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))
    }

    /// Video ids in manifest order.
    pub fn video_ids(&self) -> Vec<&str> {
        self.document
            .apps
            .iter()
            .flat_map(|a| &a.bugs)
            .flat_map(|b| &b.videos)
            .map(|v| v.video_id.as_str())
            .collect()
    }

    pub fn video_count(&self) -> usize {
        self.videos.len()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let document: ManifestDocument = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    DatasetManifest::from_document(document, base)
}

pub fn write_manifest(path: impl AsRef<Path>, document: &ManifestDocument) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(document).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
