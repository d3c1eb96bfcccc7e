//! Duplicate-detection task generation.
//!
//! For an app with 10 bugs of 3 videos each, every video serves as a query;
//! for each of the 9 other bugs that can be the fully-included distractor,
//! 3 distinct random draws pick one video of each of the remaining 8 bugs.
//! That gives 30 x 9 x 3 = 810 tasks, each with a 13-video corpus of 2 query
//! duplicates, 3 mutual duplicates of another bug, and 8 singletons.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DatasetManifest, VIDEOS_PER_BUG};

pub const BUGS_PER_APP: usize = 10;
pub const CORPUS_SIZE: usize = 13;
pub const DUPLICATES_PER_TASK: usize = 2;
pub const DRAWS_PER_DISTRACTOR: usize = 3;
pub const TASKS_PER_APP: usize = BUGS_PER_APP * VIDEOS_PER_BUG * (BUGS_PER_APP - 1) * DRAWS_PER_DISTRACTOR;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateTask {
    pub task_id: String,
    pub app_id: String,
    pub query: String,
    pub corpus: Vec<String>,
    pub ground_truth: BTreeSet<String>,
}

fn gen_err(app_id: &str, message: impl Into<String>) -> Error {
    Error::TaskGeneration {
        app_id: app_id.to_string(),
        message: message.into(),
    }
}

/// All 810 tasks of one app, deterministic for a given seed.
pub fn generate_tasks(manifest: &DatasetManifest, app_id: &str, seed: u64) -> Result<Vec<DuplicateTask>> {
    let app = manifest.app(app_id)?;
    if app.bugs.len() != BUGS_PER_APP {
        return Err(gen_err(
            app_id,
            format!("needs exactly {BUGS_PER_APP} bugs, found {}", app.bugs.len()),
        ));
    }
    for b in &app.bugs {
        if b.videos.len() != VIDEOS_PER_BUG {
            return Err(gen_err(
                app_id,
                format!(
                    "bug {} needs exactly {VIDEOS_PER_BUG} videos, found {}",
                    b.bug_id,
                    b.videos.len()
                ),
            ));
        }
    }
    let videos: Vec<Vec<&str>> = app
        .bugs
        .iter()
        .map(|b| b.videos.iter().map(|v| v.video_id.as_str()).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(TASKS_PER_APP);
    for (qb, qvideos) in videos.iter().enumerate() {
        for (qv, &query) in qvideos.iter().enumerate() {
            let duplicates: Vec<&str> = qvideos
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != qv)
                .map(|(_, &v)| v)
                .collect();
            for distractor in (0..BUGS_PER_APP).filter(|&b| b != qb) {
                let singles: Vec<usize> = (0..BUGS_PER_APP).filter(|&b| b != qb && b != distractor).collect();
                let mut draws: Vec<Vec<usize>> = Vec::with_capacity(DRAWS_PER_DISTRACTOR);
                while draws.len() < DRAWS_PER_DISTRACTOR {
                    let pick: Vec<usize> = singles.iter().map(|_| rng.random_range(0..VIDEOS_PER_BUG)).collect();
                    if !draws.contains(&pick) {
                        draws.push(pick);
                    }
                }
                for pick in draws {
                    let mut corpus: Vec<String> = duplicates.iter().map(|s| s.to_string()).collect();
                    corpus.extend(videos[distractor].iter().map(|s| s.to_string()));
                    corpus.extend(singles.iter().zip(&pick).map(|(&b, &v)| videos[b][v].to_string()));
                    corpus.shuffle(&mut rng);
                    tasks.push(DuplicateTask {
                        task_id: format!("{app_id}-{:04}", tasks.len()),
                        app_id: app_id.to_string(),
                        query: query.to_string(),
                        corpus,
                        ground_truth: duplicates.iter().map(|s| s.to_string()).collect(),
                    });
                }
            }
        }
    }
    Ok(tasks)
}

/// Tasks for every app in the manifest, in manifest order.
pub fn generate_all_tasks(manifest: &DatasetManifest, seed: u64) -> Result<Vec<DuplicateTask>> {
    let mut all = Vec::new();
    for app in manifest.apps() {
        all.extend(generate_tasks(manifest, &app.app_id, seed)?);
    }
    Ok(all)
}

/// Checks the corpus composition rules of a task against the manifest.
pub fn validate_task(task: &DuplicateTask, manifest: &DatasetManifest) -> Result<()> {
    let err = |m: String| gen_err(&task.app_id, format!("task {}: {m}", task.task_id));
    if task.corpus.len() != CORPUS_SIZE {
        return Err(err(format!("corpus has {} videos", task.corpus.len())));
    }
    if task.corpus.iter().collect::<BTreeSet<_>>().len() != CORPUS_SIZE {
        return Err(err("corpus repeats a video".into()));
    }
    if task.corpus.contains(&task.query) {
        return Err(err("query is part of its corpus".into()));
    }
    let query = manifest.video(&task.query)?;
    let mut per_bug: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for v in &task.corpus {
        let r = manifest.video(v)?;
        if r.app_id != query.app_id || r.app_id != task.app_id {
            return Err(err(format!("video {v} is from another app")));
        }
        per_bug.entry(r.bug_id.as_str()).or_default().push(v);
    }
    let dups: BTreeSet<String> = per_bug
        .get(query.bug_id.as_str())
        .map(|v| v.iter().map(|s| s.to_string()).collect())
        .unwrap_or_default();
    if dups.len() != DUPLICATES_PER_TASK || dups != task.ground_truth {
        return Err(err("ground truth does not match the query's duplicates".into()));
    }
    let mut sizes: Vec<usize> = per_bug
        .iter()
        .filter(|(b, _)| **b != query.bug_id)
        .map(|(_, v)| v.len())
        .collect();
    sizes.sort_unstable();
    if sizes != [vec![1; 8], vec![3]].concat() {
        return Err(err(format!("unexpected non-duplicate composition {sizes:?}")));
    }
    Ok(())
}

pub fn write_tasks(path: impl AsRef<Path>, tasks: &[DuplicateTask]) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(tasks).expect("tasks serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_tasks(path: impl AsRef<Path>) -> Result<Vec<DuplicateTask>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
