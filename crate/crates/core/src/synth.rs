//! Seeded synthetic datasets in the on-disk artifact formats.
//!
//! Each bug gets its own embedding cluster and word list; the videos of a
//! bug are noisy copies of one base recording. All videos of an app open on
//! the same home screens with the same menu words.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{write_manifest, write_ocr, AppEntry, BugEntry, EmbeddingFile, ManifestDocument, VideoEntry};
use crate::model::{FrameText, TextRegion};
use crate::textual::is_stopword;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARTIFACT_DIR: &str = "artifacts";
pub const SCREENSHOT_DIR: &str = "screenshots";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub apps: usize,
    pub bugs_per_app: usize,
    pub videos_per_bug: usize,
    pub dim: usize,
    pub sample_stride: u32,
    pub home_frames: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Duplicate noise norm as a fraction of each frame's norm.
    pub noise: f64,
    /// Fraction of OCR tokens a duplicate keeps from the base recording.
    pub token_share: f64,
    pub words_per_frame: usize,
    pub screenshots: usize,
    pub screenshot_shards: usize,
    pub extra_screen_clusters: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            apps: 3,
            bugs_per_app: 10,
            videos_per_bug: 3,
            dim: 32,
            sample_stride: 6,
            home_frames: 2,
            min_frames: 10,
            max_frames: 14,
            noise: 0.01,
            token_share: 0.9,
            words_per_frame: 3,
            screenshots: 2400,
            screenshot_shards: 4,
            extra_screen_clusters: 34,
        }
    }
}

const CENTER_NORM: f64 = 10.0;
const HOME_SPREAD: f64 = 1.0;
const SCREEN_SPREAD: f64 = 3.0;
const BUG_WORDS: usize = 12;
const MENU_WORDS: usize = 6;

/// Gaussian vector with expected norm `norm`.
fn gaussian(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vec<f64> {
    let sd = norm / (dim as f64).sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        })
        .collect()
}

fn on_sphere(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let v = gaussian(rng, dim, 1.0);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n * radius).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Pronounceable lowercase words that survive text preprocessing unchanged.
struct WordPool {
    words: Vec<String>,
}

impl WordPool {
    fn new(rng: &mut ChaCha8Rng, count: usize) -> Self {
        const CONSONANTS: &[u8] = b"bdfgklmnprtvz";
        const VOWELS: &[u8] = b"aeiou";
        let mut seen = BTreeSet::new();
        let mut words = Vec::with_capacity(count);
        while words.len() < count {
            let syllables = rng.random_range(2..=3);
            let w: String = (0..syllables)
                .flat_map(|_| {
                    [
                        *CONSONANTS.choose(rng).expect("non-empty") as char,
                        *VOWELS.choose(rng).expect("non-empty") as char,
                    ]
                })
                .collect();
            if !is_stopword(&w) && seen.insert(w.clone()) {
                words.push(w);
            }
        }
        WordPool { words }
    }

    fn take(&mut self, n: usize) -> Vec<String> {
        self.words.split_off(self.words.len() - n)
    }
}

struct BaseVideo {
    frames: Vec<Vec<f64>>,
    words: Vec<Vec<String>>,
}

fn regions(words: &[String]) -> Vec<TextRegion> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| TextRegion {
            x: 24,
            y: 40 + 64 * i as i32,
            w: 12 * w.len() as u32,
            h: 40,
            text: w.clone(),
            conf: 0.9,
        })
        .collect()
}

/// Summary of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub screenshot_dir: PathBuf,
    pub videos: usize,
    pub screenshots: usize,
}

pub fn generate(cfg: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<SynthOutput> {
    let out = out_dir.as_ref();
    if cfg.min_frames <= cfg.home_frames || cfg.max_frames < cfg.min_frames || cfg.dim == 0 {
        return Err(Error::InvalidConfig(
            "synthetic frame counts or dimension out of range".into(),
        ));
    }
    if cfg.screenshot_shards == 0 || cfg.screenshots < cfg.screenshot_shards {
        return Err(Error::InvalidConfig("need at least one screenshot per shard".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total_bugs = cfg.apps * cfg.bugs_per_app;
    let mut pool = WordPool::new(&mut rng, cfg.apps * MENU_WORDS + total_bugs * BUG_WORDS + 400);

    let mut doc = ManifestDocument {
        artifact_dir: PathBuf::from(ARTIFACT_DIR),
        apps: Vec::new(),
    };
    let mut screen_centers: Vec<Vec<f64>> = Vec::new();
    let mut videos = 0;
    for a in 0..cfg.apps {
        let app_id = format!("app{a}");
        let app_dir = out.join(ARTIFACT_DIR).join(&app_id);
        std::fs::create_dir_all(&app_dir).map_err(|e| Error::io(&app_dir, e))?;
        let homes: Vec<Vec<f64>> = (0..cfg.home_frames)
            .map(|_| on_sphere(&mut rng, cfg.dim, CENTER_NORM))
            .collect();
        screen_centers.extend(homes.iter().cloned());
        let menu = pool.take(MENU_WORDS);
        let mut app = AppEntry {
            app_id: app_id.clone(),
            bugs: Vec::new(),
        };
        for b in 0..cfg.bugs_per_app {
            let bug_id = format!("{app_id}-bug{b:02}");
            let center = on_sphere(&mut rng, cfg.dim, CENTER_NORM);
            screen_centers.push(center.clone());
            let vocab = pool.take(BUG_WORDS);
            let len = rng.random_range(cfg.min_frames..=cfg.max_frames);
            let mut base = BaseVideo {
                frames: Vec::with_capacity(len),
                words: Vec::with_capacity(len),
            };
            for t in 0..len {
                if let Some(home) = homes.get(t) {
                    let v = gaussian(&mut rng, cfg.dim, HOME_SPREAD);
                    base.frames.push(add(home, &v));
                    base.words.push(
                        (0..cfg.words_per_frame)
                            .map(|_| menu.choose(&mut rng).expect("menu").clone())
                            .collect(),
                    );
                } else {
                    let v = gaussian(&mut rng, cfg.dim, SCREEN_SPREAD);
                    base.frames.push(add(&center, &v));
                    base.words.push(
                        (0..cfg.words_per_frame)
                            .map(|_| vocab.choose(&mut rng).expect("vocab").clone())
                            .collect(),
                    );
                }
            }
            let mut bug = BugEntry {
                bug_id: bug_id.clone(),
                videos: Vec::new(),
            };
            for k in 0..cfg.videos_per_bug {
                let video_id = format!("{bug_id}-v{k}");
                let rows: Vec<Vec<f32>> = base
                    .frames
                    .iter()
                    .map(|f| {
                        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let noise = gaussian(&mut rng, cfg.dim, cfg.noise * norm);
                        add(f, &noise).into_iter().map(|x| x as f32).collect()
                    })
                    .collect();
                let mut words = base.words.clone();
                let slots: Vec<(usize, usize)> = words
                    .iter()
                    .enumerate()
                    .flat_map(|(i, w)| (0..w.len()).map(move |j| (i, j)))
                    .collect();
                let replace = ((1.0 - cfg.token_share) * slots.len() as f64).round() as usize;
                for &(i, j) in rand::seq::index::sample(&mut rng, slots.len(), replace)
                    .into_iter()
                    .map(|s| &slots[s])
                    .collect::<Vec<_>>()
                {
                    words[i][j] = pool.words.choose(&mut rng).expect("pool").clone();
                }
                let texts: Vec<FrameText> = words
                    .iter()
                    .enumerate()
                    .map(|(r, w)| FrameText {
                        frame_index: r as u64 * cfg.sample_stride as u64,
                        regions: regions(w),
                    })
                    .collect();
                let emb_rel = PathBuf::from(&app_id).join(format!("{video_id}.dvbe"));
                let ocr_rel = PathBuf::from(&app_id).join(format!("{video_id}.ocr.jsonl"));
                EmbeddingFile::new(cfg.sample_stride, rows)?.write(out.join(ARTIFACT_DIR).join(&emb_rel))?;
                write_ocr(out.join(ARTIFACT_DIR).join(&ocr_rel), &texts)?;
                bug.videos.push(VideoEntry {
                    video_id,
                    embeddings: emb_rel,
                    ocr: ocr_rel,
                });
                videos += 1;
            }
            app.bugs.push(bug);
        }
        doc.apps.push(app);
    }
    let manifest = out.join(MANIFEST_FILE);
    write_manifest(&manifest, &doc)?;

    for _ in 0..cfg.extra_screen_clusters {
        screen_centers.push(on_sphere(&mut rng, cfg.dim, CENTER_NORM));
    }
    let shot_dir = out.join(SCREENSHOT_DIR);
    std::fs::create_dir_all(&shot_dir).map_err(|e| Error::io(&shot_dir, e))?;
    let per_shard = cfg.screenshots.div_ceil(cfg.screenshot_shards);
    let spread = Normal::new(0.0, SCREEN_SPREAD / (cfg.dim as f64).sqrt()).expect("valid spread");
    let mut written = 0;
    for s in 0..cfg.screenshot_shards {
        let n = per_shard.min(cfg.screenshots - written);
        let rows: Vec<Vec<f32>> = (0..n)
            .map(|_| {
                let c = screen_centers.choose(&mut rng).expect("centers");
                c.iter().map(|x| (x + spread.sample(&mut rng)) as f32).collect()
            })
            .collect();
        written += n;
        EmbeddingFile::new(1, rows)?.write(shot_dir.join(format!("shard-{s:02}.dvbe")))?;
    }
    Ok(SynthOutput {
        manifest,
        screenshot_dir: shot_dir,
        videos,
        screenshots: written,
    })
}
