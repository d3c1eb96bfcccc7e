//! Visual-word codebooks: K-Means training, frame quantization and bag-of-visual-words counts.

use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingFile;
use crate::model::{TermVector, VideoArtifact};
use crate::visual::{compute_corpus_stats, CorpusStats};

pub const DEFAULT_K: usize = 1000;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 4;
pub const DEFAULT_SUBSET_SIZE: usize = 15_000;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"DVCB";
pub const CODEBOOK_VERSION: u32 = 1;
const CODEBOOK_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams {
            k,
            seed,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// Per-iteration record of a K-Means run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KMeansTrace {
    /// Within-cluster SSE after each assignment step; the last entry is the
    /// SSE of the returned centroids.
    pub sse: Vec<f64>,
    /// Largest centroid displacement of each update step.
    pub shifts: Vec<f64>,
    pub converged: bool,
}

/// K centroids of dimension D, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<f32>,
    k: usize,
    dim: usize,
    training_seed: u64,
    training_corpus_id: String,
}

impl Codebook {
    pub fn from_centroids(
        centroids: Vec<Vec<f32>>,
        training_seed: u64,
        training_corpus_id: impl Into<String>,
    ) -> Result<Self> {
        let k = centroids.len();
        if k == 0 {
            return Err(Error::InvalidConfig("codebook needs at least one centroid".into()));
        }
        let dim = centroids[0].len();
        if dim == 0 {
            return Err(Error::InvalidConfig("codebook centroids have dimension 0".into()));
        }
        let mut flat = Vec::with_capacity(k * dim);
        for (i, c) in centroids.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.len(),
                });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            flat.extend_from_slice(c);
        }
        Ok(Codebook {
            centroids: flat,
            k,
            dim,
            training_seed,
            training_corpus_id: training_corpus_id.into(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn training_seed(&self) -> u64 {
        self.training_seed
    }

    pub fn training_corpus_id(&self) -> &str {
        &self.training_corpus_id
    }

    pub fn centroid(&self, word: usize) -> &[f32] {
        &self.centroids[word * self.dim..(word + 1) * self.dim]
    }

    pub fn centroids(&self) -> impl Iterator<Item = &[f32]> {
        self.centroids.chunks_exact(self.dim)
    }

    /// Same codebook with every centroid scaled by `factor`.
    pub fn scaled(&self, factor: f32) -> Codebook {
        let mut out = self.clone();
        for x in &mut out.centroids {
            *x *= factor;
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CODEBOOK_HEADER_LEN + 4 * self.centroids.len());
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.write_u32::<LittleEndian>(CODEBOOK_VERSION).unwrap();
        out.write_u32::<LittleEndian>(self.k as u32).unwrap();
        out.write_u32::<LittleEndian>(self.dim as u32).unwrap();
        out.write_u64::<LittleEndian>(self.training_seed).unwrap();
        for &x in &self.centroids {
            out.write_f32::<LittleEndian>(x).unwrap();
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path, training_corpus_id: impl Into<String>) -> Result<Self> {
        if bytes.len() < CODEBOOK_HEADER_LEN {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: CODEBOOK_HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let io = |e| Error::io(path, e);
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic).map_err(io)?;
        if &magic != CODEBOOK_MAGIC {
            return Err(Error::format(path, format!("bad magic {magic:?}, expected \"DVCB\"")));
        }
        let version = cur.read_u32::<LittleEndian>().map_err(io)?;
        if version != CODEBOOK_VERSION {
            return Err(Error::format(path, format!("unsupported codebook version {version}")));
        }
        let k = cur.read_u32::<LittleEndian>().map_err(io)? as usize;
        let dim = cur.read_u32::<LittleEndian>().map_err(io)? as usize;
        let seed = cur.read_u64::<LittleEndian>().map_err(io)?;
        let expected = CODEBOOK_HEADER_LEN as u64 + 4 * k as u64 * dim as u64;
        if bytes.len() as u64 != expected {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected,
                actual: bytes.len() as u64,
            });
        }
        let mut flat = vec![0f32; k * dim];
        cur.read_f32_into::<LittleEndian>(&mut flat).map_err(io)?;
        let rows = if dim == 0 {
            Vec::new()
        } else {
            flat.chunks_exact(dim).map(<[f32]>::to_vec).collect()
        };
        Codebook::from_centroids(rows, seed, training_corpus_id).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>, training_corpus_id: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path, training_corpus_id)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn sq_dist_f64(a: &[f32], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &c)| {
            let d = f64::from(x) - c;
            d * d
        })
        .sum()
}

fn sq_dist_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &c)| {
            let d = f64::from(x) - f64::from(c);
            d * d
        })
        .sum()
}

/// Index of the nearest centroid and its squared distance; ties go to the lowest index.
fn nearest(point: &[f32], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist_f64(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn validate_points(points: &[Vec<f32>], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidConfig("points have dimension 0".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok(dim)
}

/// k-means++ seeding: first centre uniform, later ones with probability
/// proportional to squared distance from the nearest chosen centre.
fn kmeans_plus_plus(points: &[Vec<f32>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let to_f64 = |p: &[f32]| p.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
    let first = rng.random_range(0..points.len());
    let mut centroids = vec![to_f64(&points[first])];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist_f32(p, &points[first])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                if acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..points.len())
        };
        let c = &points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist_f32(p, c));
        }
        centroids.push(to_f64(c));
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding. Deterministic for fixed
/// `(points, params)`.
pub fn train_kmeans(points: &[Vec<f32>], params: &KMeansParams) -> Result<Codebook> {
    train_kmeans_traced(points, params, "").map(|(c, _)| c)
}

/// [`train_kmeans`] that also returns the per-iteration SSE trace.
pub fn train_kmeans_traced(
    points: &[Vec<f32>],
    params: &KMeansParams,
    corpus_id: &str,
) -> Result<(Codebook, KMeansTrace)> {
    let dim = validate_points(points, params.k)?;
    let k = params.k;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut trace = KMeansTrace::default();

    for _ in 0..params.max_iters {
        let assigned: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
        let sse: f64 = assigned.iter().map(|&(_, d)| d).sum();
        if let Some(&prev) = trace.sse.last() {
            debug_assert!(sse <= prev * (1.0 + 1e-9) + 1e-12, "SSE increased: {prev} -> {sse}");
        }
        trace.sse.push(sse);

        let mut sums = vec![vec![0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &(label, _)) in points.iter().zip(&assigned) {
            counts[label] += 1;
            for (s, &x) in sums[label].iter_mut().zip(p) {
                *s += f64::from(x);
            }
        }

        // Empty clusters take the points farthest from their current centroid.
        let mut far: Vec<usize> = Vec::new();
        if counts.contains(&0) {
            far = (0..points.len()).collect();
            far.sort_by(|&a, &b| assigned[b].1.total_cmp(&assigned[a].1).then(a.cmp(&b)));
        }
        let mut far = far.into_iter();

        let mut shift = 0f64;
        for c in 0..k {
            let updated: Vec<f64> = if counts[c] > 0 {
                let n = counts[c] as f64;
                sums[c].iter().map(|s| s / n).collect()
            } else {
                let idx = far.next().expect("k <= number of points");
                points[idx].iter().map(|&x| f64::from(x)).collect()
            };
            let moved: f64 = updated
                .iter()
                .zip(&centroids[c])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            shift = shift.max(moved);
            centroids[c] = updated;
        }
        trace.shifts.push(shift);
        if shift < params.tol {
            trace.converged = true;
            break;
        }
    }

    let final_sse: f64 = points
        .par_iter()
        .map(|p| nearest(p, &centroids).1)
        .collect::<Vec<_>>()
        .iter()
        .sum();
    trace.sse.push(final_sse);

    let rows: Vec<Vec<f32>> = centroids
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f32).collect())
        .collect();
    let codebook = Codebook::from_centroids(rows, params.seed, corpus_id)?;
    Ok((codebook, trace))
}

/// Visual word of `embedding`: the nearest centroid by Euclidean distance,
/// lowest index on ties.
pub fn assign(embedding: &[f32], codebook: &Codebook) -> Result<usize> {
    if embedding.len() != codebook.dim {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim,
            actual: embedding.len(),
        });
    }
    let mut best = (0, f64::INFINITY);
    for (i, c) in codebook.centroids().enumerate() {
        let d = sq_dist_f32(embedding, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// Visual-word counts of a video's frames.
pub fn build_bovw(video: &VideoArtifact, codebook: &Codebook) -> Result<TermVector> {
    let words = video
        .frames()
        .iter()
        .map(|f| assign(&f.vector, codebook).map(|w| w as u32))
        .collect::<Result<Vec<_>>>()?;
    Ok(TermVector::from_counts(words))
}

/// A codebook together with the document frequencies of its training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub codebook: Codebook,
    pub stats: CorpusStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookEnsemble {
    members: Vec<EnsembleMember>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleIndex {
    version: u32,
    members: Vec<EnsembleIndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleIndexEntry {
    codebook: PathBuf,
    stats: PathBuf,
    training_corpus_id: String,
}

pub const ENSEMBLE_INDEX_FILE: &str = "ensemble.json";

impl CodebookEnsemble {
    pub fn new(members: Vec<EnsembleMember>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidConfig("codebook ensemble needs at least one member".into()))?;
        let dim = first.codebook.dim();
        for m in &members {
            if m.codebook.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: m.codebook.dim(),
                });
            }
        }
        Ok(CodebookEnsemble { members })
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].codebook.dim()
    }

    /// Writes `ensemble.json` plus one codebook and one stats file per member.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.members.len());
        for (i, m) in self.members.iter().enumerate() {
            let cb = PathBuf::from(format!("codebook-{i:02}.dvcb"));
            let st = PathBuf::from(format!("codebook-{i:02}.stats.json"));
            m.codebook.write(dir.join(&cb))?;
            m.stats.write(dir.join(&st))?;
            entries.push(EnsembleIndexEntry {
                codebook: cb,
                stats: st,
                training_corpus_id: m.codebook.training_corpus_id().to_string(),
            });
        }
        let index = EnsembleIndex {
            version: 1,
            members: entries,
        };
        let path = dir.join(ENSEMBLE_INDEX_FILE);
        let mut text = serde_json::to_string_pretty(&index).expect("ensemble index serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(ENSEMBLE_INDEX_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let index: EnsembleIndex = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
        if index.version != 1 {
            return Err(Error::format(
                &path,
                format!("unsupported ensemble version {}", index.version),
            ));
        }
        let members = index
            .members
            .into_iter()
            .map(|e| {
                let codebook = Codebook::read(dir.join(&e.codebook), e.training_corpus_id)?;
                let stats = CorpusStats::read(dir.join(&e.stats))?;
                Ok(EnsembleMember { codebook, stats })
            })
            .collect::<Result<Vec<_>>>()?;
        CodebookEnsemble::new(members)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub k: usize,
    pub ensemble_size: usize,
    /// Embeddings per member. When the corpus is too small for
    /// `ensemble_size` disjoint subsets of this size, it is split evenly instead.
    pub subset_size: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            k: DEFAULT_K,
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            subset_size: DEFAULT_SUBSET_SIZE,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// Trains `ensemble_size` codebooks on disjoint seeded subsets of `corpus`.
///
/// Each member's corpus statistics treat one screenshot as one document.
pub fn train_ensemble(corpus: &[Vec<f32>], params: &EnsembleParams, corpus_id: &str) -> Result<CodebookEnsemble> {
    if params.ensemble_size == 0 {
        return Err(Error::InvalidConfig("ensemble size must be at least 1".into()));
    }
    let mut subset = params.subset_size;
    if subset * params.ensemble_size > corpus.len() {
        subset = corpus.len() / params.ensemble_size;
        log::warn!(
            "corpus of {} embeddings too small for {} x {}; using subsets of {subset}",
            corpus.len(),
            params.ensemble_size,
            params.subset_size
        );
    }
    if subset < params.k {
        return Err(Error::TooFewPoints {
            points: subset,
            k: params.k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let seeds: Vec<u64> = (0..params.ensemble_size).map(|_| rng.random()).collect();

    let members = (0..params.ensemble_size)
        .into_par_iter()
        .map(|i| {
            let points: Vec<Vec<f32>> = order[i * subset..(i + 1) * subset]
                .iter()
                .map(|&j| corpus[j].clone())
                .collect();
            let kp = KMeansParams {
                k: params.k,
                seed: seeds[i],
                max_iters: params.max_iters,
                tol: params.tol,
            };
            let id = format!("{corpus_id}#subset{i}");
            let (codebook, trace) = train_kmeans_traced(&points, &kp, &id)?;
            log::info!(
                "codebook {i}: {} iterations, converged={}, sse={:.6}",
                trace.shifts.len(),
                trace.converged,
                trace.sse.last().copied().unwrap_or(0.0)
            );
            let docs = points
                .iter()
                .map(|p| assign(p, &codebook).map(|w| TermVector::from_counts([w as u32])))
                .collect::<Result<Vec<_>>>()?;
            let stats = compute_corpus_stats(&docs)?;
            Ok(EnsembleMember { codebook, stats })
        })
        .collect::<Result<Vec<_>>>()?;
    CodebookEnsemble::new(members)
}

/// Every embedding row of every `.dvbe` file in `dir`, files in name order.
pub fn load_embedding_corpus(dir: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dvbe"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut dim = None;
    for f in files {
        let emb = EmbeddingFile::read(&f)?;
        if let Some(d) = dim {
            if d != emb.dim {
                return Err(Error::format(
                    &f,
                    format!("dimension {} differs from corpus dimension {d}", emb.dim),
                ));
            }
        }
        dim = Some(emb.dim);
        rows.extend(emb.rows);
    }
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrameEmbedding;
    use proptest::prelude::*;
    use rand::Rng;

    fn pts(xs: &[f32]) -> Vec<Vec<f32>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    fn sorted_1d(cb: &Codebook) -> Vec<f32> {
        let mut v: Vec<f32> = cb.centroids().map(|c| c[0]).collect();
        v.sort_by(f32::total_cmp);
        v
    }

    /// Lowest within-cluster SSE over every 2-partition of a small 1-D set.
    fn best_two_partition(xs: &[f32]) -> (Vec<f32>, f64) {
        let n = xs.len();
        let mut best = (Vec::new(), f64::INFINITY);
        for mask in 1..(1u32 << n) - 1 {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, &x) in xs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(f64::from(x))
                } else {
                    b.push(f64::from(x))
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let sse = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            let (ma, mb) = (mean(&a), mean(&b));
            let total = sse(&a, ma) + sse(&b, mb);
            if total < best.1 {
                let mut c = vec![ma as f32, mb as f32];
                c.sort_by(f32::total_cmp);
                best = (c, total);
            }
        }
        best
    }

    #[test]
    fn toy_two_clusters_match_exhaustive_optimum() {
        let xs = [0.0f32, 1.0, 10.0, 11.0];
        let (oracle, _) = best_two_partition(&xs);
        assert_eq!(oracle, vec![0.5, 10.5]);
        for seed in 0..20 {
            let cb = train_kmeans(&pts(&xs), &KMeansParams::new(2, seed)).unwrap();
            assert_eq!(sorted_1d(&cb), oracle, "seed {seed}");
        }
    }

    #[test]
    fn k_equal_to_point_count_reproduces_points() {
        let xs = [3.0f32, -1.0, 7.5, 2.25, 100.0];
        for seed in 0..10 {
            let cb = train_kmeans(&pts(&xs), &KMeansParams::new(5, seed)).unwrap();
            let mut want = xs.to_vec();
            want.sort_by(f32::total_cmp);
            assert_eq!(sorted_1d(&cb), want);
        }
    }

    #[test]
    fn single_centroid_is_mean() {
        let points = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let cb = train_kmeans(&points, &KMeansParams::new(1, 9)).unwrap();
        assert_eq!(cb.centroid(0), &[3.0, 3.0]);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_kmeans(&pts(&[1.0]), &KMeansParams::new(2, 0)),
            Err(Error::TooFewPoints { points: 1, k: 2 })
        ));
        assert!(matches!(
            train_kmeans(&pts(&[1.0, f32::NAN]), &KMeansParams::new(1, 0)),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(train_kmeans(&pts(&[1.0]), &KMeansParams::new(0, 0)).is_err());
    }

    #[test]
    fn assign_examples() {
        let cb = Codebook::from_centroids(vec![vec![0.0, 0.0], vec![10.0, 10.0]], 0, "").unwrap();
        assert_eq!(assign(&[1.0, 1.0], &cb).unwrap(), 0);
        assert!(matches!(assign(&[1.0], &cb), Err(Error::DimensionMismatch { .. })));

        let cb = Codebook::from_centroids(
            vec![vec![9.0, 9.0], vec![0.0, 1.0], vec![0.0, -1.0], vec![4.0, 4.0]],
            0,
            "",
        )
        .unwrap();
        assert_eq!(assign(&[4.0, 4.0], &cb).unwrap(), 3);
        assert_eq!(assign(&[0.0, 0.0], &cb).unwrap(), 1);
    }

    fn video(vectors: &[&[f32]]) -> VideoArtifact {
        let frames = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| FrameEmbedding {
                frame_index: i as u64,
                vector: v.to_vec(),
            })
            .collect();
        VideoArtifact::new("v", "a", "b", frames, vec![], 1).unwrap()
    }

    #[test]
    fn bovw_counts() {
        let cb = Codebook::from_centroids(vec![vec![0.0], vec![10.0]], 0, "").unwrap();
        let bovw = build_bovw(&video(&[&[0.1], &[-0.2], &[9.0]]), &cb).unwrap();
        assert_eq!(bovw.iter().collect::<Vec<_>>(), vec![(0, 2.0), (1, 1.0)]);
        assert_eq!(
            build_bovw(&video(&[&[9.0]]), &cb).unwrap().iter().collect::<Vec<_>>(),
            vec![(1, 1.0)]
        );
        let a = build_bovw(&video(&[&[0.1], &[9.0], &[8.0]]), &cb).unwrap();
        let b = build_bovw(&video(&[&[8.0], &[0.1], &[9.0]]), &cb).unwrap();
        assert_eq!(a, b);
        assert!(build_bovw(&video(&[&[1.0, 2.0]]), &cb).is_err());
    }

    #[test]
    fn codebook_bytes_roundtrip() {
        let cb = Codebook::from_centroids(vec![vec![1.5, -2.0], vec![0.0, 3.25]], 77, "rico").unwrap();
        let bytes = cb.to_bytes();
        assert_eq!(&bytes[..4], b"DVCB");
        assert_eq!(bytes.len(), 24 + 4 * 4);
        let back = Codebook::from_bytes(&bytes, Path::new("x"), "rico").unwrap();
        assert_eq!(back, cb);
        assert!(Codebook::from_bytes(&bytes[..bytes.len() - 1], Path::new("x"), "").is_err());
    }

    fn blobs(n_per: usize, centers: &[[f32; 2]], seed: u64) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..n_per {
                out.push(vec![
                    c[0] + rng.random_range(-1.0..1.0),
                    c[1] + rng.random_range(-1.0..1.0),
                ]);
            }
        }
        out
    }

    #[test]
    fn sse_never_increases_and_runs_are_bit_identical() {
        let points = blobs(40, &[[0.0, 0.0], [5.0, 5.0], [-6.0, 4.0], [3.0, -7.0]], 3);
        for seed in 0..5 {
            let params = KMeansParams::new(6, seed);
            let (a, trace) = train_kmeans_traced(&points, &params, "").unwrap();
            for w in trace.sse.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", trace.sse);
            }
            let (b, _) = train_kmeans_traced(&points, &params, "").unwrap();
            assert_eq!(a.to_bytes(), b.to_bytes());
        }
    }

    #[test]
    fn empty_clusters_are_repaired() {
        // Duplicate points force k-means++ to pick coincident centres.
        let points = pts(&[1.0, 1.0, 1.0, 1.0, 5.0]);
        let cb = train_kmeans(&points, &KMeansParams::new(3, 1)).unwrap();
        assert_eq!(cb.k(), 3);
        assert!(cb.centroids().all(|c| c[0].is_finite()));
    }

    #[test]
    fn ensemble_training_and_persistence() {
        let corpus = blobs(30, &[[0.0, 0.0], [8.0, 8.0], [-8.0, 8.0]], 5);
        let params = EnsembleParams {
            k: 3,
            ensemble_size: 4,
            subset_size: 15_000,
            seed: 11,
            ..EnsembleParams::default()
        };
        let ens = train_ensemble(&corpus, &params, "blobs").unwrap();
        assert_eq!(ens.len(), 4);
        for m in ens.members() {
            assert_eq!(m.codebook.k(), 3);
            assert_eq!(m.stats.doc_count(), 22);
        }
        let again = train_ensemble(&corpus, &params, "blobs").unwrap();
        assert_eq!(ens, again);

        let dir = tempfile::tempdir().unwrap();
        ens.save(dir.path()).unwrap();
        assert_eq!(CodebookEnsemble::load(dir.path()).unwrap(), ens);

        let too_big = EnsembleParams { k: 40, ..params };
        assert!(matches!(
            train_ensemble(&corpus, &too_big, "blobs"),
            Err(Error::TooFewPoints { .. })
        ));
    }

    proptest! {
        #[test]
        fn assign_matches_linear_scan(
            (centroids, query) in (1usize..6, 1usize..12).prop_flat_map(|(d, k)| (
                prop::collection::vec(prop::collection::vec(-5i8..5, d), k),
                prop::collection::vec(-5i8..5, d),
            ))
        ) {
            let cents: Vec<Vec<f32>> = centroids.iter().map(|c| c.iter().map(|&x| f32::from(x)).collect()).collect();
            let q: Vec<f32> = query.iter().map(|&x| f32::from(x)).collect();
            let cb = Codebook::from_centroids(cents.clone(), 0, "").unwrap();
            // Integer coordinates make squared distances exact, so ties are real ties.
            let dists: Vec<i64> = centroids.iter().map(|c| c.iter().zip(&query).map(|(&a, &b)| {
                let d = i64::from(a) - i64::from(b);
                d * d
            }).sum()).collect();
            let min = *dists.iter().min().unwrap();
            let want = dists.iter().position(|&d| d == min).unwrap();
            prop_assert_eq!(assign(&q, &cb).unwrap(), want);
        }

        #[test]
        fn bovw_total_equals_frame_count(
            frames in prop::collection::vec(prop::collection::vec(-3.0f32..3.0, 2), 1..20)
        ) {
            let cb = Codebook::from_centroids(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![-1.0, 2.0]], 0, "").unwrap();
            let refs: Vec<&[f32]> = frames.iter().map(|f| f.as_slice()).collect();
            let bovw = build_bovw(&video(&refs), &cb).unwrap();
            prop_assert_eq!(bovw.total() as usize, frames.len());
        }
    }
}
