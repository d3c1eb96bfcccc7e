use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::codebook::CodebookEnsemble;
use crate::error::{Error, Result};
use crate::eval::combine::{combined_score, CombinationWeights, ComponentScores, Components};
use crate::eval::rank::TaskScorer;
use crate::eval::tasks::DuplicateTask;
use crate::ingest::Dataset;
use crate::model::VideoArtifact;
use crate::sequential::{seq_similarity, FrameSequence, SeqConfig};
use crate::textual::{build_document, TextCorpusIndex, TextDocument, Vocabulary};
use crate::visual::{signature_similarity, visual_signature, VisualSignature};

/// Precomputed per-video representations for scoring query/corpus pairs.
pub struct Engine {
    dataset: Dataset,
    ensemble: Option<CodebookEnsemble>,
    seq: SeqConfig,
    components: Components,
    signatures: BTreeMap<String, VisualSignature>,
    documents: BTreeMap<String, Arc<TextDocument>>,
    vocabulary: Vocabulary,
}

impl Engine {
    pub fn new(
        dataset: Dataset,
        ensemble: Option<CodebookEnsemble>,
        seq: SeqConfig,
        components: Components,
    ) -> Result<Self> {
        let mut signatures = BTreeMap::new();
        if components.vis {
            let ens = ensemble
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("visual scoring needs a codebook ensemble".into()))?;
            if ens.dim() != dataset.dim() {
                return Err(Error::DimensionMismatch {
                    expected: ens.dim(),
                    actual: dataset.dim(),
                });
            }
            let videos: Vec<&VideoArtifact> = dataset.iter().collect();
            let sigs = videos
                .par_iter()
                .map(|v| visual_signature(v, ens))
                .collect::<Result<Vec<_>>>()?;
            signatures = videos.iter().map(|v| v.video_id().to_string()).zip(sigs).collect();
        }
        let mut vocabulary = Vocabulary::new();
        let mut documents = BTreeMap::new();
        if components.txt || components.seq_txt {
            for v in dataset.iter() {
                documents.insert(v.video_id().to_string(), Arc::new(build_document(v, &mut vocabulary)));
            }
        }
        Ok(Engine {
            dataset,
            ensemble,
            seq,
            components,
            signatures,
            documents,
            vocabulary,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn ensemble(&self) -> Option<&CodebookEnsemble> {
        self.ensemble.as_ref()
    }

    pub fn seq_config(&self) -> &SeqConfig {
        &self.seq
    }

    pub fn components(&self) -> Components {
        self.components
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn document(&self, video_id: &str) -> Result<&Arc<TextDocument>> {
        self.documents
            .get(video_id)
            .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))
    }

    fn signature(&self, video_id: &str) -> Result<&VisualSignature> {
        self.signatures
            .get(video_id)
            .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))
    }

    /// Every enabled component for `query` against each corpus video, in corpus order.
    pub fn component_scores(&self, query: &str, corpus: &[String]) -> Result<Vec<ComponentScores>> {
        if corpus.iter().any(|c| c == query) {
            return Err(Error::InvalidConfig(format!("query {query} is part of its own corpus")));
        }
        let q = self.dataset.get(query)?;
        let wrap = |candidate: &str| {
            let query = query.to_string();
            let candidate = candidate.to_string();
            move |e: Error| Error::Scoring {
                query,
                candidate,
                source: Box::new(e),
            }
        };
        let mut out = vec![ComponentScores::default(); corpus.len()];

        if self.components.vis {
            let qs = self.signature(query)?;
            for (o, c) in out.iter_mut().zip(corpus) {
                let cs = self.signature(c).map_err(wrap(c))?;
                o.vis = Some(signature_similarity(qs, cs).value());
            }
        }

        if self.components.txt || self.components.seq_txt {
            let qdoc = self.document(query)?;
            let docs = corpus
                .iter()
                .map(|c| self.document(c).cloned().map_err(wrap(c)))
                .collect::<Result<Vec<_>>>()?;
            let index = TextCorpusIndex::new(docs.iter().cloned())?;
            if self.components.txt {
                let scores: BTreeMap<&str, f64> = index
                    .normalized_scores(qdoc)
                    .into_iter()
                    .map(|(id, s)| (id, s.value()))
                    .collect();
                for (o, c) in out.iter_mut().zip(corpus) {
                    o.txt = Some(scores[c.as_str()]);
                }
            }
            if self.components.seq_txt {
                let qv = index.frame_vectors(qdoc);
                for ((o, c), d) in out.iter_mut().zip(corpus).zip(&docs) {
                    let a = FrameSequence::Textual(qv.clone());
                    let b = FrameSequence::Textual(index.frame_vectors(d));
                    o.seq_txt = Some(seq_similarity(&a, &b, &self.seq).map_err(wrap(c))?.value());
                }
            }
        }

        if self.components.seq_vis {
            let qseq = visual_sequence(q);
            for (o, c) in out.iter_mut().zip(corpus) {
                let v = self.dataset.get(c).map_err(wrap(c))?;
                o.seq_vis = Some(
                    seq_similarity(&qseq, &visual_sequence(v), &self.seq)
                        .map_err(wrap(c))?
                        .value(),
                );
            }
        }
        Ok(out)
    }

    pub fn scorer(&self, weights: CombinationWeights) -> ModeScorer<'_> {
        ModeScorer { engine: self, weights }
    }
}

fn visual_sequence(v: &VideoArtifact) -> FrameSequence<'_> {
    FrameSequence::Visual(v.frames().iter().map(|f| f.vector.as_slice()).collect())
}

/// Combines engine components under one set of weights.
pub struct ModeScorer<'a> {
    engine: &'a Engine,
    weights: CombinationWeights,
}

impl TaskScorer for ModeScorer<'_> {
    fn score_corpus(&self, task: &DuplicateTask) -> Result<Vec<f64>> {
        let comps = self.engine.component_scores(&task.query, &task.corpus)?;
        comps
            .iter()
            .map(|c| combined_score(c, &self.weights).map(|s| s.value()))
            .collect()
    }
}

/// Runs `f` on every item with `jobs` worker threads, keeping input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
