use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::tasks::DuplicateTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVideo {
    pub video_id: String,
    pub score: f64,
}

/// Corpus videos by descending score; ties keep corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub task_id: String,
    pub entries: Vec<RankedVideo>,
}

impl Ranking {
    /// 1-based rank of a video, if ranked.
    pub fn rank_of(&self, video_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.video_id == video_id).map(|p| p + 1)
    }

    pub fn video_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.video_id.as_str())
    }
}

/// Produces one score per corpus video of a task, in corpus order.
pub trait TaskScorer {
    fn score_corpus(&self, task: &DuplicateTask) -> Result<Vec<f64>>;
}

impl<F> TaskScorer for F
where
    F: Fn(&DuplicateTask) -> Result<Vec<f64>>,
{
    fn score_corpus(&self, task: &DuplicateTask) -> Result<Vec<f64>> {
        self(task)
    }
}

/// Sorts the task corpus by `scores` (parallel to `task.corpus`).
pub fn rank_scores(task: &DuplicateTask, scores: &[f64]) -> Ranking {
    assert_eq!(scores.len(), task.corpus.len(), "one score per corpus video");
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps corpus order among equal scores
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ranking {
        task_id: task.task_id.clone(),
        entries: order
            .into_iter()
            .map(|i| RankedVideo {
                video_id: task.corpus[i].clone(),
                score: scores[i],
            })
            .collect(),
    }
}

pub fn rank_corpus(task: &DuplicateTask, scorer: &impl TaskScorer) -> Result<Ranking> {
    let scores = scorer.score_corpus(task)?;
    Ok(rank_scores(task, &scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn task(n: usize) -> DuplicateTask {
        DuplicateTask {
            task_id: "t".into(),
            app_id: "a".into(),
            query: "q".into(),
            corpus: (0..n).map(|i| format!("v{i}")).collect(),
            ground_truth: BTreeSet::from(["v3".to_string(), "v7".to_string()]),
        }
    }

    #[test]
    fn duplicates_with_top_scores_rank_first() {
        let t = task(13);
        let mut scores = vec![0.5; 13];
        scores[3] = 0.9;
        scores[7] = 0.8;
        scores[0] = 0.1;
        let r = rank_scores(&t, &scores);
        assert_eq!(r.rank_of("v3"), Some(1));
        assert_eq!(r.rank_of("v7"), Some(2));
        assert_eq!(r.rank_of("v0"), Some(13));
    }

    #[test]
    fn ties_keep_corpus_order() {
        let t = task(13);
        let r = rank_scores(&t, &[0.4; 13]);
        assert_eq!(
            r.video_ids().collect::<Vec<_>>(),
            t.corpus.iter().map(String::as_str).collect::<Vec<_>>()
        );
    }

    #[test]
    fn scorer_errors_propagate() {
        let t = task(3);
        let failing = |_: &DuplicateTask| -> Result<Vec<f64>> { Err(Error::UnknownVideo("v1".into())) };
        assert!(rank_corpus(&t, &failing).is_err());
        let constant = |t: &DuplicateTask| -> Result<Vec<f64>> { Ok(vec![1.0; t.corpus.len()]) };
        assert_eq!(rank_corpus(&t, &constant).unwrap().entries.len(), 3);
    }

    proptest! {
        #[test]
        fn ranking_is_a_permutation_and_scale_free(
            scores in prop::collection::vec(0.0f64..1.0, 13),
            factor in 0.01f64..100.0,
        ) {
            let t = task(13);
            let r = rank_scores(&t, &scores);
            let ids: BTreeSet<&str> = r.video_ids().collect();
            prop_assert_eq!(ids.len(), 13);
            let scaled: Vec<f64> = scores.iter().map(|s| s * factor).collect();
            let r2 = rank_scores(&t, &scaled);
            // scaling by a positive constant can merge or split ties only through rounding
            let distinct = {
                let mut s = scores.clone();
                s.sort_by(f64::total_cmp);
                s.windows(2).all(|w| w[0] != w[1])
            };
            if distinct {
                prop_assert_eq!(r.video_ids().collect::<Vec<_>>(), r2.video_ids().collect::<Vec<_>>());
            }
        }

        #[test]
        fn raising_a_duplicate_never_hurts(scores in prop::collection::vec(0.0f64..1.0, 13), bump in 0.0f64..1.0) {
            let t = task(13);
            let before = rank_scores(&t, &scores).rank_of("v3").unwrap();
            let mut raised = scores.clone();
            raised[3] += bump;
            let after = rank_scores(&t, &raised).rank_of("v3").unwrap();
            prop_assert!(after <= before);
        }
    }
}
