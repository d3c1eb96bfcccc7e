use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rank::Ranking;
use crate::eval::tasks::DuplicateTask;

/// Retrieval quality of one ranked task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: String,
    /// 1-based ranks of the ground-truth duplicates, ascending.
    pub duplicate_ranks: Vec<usize>,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
}

impl TaskOutcome {
    pub fn first_rank(&self) -> Option<usize> {
        self.duplicate_ranks.first().copied()
    }
}

pub fn reciprocal_rank(duplicate_ranks: &[usize]) -> f64 {
    match duplicate_ranks.iter().min() {
        Some(&r) => 1.0 / r as f64,
        None => 0.0,
    }
}

/// Mean of precision at each duplicate's rank.
pub fn average_precision(duplicate_ranks: &[usize]) -> f64 {
    if duplicate_ranks.is_empty() {
        return 0.0;
    }
    let mut ranks = duplicate_ranks.to_vec();
    ranks.sort_unstable();
    let sum: f64 = ranks.iter().enumerate().map(|(k, &r)| (k + 1) as f64 / r as f64).sum();
    sum / ranks.len() as f64
}

pub fn evaluate_ranking(task: &DuplicateTask, ranking: &Ranking) -> Result<TaskOutcome> {
    let mut ranks = Vec::with_capacity(task.ground_truth.len());
    for dup in &task.ground_truth {
        let r = ranking
            .rank_of(dup)
            .ok_or_else(|| Error::UnknownVideo(format!("{dup} missing from ranking of {}", task.task_id)))?;
        ranks.push(r);
    }
    ranks.sort_unstable();
    Ok(TaskOutcome {
        task_id: task.task_id.clone(),
        reciprocal_rank: reciprocal_rank(&ranks),
        average_precision: average_precision(&ranks),
        duplicate_ranks: ranks,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Result<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return Err(Error::EmptyTaskSet);
    }
    Ok(sum / n as f64)
}

/// Mean reciprocal rank, summed in the given order.
pub fn mean_reciprocal_rank(outcomes: &[TaskOutcome]) -> Result<f64> {
    mean(outcomes.iter().map(|o| o.reciprocal_rank))
}

pub fn mean_average_precision(outcomes: &[TaskOutcome]) -> Result<f64> {
    mean(outcomes.iter().map(|o| o.average_precision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::rank::rank_scores;
    use std::collections::BTreeSet;

    fn outcome(ranks: &[usize]) -> TaskOutcome {
        TaskOutcome {
            task_id: "t".into(),
            duplicate_ranks: ranks.to_vec(),
            reciprocal_rank: reciprocal_rank(ranks),
            average_precision: average_precision(ranks),
        }
    }

    #[test]
    fn worked_examples() {
        let firsts = [outcome(&[1, 2]), outcome(&[2, 5]), outcome(&[4, 6])];
        assert!((mean_reciprocal_rank(&firsts).unwrap() - 1.75 / 3.0).abs() < 1e-15);
        assert!((mean_reciprocal_rank(&[outcome(&[13])]).unwrap() - 1.0 / 13.0).abs() < 1e-15);
        assert!((average_precision(&[13]) - 1.0 / 13.0).abs() < 1e-15);
        assert!((average_precision(&[1, 3]) - 5.0 / 6.0).abs() < 1e-15);
        assert!((average_precision(&[12, 13]) - (1.0 / 12.0 + 2.0 / 13.0) / 2.0).abs() < 1e-15);
        assert_eq!(format!("{:.4}", average_precision(&[12, 13])), "0.1186");
        assert_eq!(average_precision(&[3, 1]), average_precision(&[1, 3]));
    }

    #[test]
    fn reciprocal_rank_uses_the_first_duplicate() {
        assert_eq!(reciprocal_rank(&[3, 1]), 1.0);
        assert_eq!(reciprocal_rank(&[4, 12]), 0.25);
        assert_eq!(reciprocal_rank(&[]), 0.0);
    }

    #[test]
    fn means_over_tasks() {
        let o = [outcome(&[1, 2]), outcome(&[2, 4])];
        assert_eq!(mean_reciprocal_rank(&o).unwrap(), 0.75);
        assert_eq!(mean_average_precision(&o).unwrap(), 0.75);
        assert!(matches!(mean_reciprocal_rank(&[]), Err(Error::EmptyTaskSet)));
    }

    #[test]
    fn perfect_precision_only_at_the_top() {
        for a in 1..=13usize {
            for b in a + 1..=13 {
                assert_eq!(average_precision(&[a, b]) == 1.0, (a, b) == (1, 2));
                let ap = average_precision(&[a, b]);
                assert!((0.0..=1.0).contains(&ap) && (0.0..=1.0).contains(&reciprocal_rank(&[a, b])));
            }
        }
    }

    #[test]
    fn from_ranking() {
        let task = DuplicateTask {
            task_id: "t".into(),
            app_id: "a".into(),
            query: "q".into(),
            corpus: vec!["a".into(), "b".into(), "c".into()],
            ground_truth: BTreeSet::from(["c".to_string()]),
        };
        let r = rank_scores(&task, &[0.9, 0.1, 0.5]);
        let o = evaluate_ranking(&task, &r).unwrap();
        assert_eq!(o.duplicate_ranks, vec![2]);
        assert_eq!(o.reciprocal_rank, 0.5);
    }
}
