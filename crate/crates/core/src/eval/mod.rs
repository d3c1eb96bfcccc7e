//! Task generation, ranking, metrics and significance testing.

pub mod combine;
pub mod engine;
pub mod metrics;
pub mod rank;
pub mod report;
pub mod tasks;
pub mod wilcoxon;

pub use combine::{combined_score, CombinationWeights, ComponentScores, Components, Mode};
pub use engine::{parallel_map, Engine, ModeScorer};
pub use metrics::{
    average_precision, evaluate_ranking, mean_average_precision, mean_reciprocal_rank, reciprocal_rank, TaskOutcome,
};
pub use rank::{rank_corpus, rank_scores, RankedVideo, Ranking, TaskScorer};
pub use report::{evaluate, random_ranking_outcomes, summary_table, EvaluationReport};
pub use tasks::{generate_all_tasks, generate_tasks, validate_task, DuplicateTask};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};
