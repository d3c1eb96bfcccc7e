use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::combine::{combined_score, CombinationWeights, Components};
use crate::eval::engine::{parallel_map, Engine};
use crate::eval::metrics::{evaluate_ranking, mean_average_precision, mean_reciprocal_rank, TaskOutcome};
use crate::eval::rank::{rank_scores, RankedVideo, Ranking};
use crate::eval::tasks::{DuplicateTask, TASKS_PER_APP};
use crate::eval::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::sequential::DenominatorVariant;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub generator: String,
    pub task_enumeration: String,
    pub seed: Option<u64>,
    pub sample_stride: Option<u32>,
    pub denominator: DenominatorVariant,
    pub tau: f64,
    pub codebooks: usize,
    pub task_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_id: String,
    pub app_id: String,
    pub query: String,
    pub duplicate_ranks: Vec<usize>,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
    pub ranking: Vec<RankedVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub app_id: String,
    pub tasks: usize,
    pub mrr: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub label: String,
    pub weights: CombinationWeights,
    pub mrr: f64,
    pub map: f64,
    pub per_app: Vec<GroupMetrics>,
    pub tasks: Vec<TaskReport>,
}

impl ConfigurationReport {
    pub fn outcomes(&self) -> Vec<TaskOutcome> {
        self.tasks
            .iter()
            .map(|t| TaskOutcome {
                task_id: t.task_id.clone(),
                duplicate_ranks: t.duplicate_ranks.clone(),
                reciprocal_rank: t.reciprocal_rank,
                average_precision: t.average_precision,
            })
            .collect()
    }

    pub fn rankings(&self) -> Vec<Ranking> {
        self.tasks
            .iter()
            .map(|t| Ranking {
                task_id: t.task_id.clone(),
                entries: t.ranking.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub baseline: String,
    pub candidate: String,
    pub metric: String,
    pub test: WilcoxonResult,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub header: ReportHeader,
    pub configurations: Vec<ConfigurationReport>,
    pub significance: Vec<SignificanceReport>,
}

impl EvaluationReport {
    pub fn configuration(&self, label: &str) -> Option<&ConfigurationReport> {
        self.configurations.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Ranks every task under every configuration, computing each task's
/// component scores once. Output does not depend on `jobs`.
pub fn evaluate(
    engine: &Engine,
    tasks: &[DuplicateTask],
    configurations: &[CombinationWeights],
    jobs: usize,
) -> Result<EvaluationReport> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if configurations.is_empty() {
        return Err(Error::InvalidConfig("no configuration to evaluate".into()));
    }
    let needed = configurations
        .iter()
        .fold(Components::default(), |acc, c| acc.union(c.mode.components()));
    let have = engine.components();
    if needed.union(have) != have {
        return Err(Error::InvalidConfig(
            "engine was built without a component the configurations need".into(),
        ));
    }

    let mut ordered: Vec<&DuplicateTask> = tasks.iter().collect();
    ordered.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    if ordered.windows(2).any(|w| w[0].task_id == w[1].task_id) {
        return Err(Error::InvalidConfig("task ids are not unique".into()));
    }

    let per_task: Vec<Vec<TaskReport>> = parallel_map(&ordered, jobs, |task| {
        let comps = engine.component_scores(&task.query, &task.corpus)?;
        configurations
            .iter()
            .map(|w| {
                let scores = comps
                    .iter()
                    .map(|c| combined_score(c, w).map(|s| s.value()))
                    .collect::<Result<Vec<f64>>>()?;
                let ranking = rank_scores(task, &scores);
                let outcome = evaluate_ranking(task, &ranking)?;
                Ok(TaskReport {
                    task_id: task.task_id.clone(),
                    app_id: task.app_id.clone(),
                    query: task.query.clone(),
                    duplicate_ranks: outcome.duplicate_ranks,
                    reciprocal_rank: outcome.reciprocal_rank,
                    average_precision: outcome.average_precision,
                    ranking: ranking.entries,
                })
            })
            .collect()
    })?;

    let mut reports = Vec::with_capacity(configurations.len());
    for (ci, w) in configurations.iter().enumerate() {
        let task_reports: Vec<TaskReport> = per_task.iter().map(|r| r[ci].clone()).collect();
        reports.push(configuration_report(*w, task_reports)?);
    }
    let significance = significance_tests(&reports)?;
    Ok(EvaluationReport {
        header: ReportHeader {
            generator: format!("dupvid {}", env!("CARGO_PKG_VERSION")),
            task_enumeration: format!(
                "per app: each of 30 query videos x 9 distractor bugs x 3 draws of one video per remaining bug ({TASKS_PER_APP} tasks)"
            ),
            seed: None,
            sample_stride: None,
            denominator: engine.seq_config().denominator,
            tau: engine.seq_config().tau,
            codebooks: engine.ensemble().map_or(0, |e| e.len()),
            task_count: ordered.len(),
        },
        configurations: reports,
        significance,
    })
}

fn configuration_report(weights: CombinationWeights, tasks: Vec<TaskReport>) -> Result<ConfigurationReport> {
    let mut by_app: BTreeMap<&str, Vec<&TaskReport>> = BTreeMap::new();
    for t in &tasks {
        by_app.entry(t.app_id.as_str()).or_default().push(t);
    }
    let mean = |ts: &[&TaskReport], f: fn(&TaskReport) -> f64| ts.iter().map(|t| f(t)).sum::<f64>() / ts.len() as f64;
    let per_app = by_app
        .iter()
        .map(|(app, ts)| GroupMetrics {
            app_id: app.to_string(),
            tasks: ts.len(),
            mrr: mean(ts, |t| t.reciprocal_rank),
            map: mean(ts, |t| t.average_precision),
        })
        .collect();
    let mut report = ConfigurationReport {
        label: weights.label(),
        weights,
        mrr: 0.0,
        map: 0.0,
        per_app,
        tasks,
    };
    let outcomes = report.outcomes();
    report.mrr = mean_reciprocal_rank(&outcomes)?;
    report.map = mean_average_precision(&outcomes)?;
    Ok(report)
}

type Metric = fn(&TaskReport) -> f64;

/// Each configuration after the first against the first, on per-task RR and AP.
fn significance_tests(reports: &[ConfigurationReport]) -> Result<Vec<SignificanceReport>> {
    let Some((baseline, rest)) = reports.split_first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for cand in rest {
        let metrics: [(&str, Metric); 2] = [("rr", |t| t.reciprocal_rank), ("ap", |t| t.average_precision)];
        for (name, f) in metrics {
            let a: Vec<f64> = cand.tasks.iter().map(f).collect();
            let b: Vec<f64> = baseline.tasks.iter().map(f).collect();
            let test = wilcoxon_signed_rank(&a, &b)?;
            out.push(SignificanceReport {
                baseline: baseline.label.clone(),
                candidate: cand.label.clone(),
                metric: name.to_string(),
                significant: test.p_value < SIGNIFICANCE_LEVEL,
                test,
            });
        }
    }
    Ok(out)
}

/// Plain-text table of overall and per-app mRR/mAP, in percent.
pub fn summary_table(report: &EvaluationReport) -> String {
    let width = report
        .configurations
        .iter()
        .map(|c| c.label.len())
        .max()
        .unwrap_or(0)
        .max("configuration".len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:<12}  {:>6}  {:>7}  {:>7}",
        "configuration", "app", "tasks", "mRR %", "mAP %"
    );
    for c in &report.configurations {
        for g in &c.per_app {
            let _ = writeln!(
                s,
                "{:<width$}  {:<12}  {:>6}  {:>7.2}  {:>7.2}",
                c.label,
                g.app_id,
                g.tasks,
                g.mrr * 100.0,
                g.map * 100.0
            );
        }
        let _ = writeln!(
            s,
            "{:<width$}  {:<12}  {:>6}  {:>7.2}  {:>7.2}",
            c.label,
            "overall",
            c.tasks.len(),
            c.mrr * 100.0,
            c.map * 100.0
        );
    }
    for t in &report.significance {
        let _ = writeln!(
            s,
            "wilcoxon {} vs {} on {}: W={} n={} p={:.4e}{}",
            t.candidate,
            t.baseline,
            t.metric,
            t.test.statistic,
            t.test.n,
            t.test.p_value,
            if t.significant { " *" } else { "" }
        );
    }
    s
}

/// Task outcomes when each corpus is ordered by a seeded random shuffle.
pub fn random_ranking_outcomes(tasks: &[DuplicateTask], seed: u64) -> Result<Vec<TaskOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tasks
        .iter()
        .map(|t| {
            let mut order: Vec<usize> = (0..t.corpus.len()).collect();
            order.shuffle(&mut rng);
            let mut scores = vec![0.0; t.corpus.len()];
            for (pos, &i) in order.iter().enumerate() {
                scores[i] = (t.corpus.len() - pos) as f64;
            }
            evaluate_ranking(t, &rank_scores(t, &scores))
        })
        .collect()
}
