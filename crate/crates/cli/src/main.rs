use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dupvid_core::codebook::{load_embedding_corpus, train_ensemble, CodebookEnsemble, EnsembleParams};
use dupvid_core::eval::tasks::{generate_all_tasks, generate_tasks, read_tasks, write_tasks};
use dupvid_core::eval::{
    evaluate, rank_corpus, summary_table, CombinationWeights, Components, DuplicateTask, Engine, Mode,
};
use dupvid_core::ingest::{load_dataset, load_manifest, load_videos, read_video_artifact, DatasetManifest};
use dupvid_core::sequential::{DenominatorVariant, SeqConfig};
use dupvid_core::synth::{generate, SynthConfig};
use dupvid_core::textual::{build_document, Vocabulary};
use dupvid_core::Error;

#[derive(Parser)]
#[command(name = "dupvid", version, about = "Duplicate detection for video bug reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and every artifact it references.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        /// Also check that every video can be resampled to this stride.
        #[arg(long)]
        stride: Option<u32>,
    },
    /// Train the visual codebook ensemble on a directory of screenshot embeddings.
    TrainCodebooks {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = dupvid_core::codebook::DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = dupvid_core::codebook::DEFAULT_ENSEMBLE_SIZE)]
        ensemble_size: usize,
        #[arg(long, default_value_t = dupvid_core::codebook::DEFAULT_SUBSET_SIZE)]
        subset_size: usize,
        #[arg(long, default_value_t = dupvid_core::codebook::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = dupvid_core::codebook::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write the retrieval tasks of one app (or all apps) as JSON.
    GenTasks {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        app: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every task and write report.json and summary.txt.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Task file from gen-tasks; generated from --seed when absent.
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank a corpus of videos against one query.
    Rank {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        query: String,
        #[arg(long, value_delimiter = ',', required = true)]
        corpus: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic dataset and screenshot corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Print the preprocessed text document of videos as JSON.
    DumpText {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',')]
        video: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// One or more modes; the first is the baseline for significance tests.
    #[arg(long, value_delimiter = ',', default_value = "vis+txt+seq")]
    mode: Vec<Mode>,
    /// Top-level weight of every combined mode.
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    codebooks: Option<PathBuf>,
    #[arg(long, default_value = "literal")]
    denominator: DenominatorVariant,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long)]
    stride: Option<u32>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn weights(&self) -> anyhow::Result<Vec<CombinationWeights>> {
        let mut out = Vec::new();
        for &m in &self.mode {
            let w = match self.w {
                Some(w) if m.default_weight() > 0.0 => CombinationWeights::with_weight(m, w)?,
                _ => CombinationWeights::new(m),
            };
            if !out.contains(&w) {
                out.push(w);
            }
        }
        Ok(out)
    }

    fn components(&self) -> Components {
        self.mode
            .iter()
            .fold(Components::default(), |acc, m| acc.union(m.components()))
    }

    fn jobs(&self) -> usize {
        self.jobs.unwrap_or_else(default_jobs)
    }

    fn engine(&self, manifest: &DatasetManifest, videos: Option<&[&str]>) -> anyhow::Result<Engine> {
        let components = self.components();
        let ensemble = match (&self.codebooks, components.vis) {
            (Some(dir), _) => Some(CodebookEnsemble::load(dir)?),
            (None, true) => bail!(Error::InvalidConfig("modes using vis need --codebooks".into())),
            (None, false) => None,
        };
        let dataset = match videos {
            Some(ids) => load_videos(manifest, ids, self.stride)?,
            None => load_dataset(manifest, self.stride)?,
        };
        let seq = SeqConfig {
            denominator: self.denominator,
            tau: self.tau,
        };
        Ok(Engine::new(dataset, ensemble, seq, components)?)
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate { manifest, stride } => {
            let m = load_manifest(&manifest)?;
            for w in m.warnings() {
                println!("warning: {w}");
            }
            let d = load_dataset(&m, stride)?;
            println!(
                "ok: {} apps, {} videos, embedding dimension {}",
                m.apps().len(),
                d.len(),
                d.dim()
            );
        }
        Command::TrainCodebooks {
            corpus,
            out,
            seed,
            k,
            ensemble_size,
            subset_size,
            max_iters,
            tol,
            jobs,
        } => {
            let rows = load_embedding_corpus(&corpus)?;
            let params = EnsembleParams {
                k,
                ensemble_size,
                subset_size,
                seed,
                max_iters,
                tol,
            };
            let corpus_id = corpus
                .file_name()
                .map_or_else(|| corpus.display().to_string(), |n| n.to_string_lossy().into_owned());
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or_else(default_jobs))
                .build()?;
            let ensemble = pool.install(|| train_ensemble(&rows, &params, &corpus_id))?;
            ensemble.save(&out)?;
            println!("wrote {} codebooks (K={k}) to {}", ensemble.len(), out.display());
        }
        Command::GenTasks {
            manifest,
            seed,
            app,
            out,
        } => {
            let m = load_manifest(&manifest)?;
            let tasks = match app {
                Some(a) => generate_tasks(&m, &a, seed)?,
                None => generate_all_tasks(&m, seed)?,
            };
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            write_tasks(&out, &tasks)?;
            println!("wrote {} tasks to {}", tasks.len(), out.display());
        }
        Command::Evaluate { run, tasks, seed, out } => {
            let m = load_manifest(&run.manifest)?;
            let tasks: Vec<DuplicateTask> = match (tasks, seed) {
                (Some(path), _) => read_tasks(path)?,
                (None, Some(seed)) => generate_all_tasks(&m, seed)?,
                (None, None) => bail!(Error::InvalidConfig("evaluate needs --tasks or --seed".into())),
            };
            let weights = run.weights()?;
            let engine = run.engine(&m, None)?;
            let mut report = evaluate(&engine, &tasks, &weights, run.jobs())?;
            report.header.seed = seed;
            report.header.sample_stride = run.stride;
            let summary = summary_table(&report);
            write_text(&out.join("report.json"), &report.to_json())?;
            write_text(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
        }
        Command::Rank {
            run,
            query,
            corpus,
            out,
        } => {
            let m = load_manifest(&run.manifest)?;
            let weights = run.weights()?;
            let mut ids: Vec<&str> = corpus.iter().map(String::as_str).collect();
            ids.push(&query);
            let engine = run.engine(&m, Some(&ids))?;
            let task = DuplicateTask {
                task_id: "query".into(),
                app_id: m.video(&query)?.app_id.clone(),
                query: query.clone(),
                corpus: corpus.clone(),
                ground_truth: Default::default(),
            };
            let mut rankings = Vec::new();
            for w in &weights {
                let mut r = rank_corpus(&task, &engine.scorer(*w))?;
                r.task_id = w.label();
                rankings.push(r);
            }
            let mut json = serde_json::to_string_pretty(&rankings)?;
            json.push('\n');
            match out {
                Some(path) => {
                    write_text(&path, &json)?;
                    for r in &rankings {
                        println!("{}", r.task_id);
                        for (i, e) in r.entries.iter().enumerate() {
                            println!("{:>4}  {:<32}  {:.6}", i + 1, e.video_id, e.score);
                        }
                    }
                }
                None => print!("{json}"),
            }
        }
        Command::Synth { out, seed } => {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            let o = generate(&cfg, &out)?;
            println!(
                "wrote {} videos to {} and {} screenshots to {}",
                o.videos,
                o.manifest.display(),
                o.screenshots,
                o.screenshot_dir.display()
            );
        }
        Command::DumpText { manifest, video } => {
            let m = load_manifest(&manifest)?;
            let ids: Vec<String> = if video.is_empty() {
                m.video_ids().into_iter().map(String::from).collect()
            } else {
                video
            };
            let mut vocab = Vocabulary::new();
            let mut dumps = Vec::new();
            for id in &ids {
                let v = read_video_artifact(&m, id)?;
                let doc = build_document(&v, &mut vocab);
                dumps.push(doc.dump(&vocab));
            }
            println!("{}", serde_json::to_string_pretty(&dumps)?);
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DUPVID_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
