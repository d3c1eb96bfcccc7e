mod common;

use std::path::{Path, PathBuf};

use dupvid_core::codebook::{load_embedding_corpus, train_ensemble, CodebookEnsemble, EnsembleMember};
use dupvid_core::eval::tasks::generate_tasks;
use dupvid_core::eval::{evaluate, rank_scores, CombinationWeights, Components, Mode};
use dupvid_core::ingest::load_dataset;
use dupvid_core::synth::generate;
use dupvid_core::visual::{signature_similarity, visual_signature};

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn checked_in_dataset_regenerates_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    generate(&common::synth_config(), dir.path()).unwrap();
    let fresh = files(dir.path());
    let checked_in: Vec<PathBuf> = files(&common::synthetic_dir())
        .into_iter()
        .filter(|p| !p.starts_with("codebooks") && p.file_name().unwrap() != "README.md")
        .collect();
    assert_eq!(fresh, checked_in);
    for rel in &fresh {
        let a = std::fs::read(dir.path().join(rel)).unwrap();
        let b = std::fs::read(common::synthetic_dir().join(rel)).unwrap();
        assert!(a == b, "{} differs", rel.display());
    }
}

#[test]
fn checked_in_codebooks_retrain_byte_for_byte() {
    let corpus = load_embedding_corpus(common::synthetic_dir().join("screenshots")).unwrap();
    assert_eq!(corpus.len(), 2400);
    let ensemble = train_ensemble(&corpus, &common::ensemble_params(), "screenshots").unwrap();
    let dir = tempfile::tempdir().unwrap();
    ensemble.save(dir.path()).unwrap();
    let stored = common::synthetic_dir().join("codebooks");
    assert_eq!(files(dir.path()), files(&stored));
    for rel in files(dir.path()) {
        assert!(
            std::fs::read(dir.path().join(&rel)).unwrap() == std::fs::read(stored.join(&rel)).unwrap(),
            "{} differs",
            rel.display()
        );
    }
    assert_eq!(CodebookEnsemble::load(&stored).unwrap(), ensemble);
}

#[test]
fn visual_similarity_properties_on_synthetic_videos() {
    let m = common::manifest();
    let d = load_dataset(&m, None).unwrap();
    let ens = common::ensemble();
    let ids = ["app0-bug00-v0", "app0-bug00-v1", "app0-bug03-v2", "app2-bug09-v0"];
    let sigs: Vec<_> = ids
        .iter()
        .map(|id| visual_signature(d.get(id).unwrap(), &ens).unwrap())
        .collect();
    for a in &sigs {
        assert!((signature_similarity(a, a).value() - 1.0).abs() < 1e-12);
        for b in &sigs {
            let s = signature_similarity(a, b).value();
            assert_eq!(s, signature_similarity(b, a).value());
            assert!((0.0..=1.0).contains(&s));
        }
    }
    assert!(signature_similarity(&sigs[0], &sigs[1]).value() > signature_similarity(&sigs[0], &sigs[2]).value());
}

#[test]
fn visual_ranking_survives_common_scaling() {
    let m = common::manifest();
    let d = load_dataset(&m, None).unwrap();
    let ens = common::ensemble();
    let factor = 3.5f32;
    let scaled_ens = CodebookEnsemble::new(
        ens.members()
            .iter()
            .map(|mem| EnsembleMember {
                codebook: mem.codebook.scaled(factor),
                stats: mem.stats.clone(),
            })
            .collect(),
    )
    .unwrap();
    let tasks = generate_tasks(&m, "app1", common::TASK_SEED).unwrap();
    for task in tasks.iter().step_by(40) {
        let q = d.get(&task.query).unwrap();
        let qs = visual_signature(q, &ens).unwrap();
        let qs2 = visual_signature(&q.scaled(factor), &scaled_ens).unwrap();
        let (mut plain, mut scaled) = (Vec::new(), Vec::new());
        for c in &task.corpus {
            let v = d.get(c).unwrap();
            plain.push(signature_similarity(&qs, &visual_signature(v, &ens).unwrap()).value());
            scaled.push(signature_similarity(&qs2, &visual_signature(&v.scaled(factor), &scaled_ens).unwrap()).value());
        }
        assert_eq!(rank_scores(task, &plain), rank_scores(task, &scaled));
    }
}

#[test]
fn report_is_reproducible_and_labelled() {
    let m = common::manifest();
    let tasks: Vec<_> = generate_tasks(&m, "app2", common::TASK_SEED)
        .unwrap()
        .into_iter()
        .take(60)
        .collect();
    let components = Components {
        vis: true,
        txt: true,
        ..Components::default()
    };
    let engine = common::engine(components);
    let configs = [
        CombinationWeights::new(Mode::VisTxt),
        CombinationWeights::new(Mode::Txt),
    ];
    let a = evaluate(&engine, &tasks, &configs, 3).unwrap();
    let b = evaluate(&engine, &tasks, &configs, 2).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.header.task_count, 60);
    assert!(a.header.task_enumeration.contains("810"));
    assert_eq!(a.significance.len(), 2);
    assert!(a.configuration("vis+txt").unwrap().mrr > 0.9);

    let seq_only = [CombinationWeights::new(Mode::SeqVis)];
    assert!(evaluate(&engine, &tasks, &seq_only, 1).is_err());
}
