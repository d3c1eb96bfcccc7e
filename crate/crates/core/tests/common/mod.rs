#![allow(dead_code)]

use std::path::PathBuf;

use dupvid_core::codebook::{CodebookEnsemble, EnsembleParams};
use dupvid_core::eval::{Components, Engine};
use dupvid_core::ingest::{load_dataset, load_manifest, DatasetManifest};
use dupvid_core::sequential::SeqConfig;
use dupvid_core::synth::SynthConfig;

pub const SYNTH_SEED: u64 = 7;
pub const TASK_SEED: u64 = 3;

pub fn synthetic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic")
}

pub fn synth_config() -> SynthConfig {
    SynthConfig {
        seed: SYNTH_SEED,
        ..SynthConfig::default()
    }
}

/// Parameters the checked-in codebooks were trained with.
pub fn ensemble_params() -> EnsembleParams {
    EnsembleParams {
        k: 64,
        subset_size: 600,
        seed: 11,
        ..EnsembleParams::default()
    }
}

pub fn manifest() -> DatasetManifest {
    load_manifest(synthetic_dir().join("manifest.json")).expect("synthetic manifest")
}

pub fn ensemble() -> CodebookEnsemble {
    CodebookEnsemble::load(synthetic_dir().join("codebooks")).expect("synthetic codebooks")
}

pub fn engine(components: Components) -> Engine {
    let dataset = load_dataset(&manifest(), None).expect("synthetic dataset");
    Engine::new(dataset, Some(ensemble()), SeqConfig::default(), components).expect("engine")
}

pub fn all_components() -> Components {
    Components {
        vis: true,
        txt: true,
        seq_vis: true,
        seq_txt: true,
    }
}
