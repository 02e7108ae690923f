//! Experiment runners. Each returns its result rows together with a manifest
//! of every generated sample, so a run can be regenerated exactly and split
//! hygiene can be checked after the fact.

mod checks;
mod config;
mod detect;
mod features;
mod noise;
mod results;
mod sweep;
mod verify;

use std::collections::HashSet;

pub use checks::{
    all_passed, detect_checks, noise_checks, sweep_checks, verify_checks, Check, HOG_SATURATION, NOISE_PIXELS_MAX,
    NOISE_QUAD_MIN, QUAD_SLACK, SHUFFLED_RANGE,
};
pub use config::{ExperimentConfig, ExperimentKind, FeatureKind, WORKERS_ENV};
pub use detect::{background, positive, precision_recall, run_detect_desk, write_pr_curves, DETECT_FEATURES};
pub use features::{FeatureExtractor, Storage, TrainingRows};
pub use noise::{run_noise_vs_structured, PERMUTATIONS, SHUFFLED_CONTROL};
pub use results::{emit_csv, read_csv, CsvAppender, ResultRow};
pub use sweep::{
    identities, patch_rms, run_alignment_sweep, sweep_window, Identity, Multiclass, CLASSES, PROGRESS_FILE,
    REFERENCE_FRAME, TEST_IDENTITIES, TRAIN_IDENTITIES,
};
pub use verify::{verify_compact, verify_reformulation, VerifyReport, COMPACT_TOLERANCE, REFORM_TOLERANCE};

use crate::error::{Error, Result};
use crate::synth::ManifestEntry;

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    /// Generated samples; ids start with `train` or `test`.
    pub manifest: Vec<ManifestEntry>,
    pub curves: Vec<PrCurve>,
}

impl RunOutput {
    pub fn row(&self, experiment: &str, feature: FeatureKind) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.experiment == experiment && r.feature == feature.name())
    }
}

/// Precision-recall pairs of one feature, ordered by decreasing threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub feature: String,
    /// `(threshold, precision, recall)`.
    pub points: Vec<(f64, f64, f64)>,
    pub eer: f64,
}

/// Errors if any generator seed is used by both a `train` and a `test` entry.
pub fn check_split_hygiene(manifest: &[ManifestEntry]) -> Result<()> {
    let train: HashSet<u64> = manifest
        .iter()
        .filter(|e| e.id.starts_with("train"))
        .map(|e| e.seed)
        .collect();
    if let Some(e) = manifest
        .iter()
        .find(|e| e.id.starts_with("test") && train.contains(&e.seed))
    {
        return Err(Error::InvalidArgument(format!(
            "test sample {} reuses a training seed",
            e.id
        )));
    }
    Ok(())
}
