//! Structured (or natural) patches against pink noise with a matched
//! spectrum. A linear classifier on pixels only sees second-order statistics
//! shared by both classes; on local pixel products it can pick up structure.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ExperimentKind, FeatureKind};
use super::features::FeatureExtractor;
use super::results::ResultRow;
use super::{check_split_hygiene, RunOutput};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::quad::LocalWindow;
use crate::svm::{accuracy, dcd_train, Dataset};
use crate::synth::{derive_seed, ingest_patches, sample_pink_noise, sample_structured, ManifestEntry};

/// Experiment name of the row trained on permuted labels.
pub const SHUFFLED_CONTROL: &str = "noise_vs_structured_shuffled";

/// Label permutations averaged in the control row.
pub const PERMUTATIONS: usize = 5;

const NOISE_LABEL: f64 = -1.0;
const STRUCTURED_LABEL: f64 = 1.0;

struct Split {
    images: Vec<Image>,
    labels: Vec<f64>,
}

fn make_split(cfg: &ExperimentConfig, split: u64, count: usize, manifest: &mut Vec<ManifestEntry>) -> Result<Split> {
    let name = if split == 0 { "train" } else { "test" };
    let per_class = count / 2;
    let noise_root = derive_seed(cfg.seed, split, 0);
    let structured_root = derive_seed(cfg.seed, split, 1);

    let structured = match &cfg.corpus_dir {
        Some(dir) => {
            manifest.push(ManifestEntry::new(
                format!("{name}-natural"),
                structured_root,
                "natural",
            ));
            ingest_patches(dir, cfg.patch_size, per_class, structured_root)?
        }
        None => (0..per_class)
            .map(|i| {
                let seed = derive_seed(structured_root, i as u64, 0);
                manifest.push(ManifestEntry::new(format!("{name}-structured-{i}"), seed, "structured"));
                sample_structured(cfg.patch_size, seed)
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let mut images = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for (i, s) in structured.into_iter().enumerate() {
        let seed = derive_seed(noise_root, i as u64, 0);
        manifest.push(ManifestEntry::new(format!("{name}-noise-{i}"), seed, "noise"));
        images.push(s);
        labels.push(STRUCTURED_LABEL);
        images.push(sample_pink_noise(cfg.patch_size, seed)?);
        labels.push(NOISE_LABEL);
    }
    Ok(Split { images, labels })
}

fn train_and_score(
    cfg: &ExperimentConfig,
    experiment: &str,
    extractor: &mut FeatureExtractor,
    train: &Split,
    train_labels: &[f64],
    test: &Split,
) -> Result<ResultRow> {
    let start = Instant::now();
    extractor.fit_scale(&train.images)?;
    let data = Dataset::new(extractor.matrix(&train.images)?, train_labels.to_vec())?;
    let model = dcd_train(&data, &cfg.dcd_params())?;
    let train_seconds = start.elapsed().as_secs_f64();
    let decisions = model.decision_values(&extractor.matrix(&test.images)?)?;
    Ok(ResultRow {
        experiment: experiment.to_string(),
        feature: extractor.kind().name().to_string(),
        train_size: train.images.len(),
        rms_level: 0.0,
        test_accuracy: accuracy(&decisions, &test.labels),
        train_seconds,
        feature_dim: extractor.dim(),
        objective: model.objective(),
    })
}

/// A permutation of `labels` in which each class receives as many positive
/// as negative labels (up to one for odd class sizes), so the permuted
/// labels carry no information about the true class.
fn balanced_permutation(labels: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; labels.len()];
    let mut spare = STRUCTURED_LABEL;
    for class in [STRUCTURED_LABEL, NOISE_LABEL] {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut assigned: Vec<f64> = (0..idx.len())
            .map(|k| match k % 2 {
                0 => STRUCTURED_LABEL,
                _ => NOISE_LABEL,
            })
            .collect();
        if idx.len() % 2 == 1 {
            *assigned.last_mut().unwrap() = spare;
            spare = -spare;
        }
        assigned.shuffle(&mut rng);
        for (i, y) in idx.into_iter().zip(assigned) {
            out[i] = y;
        }
    }
    out
}

/// Trains pixel and quad classifiers on the same split, plus a quad control
/// on permuted training labels (reported under [`SHUFFLED_CONTROL`] as the
/// mean accuracy and objective over several permutations, with the summed
/// training time).
/// `train_sizes[0]` and `test_size` are total example counts, half per class.
pub fn run_noise_vs_structured(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::NoiseVsStructured {
        return Err(Error::Config(format!(
            "expected noise_vs_structured, got {}",
            cfg.experiment
        )));
    }
    let n_train = cfg.train_sizes[0];
    if n_train < 2 || cfg.test_size < 2 {
        return Err(Error::Config("need at least one example per class".into()));
    }
    let mut manifest = Vec::new();
    let train = make_split(cfg, 0, n_train, &mut manifest)?;
    let test = make_split(cfg, 1, cfg.test_size, &mut manifest)?;
    check_split_hygiene(&manifest)?;

    let p = cfg.patch_size;
    let window = LocalWindow::square(cfg.window_radius.unwrap_or(1));
    let experiment = cfg.experiment.name();
    let mut rows = Vec::new();
    let mut pixels = FeatureExtractor::new(FeatureKind::Pixels, p, p, None)?;
    rows.push(train_and_score(
        cfg,
        experiment,
        &mut pixels,
        &train,
        &train.labels,
        &test,
    )?);
    let mut quad = FeatureExtractor::new(FeatureKind::Quad, p, p, Some(window))?;
    rows.push(train_and_score(
        cfg,
        experiment,
        &mut quad,
        &train,
        &train.labels,
        &test,
    )?);

    let mut control: Option<ResultRow> = None;
    for k in 0..PERMUTATIONS {
        let shuffled = balanced_permutation(&train.labels, derive_seed(cfg.seed, 2, k as u64));
        let r = train_and_score(cfg, SHUFFLED_CONTROL, &mut quad, &train, &shuffled, &test)?;
        control = Some(match control {
            None => r,
            Some(mut acc) => {
                acc.test_accuracy += r.test_accuracy;
                acc.objective += r.objective;
                acc.train_seconds += r.train_seconds;
                acc
            }
        });
    }
    let mut control = control.expect("at least one permutation");
    control.test_accuracy /= PERMUTATIONS as f64;
    control.objective /= PERMUTATIONS as f64;
    rows.push(control);

    Ok(RunOutput {
        rows,
        manifest,
        curves: Vec::new(),
    })
}
