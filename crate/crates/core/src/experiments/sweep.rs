//! Accuracy as a function of misalignment and training-set size on a
//! procedural six-class face-like set.
//!
//! Each class fixes an expression (eye openness, brow raise and tilt, mouth
//! shape); each identity jitters face geometry, contrast and background and
//! carries its own pink-noise skin texture. Training sets are warped copies
//! of 50 identities per class; tests use 20 unseen identities per class
//! warped at the same RMS level.
//!
//! `C` applies per base identity: a set with `k` warped copies of each
//! identity trains with `C / k`, so adding copies adds variation but not
//! weight.

use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::features::{FeatureExtractor, Storage, TrainingRows};
use super::results::{CsvAppender, ResultRow};
use super::{check_split_hygiene, RunOutput};
use crate::error::{Error, Result};
use crate::image::{power_normalize, Image};
use crate::quad::LocalWindow;
use crate::svm::{DcdParams, SvmModel};
use crate::synth::{derive_seed, sample_pink_noise, synthesize_set, ManifestEntry, WarpSpec};

pub const CLASSES: usize = 6;
pub const TRAIN_IDENTITIES: usize = 50;
pub const TEST_IDENTITIES: usize = 20;
/// Largest number of warped copies drawn per training identity.
pub const MAX_PER_EXAMPLE: usize = 1000;
/// Rows of finished cells, in completion order.
pub const PROGRESS_FILE: &str = "sweep_progress.csv";
/// Side of the frame in which RMS levels are measured.
pub const REFERENCE_FRAME: f64 = 80.0;

/// Per-class expression: eye openness, brow raise (px), brow tilt, mouth
/// width, curvature and opening.
const EXPRESSIONS: [[f64; 6]; CLASSES] = [
    [1.0, 0.0, 0.0, 9.0, 0.0, 0.8],
    [0.5, 0.0, 0.0, 14.0, 0.5, 1.2],
    [1.0, 1.5, -0.5, 9.0, -0.5, 0.8],
    [2.0, 3.0, 0.0, 6.0, 0.0, 4.5],
    [0.7, -1.0, 0.6, 8.0, -0.1, 0.6],
    [1.0, 0.0, 0.2, 12.0, 0.0, 2.5],
];

const TEXTURE: f64 = 0.2;

/// Per-identity geometry, in units of a 32-pixel patch.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub class: usize,
    center: (f64, f64),
    face_half_width: f64,
    face_half_height: f64,
    eye_spacing: f64,
    eye_height: f64,
    mouth_height: f64,
    contrast: f64,
    background: f64,
    texture: u64,
}

impl Identity {
    pub fn sample(class: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = Normal::new(0.0, 0.7).unwrap();
        Self {
            class,
            center: (16.0 + jitter.sample(&mut rng), 16.0 + jitter.sample(&mut rng)),
            face_half_width: rng.random_range(10.5..13.0),
            face_half_height: rng.random_range(12.5..15.0),
            eye_spacing: rng.random_range(4.5..6.0),
            eye_height: rng.random_range(3.0..5.0),
            mouth_height: rng.random_range(6.0..8.0),
            contrast: rng.random_range(0.6..1.2),
            background: rng.random_range(-0.3..0.3),
            texture: rng.random(),
        }
    }

    /// Renders at `size x size`, not normalized.
    pub fn render(&self, size: usize) -> Image {
        let k = size as f64 / 32.0;
        let soft = |d: f64| (0.5 - d).clamp(0.0, 1.0);
        let [openness, raise, tilt, mouth_width, curvature, opening] = EXPRESSIONS[self.class];
        let (cx, cy) = self.center;
        let (fw, fh) = (self.face_half_width, self.face_half_height);
        let contrast = self.contrast;
        let texture = sample_pink_noise(size, self.texture).expect("patch size checked by caller");
        Image::from_fn(size, size, |px, py| {
            let (x, y) = (px as f64 / k, py as f64 / k);
            let mut v = self.background + TEXTURE * texture.get(px, py);
            let d = (((x - cx) / fw).powi(2) + ((y - cy) / fh).powi(2)).sqrt();
            v += contrast * soft((d - 1.0) * fw.min(fh));
            let ey = cy - self.eye_height;
            for sgn in [-1.0, 1.0] {
                let ex = cx + sgn * self.eye_spacing;
                let de = (((x - ex) / 2.5).powi(2) + ((y - ey) / (1.5 * openness)).powi(2)).sqrt();
                v -= contrast * soft((de - 1.0) * 2.0);
                let t = x - ex;
                let by = ey - 3.5 - raise + sgn * tilt * t;
                if t.abs() < 3.5 {
                    v -= 0.9 * contrast * soft((y - by).abs() - 0.8);
                }
            }
            let t = x - cx;
            let my = cy + self.mouth_height - curvature * (t * t / mouth_width - mouth_width / 4.0);
            let half = mouth_width / 2.0;
            if t.abs() < half {
                let taper = (1.0 - (t / half).powi(2)).sqrt();
                v -= contrast * soft((y - my).abs() - opening * taper);
            }
            v
        })
    }
}

/// Identities of one split, class-major.
pub fn identities(seed: u64, split: u64, per_class: usize) -> Vec<(Identity, u64)> {
    (0..CLASSES)
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .map(|(c, i)| {
            let s = derive_seed(seed, 10 + split, (c * per_class + i) as u64);
            (Identity::sample(c, s), s)
        })
        .collect()
}

/// Warped, power-normalized copies of `ids`, with manifest entries.
fn warped_split(
    ids: &[(Identity, u64)],
    size: usize,
    per_example: usize,
    rms: f64,
    warp_seed: u64,
    split: &str,
    manifest: &mut Vec<ManifestEntry>,
) -> Result<(Vec<Image>, Vec<usize>)> {
    let base: Vec<Image> = ids.iter().map(|(id, _)| id.render(size)).collect();
    let spec = WarpSpec::for_image(size, size, patch_rms(size, rms), warp_seed)?;
    let set = synthesize_set(&base, per_example, &spec, false)?;
    let mut images = Vec::with_capacity(set.len());
    let mut classes = Vec::with_capacity(set.len());
    for s in set {
        let (id, id_seed) = ids[s.base];
        manifest.push(
            ManifestEntry::new(
                format!("{split}-id{}-warp{}", s.base, s.copy),
                id_seed,
                format!("class{}", id.class),
            )
            .with_transform(&s.transform),
        );
        images.push(power_normalize(&s.image).image);
        classes.push(id.class);
    }
    Ok((images, classes))
}

/// One-vs-rest models, one per class.
pub struct Multiclass {
    pub models: Vec<SvmModel>,
}

impl Multiclass {
    pub fn train(rows: &TrainingRows<'_>, classes: &[usize], params: &DcdParams) -> Result<Self> {
        let models = (0..CLASSES)
            .into_par_iter()
            .map(|c| {
                let labels: Vec<f64> = classes.iter().map(|&k| if k == c { 1.0 } else { -1.0 }).collect();
                rows.train(&labels, params)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.models
            .iter()
            .enumerate()
            .map(|(c, m)| (c, m.decision(row)))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
            .0
    }

    pub fn mean_objective(&self) -> f64 {
        self.models.iter().map(SvmModel::objective).sum::<f64>() / self.models.len() as f64
    }
}

fn accuracy_streaming(
    model: &Multiclass,
    extractor: &FeatureExtractor,
    images: &[Image],
    classes: &[usize],
) -> Result<f64> {
    let correct = images
        .par_iter()
        .zip(classes)
        .map_init(
            || vec![0.0; extractor.dim()],
            |buf, (im, &c)| -> Result<usize> {
                extractor.extract_into(im, buf)?;
                Ok((model.predict(buf) == c) as usize)
            },
        )
        .sum::<Result<usize>>()?;
    Ok(correct as f64 / images.len() as f64)
}

/// RMS levels are given in an 80-pixel frame; this is the same error in
/// pixels of a `patch_size` patch.
pub fn patch_rms(patch_size: usize, rms: f64) -> f64 {
    rms * patch_size as f64 / REFERENCE_FRAME
}

/// Quad window for an RMS level unless the config fixes the radius. The
/// window side follows the error in patch pixels.
pub fn sweep_window(cfg: &ExperimentConfig, rms: f64) -> LocalWindow {
    cfg.window_radius.map_or_else(
        || LocalWindow::for_rms(patch_rms(cfg.patch_size, rms)),
        LocalWindow::square,
    )
}

fn run_cell(cfg: &ExperimentConfig, rms: f64, size: usize, budget: u64) -> Result<(ResultRow, Vec<ManifestEntry>)> {
    let n = cfg.patch_size;
    let per_example = size / (CLASSES * TRAIN_IDENTITIES);
    let mut manifest = Vec::new();
    let rms_key = rms.to_bits();
    let train_ids = identities(cfg.seed, 0, TRAIN_IDENTITIES);
    let test_ids = identities(cfg.seed, 1, TEST_IDENTITIES);
    let (train, train_classes) = warped_split(
        &train_ids,
        n,
        per_example,
        rms,
        derive_seed(cfg.seed, 20, rms_key),
        "train",
        &mut manifest,
    )?;
    let (test, test_classes) = warped_split(
        &test_ids,
        n,
        cfg.test_size,
        rms,
        derive_seed(cfg.seed, 21, rms_key),
        "test",
        &mut manifest,
    )?;

    let start = Instant::now();
    let mut extractor = FeatureExtractor::new(cfg.feature, n, n, Some(sweep_window(cfg, rms)))?;
    extractor.fit_scale(&train)?;
    let storage = Storage::choose(extractor.bytes_for(train.len()), budget, cfg.spill_to_disk);
    let spill_dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(std::env::temp_dir)
        .join(format!("spill-{}-{size}-{rms}", std::process::id()));
    let rows = TrainingRows::prepare(storage, &train, &extractor, &spill_dir)?;
    let mut params = cfg.dcd_params();
    params.c /= per_example as f64;
    let model = Multiclass::train(&rows, &train_classes, &params)?;
    drop(rows);
    let _ = std::fs::remove_dir(&spill_dir);
    let train_seconds = start.elapsed().as_secs_f64();
    let test_accuracy = accuracy_streaming(&model, &extractor, &test, &test_classes)?;
    Ok((
        ResultRow {
            experiment: cfg.experiment.name().to_string(),
            feature: cfg.feature.name().to_string(),
            train_size: size,
            rms_level: rms,
            test_accuracy,
            train_seconds,
            feature_dim: extractor.dim(),
            objective: model.mean_objective(),
        },
        manifest,
    ))
}

/// One row per `(rms level, train size)` cell, ordered by rms then size.
/// With an output directory set, each row is also appended to
/// [`PROGRESS_FILE`] there as soon as its cell finishes.
/// Train sizes must be multiples of the 300 training identities. The
/// reported objective is the mean over the six one-vs-rest models.
pub fn run_alignment_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::AlignmentSweep {
        return Err(Error::Config(format!(
            "expected alignment_sweep, got {}",
            cfg.experiment
        )));
    }
    let base = CLASSES * TRAIN_IDENTITIES;
    for &s in &cfg.train_sizes {
        if s % base != 0 || s / base > MAX_PER_EXAMPLE {
            return Err(Error::Config(format!(
                "train size {s} is not a multiple of {base} identities with at most {MAX_PER_EXAMPLE} copies each"
            )));
        }
    }
    let workers = cfg.worker_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let cells: Vec<(f64, usize)> = cfg
        .rms_levels
        .iter()
        .flat_map(|&r| cfg.train_sizes.iter().map(move |&s| (r, s)))
        .collect();
    let budget = cfg.memory_budget / workers as u64;
    let progress = match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(Mutex::new(CsvAppender::open(&dir.join(PROGRESS_FILE))?))
        }
        None => None,
    };
    let results = pool.install(|| {
        cells
            .par_iter()
            .with_max_len(1)
            .map(|&(rms, size)| {
                let cell = run_cell(cfg, rms, size, budget)?;
                if let Some(p) = &progress {
                    p.lock().expect("progress writer poisoned").push(&cell.0)?;
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = RunOutput::default();
    for (row, manifest) in results {
        out.rows.push(row);
        out.manifest.extend(manifest);
    }
    check_split_hygiene(&out.manifest)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_are_deterministic_and_distinct() {
        let a = identities(1, 0, 3);
        let b = identities(1, 0, 3);
        let t = identities(1, 1, 3);
        assert_eq!(a.len(), 18);
        assert_eq!(
            a.iter().map(|x| x.1).collect::<Vec<_>>(),
            b.iter().map(|x| x.1).collect::<Vec<_>>()
        );
        assert!(a.iter().all(|x| t.iter().all(|y| y.1 != x.1)));
        assert_eq!(a[4].0.class, 1);
    }

    #[test]
    fn classes_render_differently() {
        let base = Identity::sample(0, 5);
        let imgs: Vec<Image> = (0..CLASSES).map(|c| Identity { class: c, ..base }.render(32)).collect();
        for i in 0..CLASSES {
            for j in 0..i {
                let diff: f64 = imgs[i]
                    .data()
                    .iter()
                    .zip(imgs[j].data())
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                assert!(diff > 1.0, "classes {i} and {j} look the same");
            }
        }
    }

    #[test]
    fn rejects_unproducible_sizes() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::AlignmentSweep);
        cfg.train_sizes = vec![500];
        assert!(run_alignment_sweep(&cfg).is_err());
    }
}
