//! Desk-scale detection: textured silhouettes of random polarity pasted on
//! cluttered backgrounds, against background patches alone.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ExperimentKind, FeatureKind};
use super::features::FeatureExtractor;
use super::results::ResultRow;
use super::sweep::patch_rms;
use super::{check_split_hygiene, PrCurve, RunOutput};
use crate::error::{Error, Result};
use crate::image::{power_normalize, Image};
use crate::quad::LocalWindow;
use crate::svm::{dcd_train, Dataset};
use crate::synth::{derive_seed, render_shapes, sample_pink_noise, synthesize_set, ManifestEntry, WarpSpec};

pub const WARPS_PER_POSITIVE: usize = 20;
pub const NEGATIVES_PER_POSITIVE: usize = 2;
pub const MIN_PER_CLASS: usize = 100;
/// Warped copies per held-out positive.
pub const TEST_WARPS: usize = 10;

pub const DETECT_FEATURES: [FeatureKind; 3] = [FeatureKind::Pixels, FeatureKind::HogBaseline, FeatureKind::Quad];

/// Pink noise plus a few random shapes, power-normalized.
pub fn background(size: usize, seed: u64) -> Result<Image> {
    let noise = sample_pink_noise(size, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let shapes = power_normalize(&render_shapes(size, &mut rng)).image;
    let mix = Image::new(
        size,
        size,
        noise
            .data()
            .iter()
            .zip(shapes.data())
            .map(|(a, b)| a + 0.5 * b)
            .collect(),
    )?;
    Ok(power_normalize(&mix).image)
}

/// Coverage in `[0, 1]` of a standing figure: head, torso and two legs,
/// with per-instance proportions drawn from `rng`. Coordinates are in
/// units of a 32-pixel patch.
fn silhouette(size: usize, rng: &mut ChaCha8Rng) -> Image {
    let k = size as f64 / 32.0;
    let cx = 16.0 + rng.random_range(-1.0..1.0);
    let head_r = rng.random_range(2.5..3.5);
    let head_y = rng.random_range(5.0..7.0);
    let torso_w = rng.random_range(3.5..5.0);
    let torso_top = head_y + head_r + 0.5;
    let torso_bottom: f64 = torso_top + rng.random_range(10.0..12.0);
    let leg_w = rng.random_range(1.2..2.0);
    let leg_spread = rng.random_range(1.5..3.5);
    let foot_y = (torso_bottom + rng.random_range(8.0..10.0)).min(31.0);
    let soft = |d: f64| (0.5 - d).clamp(0.0, 1.0);
    Image::from_fn(size, size, |px, py| {
        let (x, y) = (px as f64 / k, py as f64 / k);
        let head = soft(((x - cx).powi(2) + (y - head_y).powi(2)).sqrt() - head_r);
        let torso_d = ((x - cx) / torso_w).powi(2)
            + ((y - (torso_top + torso_bottom) / 2.0) / ((torso_bottom - torso_top) / 2.0)).powi(2);
        let torso = soft((torso_d.sqrt() - 1.0) * torso_w);
        let mut legs: f64 = 0.0;
        for sgn in [-1.0, 1.0] {
            // segment from hip to foot
            let (x0, y0) = (cx + sgn * 1.0, torso_bottom - 2.0);
            let (x1, y1) = (cx + sgn * leg_spread, foot_y);
            let (dx, dy) = (x1 - x0, y1 - y0);
            let t = (((x - x0) * dx + (y - y0) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let d = ((x - x0 - t * dx).powi(2) + (y - y0 - t * dy).powi(2)).sqrt();
            legs = legs.max(soft(d - leg_w));
        }
        head.max(torso).max(legs)
    })
}

/// A silhouette filled with its own texture at a random polarity, pasted on
/// a background.
pub fn positive(size: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = silhouette(size, &mut rng);
    let polarity = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let level = polarity * rng.random_range(0.8..1.6);
    let texture = sample_pink_noise(size, derive_seed(seed, 2, 0))?;
    let bg = background(size, derive_seed(seed, 3, 0))?;
    let data = mask
        .data()
        .iter()
        .zip(texture.data())
        .zip(bg.data())
        .map(|((m, t), b)| (1.0 - m) * b + m * (level + 0.5 * t))
        .collect();
    Image::new(size, size, data)
}

/// Precision and recall at every distinct score, from the highest threshold
/// down to `-inf`, and the break-even error `1 - P` where precision equals
/// recall (linearly interpolated between adjacent points with nonzero
/// recall).
pub fn precision_recall(feature: &str, scores: &[f64], labels: &[f64]) -> PrCurve {
    let positives = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(f64::INFINITY, 1.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] > 0.0 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let recall = if positives > 0.0 { tp / positives } else { 0.0 };
        points.push((threshold, tp / (tp + fp), recall));
    }
    let prevalence = positives / scores.len().max(1) as f64;
    points.push((f64::NEG_INFINITY, prevalence, 1.0));

    // P = R = 0 before the first true positive is not a break-even point, and
    // recall 0 takes the precision at the first true positive
    let mut ranked: Vec<(f64, f64, f64)> = points.iter().skip(1).filter(|p| p.2 > 0.0).copied().collect();
    let anchor = ranked.first().map_or(1.0, |p| p.1);
    ranked.insert(0, (f64::INFINITY, anchor, 0.0));
    let mut eer = 1.0;
    for w in ranked.windows(2) {
        let d0 = w[0].1 - w[0].2;
        let d1 = w[1].1 - w[1].2;
        if d0 >= 0.0 && d1 <= 0.0 {
            let t = if d0 == d1 { 0.0 } else { d0 / (d0 - d1) };
            eer = 1.0 - (w[0].1 + t * (w[1].1 - w[0].1));
            break;
        }
    }
    PrCurve {
        feature: feature.to_string(),
        points,
        eer,
    }
}

pub fn write_pr_curves(curves: &[PrCurve], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "threshold", "precision", "recall"])?;
    for c in curves {
        for &(t, p, r) in &c.points {
            w.write_record([c.feature.clone(), t.to_string(), p.to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Split {
    images: Vec<Image>,
    labels: Vec<f64>,
}

fn make_split(
    cfg: &ExperimentConfig,
    split: u64,
    bases: usize,
    warps: usize,
    manifest: &mut Vec<ManifestEntry>,
) -> Result<Split> {
    let name = if split == 0 { "train" } else { "test" };
    let n = cfg.patch_size;
    let base_seeds: Vec<u64> = (0..bases)
        .map(|i| derive_seed(cfg.seed, 30 + split, i as u64))
        .collect();
    let base = base_seeds.iter().map(|&s| positive(n, s)).collect::<Result<Vec<_>>>()?;
    let spec = WarpSpec::for_image(
        n,
        n,
        patch_rms(n, cfg.rms_levels[0]),
        derive_seed(cfg.seed, 32 + split, 0),
    )?;
    let warped = synthesize_set(&base, warps, &spec, true)?;

    let mut images = Vec::new();
    let mut labels = Vec::new();
    for s in warped {
        manifest.push(
            ManifestEntry::new(
                format!("{name}-pos{}-warp{}", s.base, s.copy),
                base_seeds[s.base],
                "positive",
            )
            .with_transform(&s.transform),
        );
        images.push(power_normalize(&s.image).image);
        labels.push(1.0);
    }
    let negatives = images.len() * NEGATIVES_PER_POSITIVE;
    for i in 0..negatives {
        let seed = derive_seed(cfg.seed, 34 + split, i as u64);
        manifest.push(ManifestEntry::new(format!("{name}-neg{i}"), seed, "negative"));
        images.push(background(n, seed)?);
        labels.push(-1.0);
    }
    Ok(Split { images, labels })
}

/// Trains pixels, HOG and quad detectors on the same split. Rows carry the
/// accuracy at threshold 0; the curves carry the break-even error.
/// `train_sizes[0]` positive bases get 20 warps each, `test_size` held-out
/// bases get 10, and every split has twice as many negatives as positives.
pub fn run_detect_desk(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::DetectDesk {
        return Err(Error::Config(format!("expected detect_desk, got {}", cfg.experiment)));
    }
    let train_bases = cfg.train_sizes[0];
    if train_bases * WARPS_PER_POSITIVE < MIN_PER_CLASS || cfg.test_size * TEST_WARPS < MIN_PER_CLASS {
        return Err(Error::Config(format!(
            "need at least {MIN_PER_CLASS} positives per split; got {} train and {} test",
            train_bases * WARPS_PER_POSITIVE,
            cfg.test_size * TEST_WARPS
        )));
    }
    let mut out = RunOutput::default();
    let train = make_split(cfg, 0, train_bases, WARPS_PER_POSITIVE, &mut out.manifest)?;
    let test = make_split(cfg, 1, cfg.test_size, TEST_WARPS, &mut out.manifest)?;
    check_split_hygiene(&out.manifest)?;

    let n = cfg.patch_size;
    for kind in DETECT_FEATURES {
        let window = LocalWindow::square(cfg.window_radius.unwrap_or(1));
        let mut extractor = FeatureExtractor::new(kind, n, n, Some(window))?;
        let start = Instant::now();
        extractor.fit_scale(&train.images)?;
        let data = Dataset::new(extractor.matrix(&train.images)?, train.labels.clone())?;
        let model = dcd_train(&data, &cfg.dcd_params())?;
        let train_seconds = start.elapsed().as_secs_f64();
        let scores = model.decision_values(&extractor.matrix(&test.images)?)?;
        out.rows.push(ResultRow {
            experiment: cfg.experiment.name().to_string(),
            feature: kind.name().to_string(),
            train_size: train.images.len(),
            rms_level: cfg.rms_levels[0],
            test_accuracy: crate::svm::accuracy(&scores, &test.labels),
            train_seconds,
            feature_dim: extractor.dim(),
            objective: model.objective(),
        });
        out.curves.push(precision_recall(kind.name(), &scores, &test.labels));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pr_endpoints_and_perfect_ranking() {
        let labels = [1.0, -1.0, 1.0, -1.0, -1.0, -1.0];
        let scores = [3.0, -1.0, 2.0, 0.5, -2.0, -3.0];
        let c = precision_recall("x", &scores, &labels);
        let last = *c.points.last().unwrap();
        assert_eq!(last.0, f64::NEG_INFINITY);
        assert_eq!(last.2, 1.0);
        assert!((last.1 - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.eer, 0.0);
    }

    #[test]
    fn break_even_is_interpolated() {
        // ranking: +, -, +, - ; points (P, R): (1, 0), (1, .5), (.5, .5), (2/3, 1), (.5, 1), (.5, 1)
        let c = precision_recall("x", &[4.0, 3.0, 2.0, 1.0], &[1.0, -1.0, 1.0, -1.0]);
        assert!((c.eer - 0.5).abs() < 1e-12);
        let reversed = precision_recall("x", &[1.0, 2.0], &[1.0, -1.0]);
        assert!((reversed.eer - 0.5).abs() < 1e-12, "{}", reversed.eer);
        // a negative on top must not produce the degenerate P = R = 0 crossing
        let c = precision_recall("x", &[5.0, 4.0, 3.0, 2.0], &[-1.0, 1.0, 1.0, -1.0]);
        assert!((c.eer - 0.5).abs() < 1e-12, "{}", c.eer);
    }

    #[test]
    fn positives_are_deterministic() {
        let a = positive(32, 7).unwrap();
        assert_eq!(a, positive(32, 7).unwrap());
        assert!(a.data().iter().all(|v| v.is_finite()));
        let b = background(32, 7).unwrap();
        assert!((b.rms() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_small_class_counts() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::DetectDesk);
        cfg.train_sizes = vec![4];
        assert!(run_detect_desk(&cfg).is_err());
    }
}
