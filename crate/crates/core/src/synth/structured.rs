//! Procedural stand-in for natural image patches: a few edges, line segments
//! and convex polygons, reshaped to the pink-noise spectrum.
//!
//! Shapes are drawn with a bias towards horizontal and vertical orientations,
//! which is what makes the class separable from pink noise by second-order
//! local statistics once the radial spectra are matched.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::check_patch_size;
use super::noise::reshape_to_pink;
use crate::error::Result;
use crate::image::Image;

const EDGE_PROBABILITY: f64 = 0.6;
const CARDINAL_PROBABILITY: f64 = 0.8;
const CARDINAL_JITTER: f64 = 0.1;

fn orientation(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<f64>() < CARDINAL_PROBABILITY {
        let jitter: f64 = Normal::new(0.0, CARDINAL_JITTER).unwrap().sample(rng);
        rng.random_range(0..4) as f64 * FRAC_PI_2 + jitter
    } else {
        rng.random::<f64>() * TAU
    }
}

/// Anti-aliased rendering before spectral reshaping. Coordinates are pixel
/// centres `(x + 0.5, y + 0.5)`.
pub fn render_shapes(patch_size: usize, rng: &mut ChaCha8Rng) -> Image {
    let n = patch_size as f64;
    let mut img = Image::zeros(patch_size, patch_size);
    let shapes = rng.random_range(2..=6);
    for _ in 0..shapes {
        let u: f64 = rng.random();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let contrast = sign * rng.random_range(0.5..1.5);
        let theta = orientation(rng);
        let (nx, ny) = (theta.cos(), theta.sin());
        let (px, py) = (rng.random::<f64>() * n, rng.random::<f64>() * n);

        let coverage: Box<dyn Fn(f64, f64) -> f64> = if u < EDGE_PROBABILITY {
            Box::new(move |dx, dy| (0.5 - (dx * nx + dy * ny)).clamp(0.0, 1.0))
        } else if u < EDGE_PROBABILITY + (1.0 - EDGE_PROBABILITY) / 2.0 {
            let length = rng.random_range(3.0..n.max(3.0 + 1e-9));
            let width = rng.random_range(0.5..2.0);
            Box::new(move |dx, dy| {
                let across = dx * nx + dy * ny;
                let along = -dx * ny + dy * nx;
                if along.abs() < length / 2.0 {
                    (width / 2.0 + 0.5 - across.abs()).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
        } else {
            let radius = rng.random_range(2.0..6.0);
            let sides = rng.random_range(3..=6);
            let base = rng.random::<f64>() * TAU;
            let normals: Vec<(f64, f64)> = (0..sides)
                .map(|j| {
                    let a = base + TAU * j as f64 / sides as f64;
                    (a.cos(), a.sin())
                })
                .collect();
            Box::new(move |dx, dy| {
                normals
                    .iter()
                    .map(|(ax, ay)| (radius - (dx * ax + dy * ay) + 0.5).clamp(0.0, 1.0))
                    .fold(1.0, f64::min)
            })
        };

        let data = img.data_mut();
        for y in 0..patch_size {
            for x in 0..patch_size {
                let c = coverage(x as f64 + 0.5 - px, y as f64 + 0.5 - py);
                data[y * patch_size + x] += contrast * c;
            }
        }
    }
    img
}

/// Structured patch with the pink-noise radial spectrum, power-normalized.
pub fn sample_structured(patch_size: usize, seed: u64) -> Result<Image> {
    check_patch_size(patch_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let raw = render_shapes(patch_size, &mut rng);
        let out = reshape_to_pink(&raw);
        // a rendering that missed the patch entirely has no variance; redraw
        if out.rms() > 0.5 {
            return Ok(out);
        }
    }
}
