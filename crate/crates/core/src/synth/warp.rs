//! Similarity warps with a prescribed RMS displacement of reference points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::derive_seed;
use crate::error::{Error, Result};
use crate::image::Image;

/// `p -> scale * R(rotation) * p + translation`, in pixel coordinates where
/// pixel `(x, y)` sits at the integer point `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: f64,
    pub translation: (f64, f64),
}

impl SimilarityTransform {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        rotation: 0.0,
        translation: (0.0, 0.0),
    };

    pub fn new(scale: f64, rotation: f64, translation: (f64, f64)) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    /// Scales and rotates about `center`, then shifts by `shift`.
    pub fn about(center: (f64, f64), scale: f64, rotation: f64, shift: (f64, f64)) -> Result<Self> {
        let mut t = Self::new(scale, rotation, (0.0, 0.0))?;
        let (rx, ry) = t.linear(center);
        t.translation = (center.0 - rx + shift.0, center.1 - ry + shift.1);
        Ok(t)
    }

    fn linear(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        (self.scale * (c * x - s * y), self.scale * (s * x + c * y))
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (x, y) = self.linear(p);
        (x + self.translation.0, y + self.translation.1)
    }

    pub fn inverse(&self) -> Self {
        let inv = Self {
            scale: 1.0 / self.scale,
            rotation: -self.rotation,
            translation: (0.0, 0.0),
        };
        let (tx, ty) = inv.linear(self.translation);
        Self {
            translation: (-tx, -ty),
            ..inv
        }
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Self) -> Self {
        let (tx, ty) = other.apply(self.translation);
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation + other.rotation,
            translation: (tx, ty),
        }
    }

    pub fn rms_displacement(&self, points: &[(f64, f64)]) -> f64 {
        let sum: f64 = points
            .iter()
            .map(|&p| {
                let q = self.apply(p);
                (q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)
            })
            .sum();
        (sum / points.len() as f64).sqrt()
    }
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpSpec {
    pub target_rms: f64,
    pub reference_points: Vec<(f64, f64)>,
    pub seed: u64,
}

impl WarpSpec {
    pub fn new(target_rms: f64, reference_points: Vec<(f64, f64)>, seed: u64) -> Result<Self> {
        let spec = Self {
            target_rms,
            reference_points,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Corners and centre of a `width x height` image.
    pub fn for_image(width: usize, height: usize, target_rms: f64, seed: u64) -> Result<Self> {
        let (w, h) = ((width.max(1) - 1) as f64, (height.max(1) - 1) as f64);
        Self::new(
            target_rms,
            vec![(0.0, 0.0), (w, 0.0), (0.0, h), (w, h), (w / 2.0, h / 2.0)],
            seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rms >= 0.0 && self.target_rms.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "target RMS must be non-negative, got {}",
                self.target_rms
            )));
        }
        let pts = &self.reference_points;
        if pts.len() < 3 {
            return Err(Error::InvalidArgument("need at least 3 reference points".into()));
        }
        let (x0, y0) = pts[0];
        let spread = pts
            .iter()
            .map(|&(x, y)| (x - x0).abs().max((y - y0).abs()))
            .fold(0.0, f64::max);
        let non_collinear = pts.iter().any(|&(x2, y2)| {
            pts.iter()
                .any(|&(x1, y1)| ((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)).abs() > 1e-9 * spread * spread)
        });
        if !non_collinear {
            return Err(Error::InvalidArgument("reference points are collinear".into()));
        }
        Ok(())
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.reference_points.len() as f64;
        let (sx, sy) = self
            .reference_points
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        (sx / n, sy / n)
    }

    /// Same points and target, different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Draws a random similarity about the reference centroid whose RMS
/// displacement of the reference points equals `spec.target_rms`.
///
/// The direction `(d_log_scale, d_rotation, dx, dy)` is standard normal, with
/// the first two divided by the RMS radius of the reference points so every
/// component moves points by comparable amounts. The magnitude along that
/// direction is found by bisection.
pub fn sample_similarity_warp(spec: &WarpSpec) -> Result<SimilarityTransform> {
    spec.validate()?;
    if spec.target_rms == 0.0 {
        return Ok(SimilarityTransform::IDENTITY);
    }
    let center = spec.centroid();
    let radius = (spec
        .reference_points
        .iter()
        .map(|&(x, y)| (x - center.0).powi(2) + (y - center.1).powi(2))
        .sum::<f64>()
        / spec.reference_points.len() as f64)
        .sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dir: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let at = |k: f64| {
        SimilarityTransform::about(
            center,
            (k * dir[0] / radius).exp(),
            k * dir[1] / radius,
            (k * dir[2], k * dir[3]),
        )
        .expect("exp is positive")
    };
    let rms = |k: f64| at(k).rms_displacement(&spec.reference_points);

    let target = spec.target_rms;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while rms(hi) < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::InvalidArgument(format!(
                "could not reach RMS displacement {target}"
            )));
        }
    }
    let tol = 1e-10 * target.max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = rms(mid);
        if (r - target).abs() <= tol {
            return Ok(at(mid));
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

/// Resamples `image` under `t`: each output pixel `q` takes the bilinear
/// interpolation of the input at `t^-1(q)`, with zero outside the image.
pub fn warp_image(image: &Image, t: &SimilarityTransform) -> Image {
    let inv = t.inverse();
    Image::from_fn(image.width(), image.height(), |x, y| {
        let (sx, sy) = inv.apply((x as f64, y as f64));
        bilinear(image, sx, sy)
    })
}

fn bilinear(image: &Image, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ax, ay) = (x - fx, y - fy);
    if !(fx.is_finite() && fy.is_finite()) || fx.abs() > 1e9 || fy.abs() > 1e9 {
        return 0.0;
    }
    let (ix, iy) = (fx as isize, fy as isize);
    let mut v = 0.0;
    for (dx, wx) in [(0, 1.0 - ax), (1, ax)] {
        for (dy, wy) in [(0, 1.0 - ay), (1, ay)] {
            let w = wx * wy;
            if w != 0.0 {
                v += w * image.get_padded(ix + dx, iy + dy);
            }
        }
    }
    v
}

/// One warped copy in a synthesized set.
#[derive(Debug, Clone)]
pub struct WarpedSample {
    pub base: usize,
    pub copy: usize,
    pub seed: u64,
    pub transform: SimilarityTransform,
    pub image: Image,
}

/// `per_example` warped copies of every base image, base-major. Copy `j` of
/// base `i` uses the seed `derive_seed(spec.seed, i, j)`; with
/// `identity_first` copy 0 is the unwarped base image.
pub fn synthesize_set(
    base: &[Image],
    per_example: usize,
    spec: &WarpSpec,
    identity_first: bool,
) -> Result<Vec<WarpedSample>> {
    use rayon::prelude::*;

    if per_example == 0 {
        return Err(Error::InvalidArgument("per_example must be at least 1".into()));
    }
    spec.validate()?;
    (0..base.len() * per_example)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / per_example, k % per_example);
            let seed = derive_seed(spec.seed, i as u64, j as u64);
            let transform = if identity_first && j == 0 {
                SimilarityTransform::IDENTITY
            } else {
                sample_similarity_warp(&spec.reseeded(seed))?
            };
            let image = if transform == SimilarityTransform::IDENTITY {
                base[i].clone()
            } else {
                warp_image(&base[i], &transform)
            };
            Ok(WarpedSample {
                base: i,
                copy: j,
                seed,
                transform,
                image,
            })
        })
        .collect()
}
