//! Equivalence suites: the convolutional and explicit-operator HOG paths,
//! and the compact quad feature against a brute-force outer product.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hog::{
    apply_projection, build_projection, hog_conv, make_gabor_bank, max_relative_deviation, FilterBank, ProjectionMatrix,
};
use crate::image::{Image, PoolingSpec};
use crate::quad::{local_quadratic_compact, LocalWindow};

pub const REFORM_TOLERANCE: f64 = 1e-8;
pub const COMPACT_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.max_deviation <= self.tolerance
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, max deviation {:.3e} (tolerance {:.0e}) {}",
            self.suite,
            self.cases,
            self.max_deviation,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

struct BankConfig {
    bank: FilterBank,
    pooling: PoolingSpec,
    /// Image sides that fit the largest filter and are divisible by the stride.
    sides: Vec<usize>,
}

fn bank_configs(max_side: usize) -> Result<Vec<BankConfig>> {
    let specs = [(4, 1, 3, 2, 2), (6, 2, 3, 4, 4), (8, 1, 5, 3, 1)];
    specs
        .iter()
        .map(|&(orientations, scales, base, box_size, stride)| {
            let bank = make_gabor_bank(orientations, scales, base)?;
            let pooling = PoolingSpec::box_filter(box_size, stride)?;
            let min = bank.max_support().max(stride);
            let sides = (min..=max_side).filter(|s| s % stride == 0).collect();
            Ok(BankConfig { bank, pooling, sides })
        })
        .collect()
}

/// Random images up to 16x16, each checked under three filter-bank and
/// pooling configurations. Deviation is `max |conv - explicit| / max |conv|`.
pub fn verify_reformulation(images: usize, seed: u64) -> Result<VerifyReport> {
    let configs = bank_configs(16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<(usize, usize, usize), ProjectionMatrix> = HashMap::new();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..images {
        let pixels: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (c, cfg) in configs.iter().enumerate() {
            let w = cfg.sides[rng.random_range(0..cfg.sides.len())];
            let h = cfg.sides[rng.random_range(0..cfg.sides.len())];
            let image = Image::new(w, h, pixels[..w * h].to_vec())?;
            let l = match cache.entry((c, w, h)) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(build_projection(&cfg.bank, &cfg.pooling, w, h)?),
            };
            let explicit = apply_projection(l, &image)?;
            let conv = hog_conv(&image, &cfg.bank, &cfg.pooling)?;
            worst = worst.max(max_relative_deviation(&explicit.values, &conv.values));
            cases += 1;
        }
    }
    Ok(VerifyReport {
        suite: "hog reformulation",
        cases,
        max_deviation: worst,
        tolerance: REFORM_TOLERANCE,
    })
}

/// Random `side`x`side` images with radius-1 and radius-2 windows. Every
/// in-window pixel pair is looked up in the compact feature and compared
/// with the product computed directly.
pub fn verify_compact(images: usize, side: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..images {
        let image = Image::new(
            side,
            side,
            (0..side * side).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )?;
        for radius in [1, 2] {
            let window = LocalWindow::square(radius);
            let feature = local_quadratic_compact(&image, &window);
            let r = radius as isize;
            for py in 0..side {
                for px in 0..side {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let (qx, qy) = (px as isize + dx, py as isize + dy);
                            if qx < 0 || qy < 0 || qx >= side as isize || qy >= side as isize {
                                continue;
                            }
                            let q = (qx as usize, qy as usize);
                            let expected = image.get(px, py) * image.get(q.0, q.1);
                            // Either orientation of the pair must be present.
                            for (a, b) in [((px, py), q), (q, (px, py))] {
                                let k = window
                                    .compact_index(side, side, a, b)
                                    .expect("in-window pair has a compact slot");
                                worst = worst.max((feature.values[k] - expected).abs());
                            }
                        }
                    }
                }
            }
            cases += 1;
        }
    }
    Ok(VerifyReport {
        suite: "compact quad",
        cases,
        max_deviation: worst,
        tolerance: COMPACT_TOLERANCE,
    })
}
