//! Gradient-orientation HOG in the Felzenszwalb style: unsigned orientations,
//! linear vote splitting between neighbouring bins, `cell x cell`
//! aggregation, and four block normalizations per cell with truncation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::Image;

const TRUNCATION: f64 = 0.2;
const NORM_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineHog {
    /// Layout: cell row, cell column, block (4), orientation bin.
    pub values: Vec<f64>,
    pub cells_x: usize,
    pub cells_y: usize,
    pub orientations: usize,
}

/// Unnormalized orientation histograms, laid out cell row, cell column, bin.
///
/// Gradients are central differences with replicated borders. Bin `k` is
/// centred on `k * pi / orientations`.
pub fn cell_histograms(image: &Image, orientations: usize, cell: usize) -> Result<(Vec<f64>, usize, usize)> {
    let (w, h) = image.dims();
    if orientations == 0 || cell == 0 {
        return Err(Error::InvalidArgument(
            "orientations and cell size must be positive".into(),
        ));
    }
    if w % cell != 0 || h % cell != 0 {
        return Err(Error::Dimension(format!(
            "cell size {cell} does not divide image {w}x{h}"
        )));
    }
    let (cx, cy) = (w / cell, h / cell);
    let mut hist = vec![0.0; cx * cy * orientations];
    let bin_width = PI / orientations as f64;
    for y in 0..h {
        for x in 0..w {
            let gx = image.get((x + 1).min(w - 1), y) - image.get(x.saturating_sub(1), y);
            let gy = image.get(x, (y + 1).min(h - 1)) - image.get(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(PI);
            let pos = theta / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let lo = lower as usize % orientations;
            let hi = (lo + 1) % orientations;
            let base = ((y / cell) * cx + x / cell) * orientations;
            hist[base + lo] += (1.0 - frac) * mag;
            hist[base + hi] += frac * mag;
        }
    }
    Ok((hist, cx, cy))
}

/// Baseline HOG descriptor. Each cell histogram is normalized by the energy
/// of the four 2x2 cell blocks that contain it (cells outside the grid count
/// as empty), truncated at 0.2, and the four copies are concatenated.
pub fn hog_baseline(image: &Image, orientations: usize, cell: usize) -> Result<BaselineHog> {
    let (hist, cx, cy) = cell_histograms(image, orientations, cell)?;
    let energy: Vec<f64> = hist
        .chunks(orientations)
        .map(|h| h.iter().map(|v| v * v).sum())
        .collect();
    let cell_energy = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= cx as isize || y >= cy as isize {
            0.0
        } else {
            energy[y as usize * cx + x as usize]
        }
    };
    let mut values = Vec::with_capacity(cx * cy * 4 * orientations);
    for y in 0..cy as isize {
        for x in 0..cx as isize {
            let h = &hist[(y as usize * cx + x as usize) * orientations..][..orientations];
            for (bx, by) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
                let (x0, y0) = (x + bx, y + by);
                let block = cell_energy(x0, y0)
                    + cell_energy(x0 + 1, y0)
                    + cell_energy(x0, y0 + 1)
                    + cell_energy(x0 + 1, y0 + 1);
                let scale = 1.0 / (block + NORM_EPS).sqrt();
                values.extend(h.iter().map(|v| (v * scale).min(TRUNCATION)));
            }
        }
    }
    Ok(BaselineHog {
        values,
        cells_x: cx,
        cells_y: cy,
        orientations,
    })
}
