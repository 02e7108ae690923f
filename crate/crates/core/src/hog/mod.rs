//! HOG without contrast normalization, written two ways.
//!
//! The convolutional path filters the image with each kernel of a bank,
//! squares the responses pointwise, then pools (box blur + downsample).
//! Because every step after the filter is linear in the squared response,
//! the whole descriptor is a fixed linear map applied to the pixel products
//! `x_p * x_q`; [`projection`] builds that map explicitly and applies it to
//! `vec(x x^T)`. The two paths agree to rounding error.
//!
//! [`baseline`] is an ordinary gradient-binning HOG used as an experimental
//! reference; it is not claimed to equal either form above.

pub mod baseline;
pub mod projection;

pub use baseline::{cell_histograms, hog_baseline, BaselineHog};
pub use projection::{apply_projection, build_projection, ProjectionMatrix, MAX_EXPLICIT_PIXELS};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{conv2d_same, pool, Image, Kernel, PoolingSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<Kernel>,
    orientations: usize,
    scales: usize,
}

impl FilterBank {
    /// A bank laid out scale-major: filter `s * orientations + k` has scale `s`
    /// and orientation `k`.
    pub fn new(filters: Vec<Kernel>, orientations: usize, scales: usize) -> Result<Self> {
        if orientations == 0 || scales == 0 || filters.len() != orientations * scales {
            return Err(Error::InvalidArgument(format!(
                "{} filters for {orientations} orientations x {scales} scales",
                filters.len()
            )));
        }
        for s in 0..scales {
            let group = &filters[s * orientations..(s + 1) * orientations];
            let dims = (group[0].width(), group[0].height());
            if group.iter().any(|k| (k.width(), k.height()) != dims) {
                return Err(Error::InvalidArgument(format!(
                    "filters of scale {s} differ in support"
                )));
            }
        }
        Ok(Self {
            filters,
            orientations,
            scales,
        })
    }

    /// Single-scale bank of arbitrary kernels.
    pub fn from_kernels(filters: Vec<Kernel>) -> Result<Self> {
        let n = filters.len();
        Self::new(filters, n, 1)
    }

    pub fn filters(&self) -> &[Kernel] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn orientations(&self) -> usize {
        self.orientations
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn max_support(&self) -> usize {
        self.filters
            .iter()
            .map(|k| k.width().max(k.height()))
            .max()
            .unwrap_or(0)
    }
}

/// Even-symmetric Gabor bank.
///
/// Scale `s` has support `(base_support - 1) * 2^s + 1`, wavelength
/// `support / 2` and Gaussian envelope `sigma = support / 5`. Orientation `k`
/// is `k * pi / orientations`. Every kernel is made zero-mean and unit-L2.
pub fn make_gabor_bank(orientations: usize, scales: usize, base_support: usize) -> Result<FilterBank> {
    if orientations == 0 || scales == 0 {
        return Err(Error::InvalidArgument(
            "a Gabor bank needs at least one orientation and one scale".into(),
        ));
    }
    if base_support < 3 || base_support.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "base support must be odd and >= 3, got {base_support}"
        )));
    }
    let mut filters = Vec::with_capacity(orientations * scales);
    for s in 0..scales {
        let support = (base_support - 1) * (1 << s) + 1;
        for k in 0..orientations {
            let theta = k as f64 * PI / orientations as f64;
            filters.push(gabor_kernel(support, theta));
        }
    }
    FilterBank::new(filters, orientations, scales)
}

fn gabor_kernel(support: usize, theta: f64) -> Kernel {
    let wavelength = support as f64 / 2.0;
    let sigma = support as f64 / 5.0;
    let c = (support / 2) as f64;
    let (sin, cos) = theta.sin_cos();
    let mut taps: Vec<f64> = (0..support * support)
        .map(|i| {
            let x = (i % support) as f64 - c;
            let y = (i / support) as f64 - c;
            let along = x * cos + y * sin;
            (-(x * x + y * y) / (2.0 * sigma * sigma)).exp() * (2.0 * PI * along / wavelength).cos()
        })
        .collect();
    let mean = taps.iter().sum::<f64>() / taps.len() as f64;
    taps.iter_mut().for_each(|v| *v -= mean);
    let norm = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|v| *v /= norm);
    Kernel::new(support, support, taps).expect("odd support, finite taps")
}

/// Concatenated pooled energies, filter-major then cell row then cell column.
#[derive(Debug, Clone, PartialEq)]
pub struct HogDescriptor {
    pub values: Vec<f64>,
    pub filters: usize,
    pub cells_x: usize,
    pub cells_y: usize,
}

impl HogDescriptor {
    pub fn cells(&self) -> usize {
        self.cells_x * self.cells_y
    }

    pub fn get(&self, filter: usize, cell_x: usize, cell_y: usize) -> f64 {
        self.values[(filter * self.cells_y + cell_y) * self.cells_x + cell_x]
    }
}

/// Filter, square, pool, for every filter in the bank.
pub fn hog_conv(image: &Image, bank: &FilterBank, pooling: &PoolingSpec) -> Result<HogDescriptor> {
    let (cells_x, cells_y) = pooling.output_dims(image.width(), image.height())?;
    let mut values = Vec::with_capacity(bank.len() * cells_x * cells_y);
    for kernel in bank.filters() {
        let energy = conv2d_same(image, kernel)?.map(|v| v * v);
        values.extend_from_slice(pool(&energy, pooling)?.data());
    }
    Ok(HogDescriptor {
        values,
        filters: bank.len(),
        cells_x,
        cells_y,
    })
}

/// `max |a - b| / max |b|`, the deviation measure used to compare the two
/// HOG paths. Zero when both are identically zero.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}
