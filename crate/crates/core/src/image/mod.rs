//! Grayscale rasters, odd-sized kernels, zero-padded convolution and the
//! blur-then-downsample pooling step shared by every feature extractor.
//!
//! Images are stored row-major, so `data[y * width + x]` is the pixel in row
//! `y` and column `x`. That ordering is also the vectorization used whenever
//! an image is treated as a vector in `R^D`.

mod fft;
mod io;
pub mod matrix;

pub use fft::{radial_amplitude_profile, spectral_slope, whiten, Spectrum};
pub use io::{load_gray, save_pgm};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Builds an image from values already known to be finite, e.g. the
    /// output of arithmetic on finite images.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Number of pixels, `D`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with zero outside the raster.
    pub fn get_padded(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Image {
        self.map(|v| alpha * v)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Root mean square of the raw values (not centered).
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, taps: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "kernel must have odd dimensions, got {width}x{height}"
            )));
        }
        if taps.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} taps for a {width}x{height} kernel",
                taps.len()
            )));
        }
        if let Some(i) = taps.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { width, height, taps })
    }

    pub fn identity() -> Self {
        Self {
            width: 1,
            height: 1,
            taps: vec![1.0],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn get(&self, kx: usize, ky: usize) -> f64 {
        self.taps[ky * self.width + kx]
    }

    /// Iterates over nonzero taps as `(dx, dy, value)`, where an input pixel at
    /// `(x - dx, y - dy)` contributes `value` to output pixel `(x, y)`.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let cx = (self.width / 2) as isize;
        let cy = (self.height / 2) as isize;
        self.taps.iter().enumerate().filter_map(move |(i, &v)| {
            if v == 0.0 {
                return None;
            }
            let kx = (i % self.width) as isize;
            let ky = (i / self.width) as isize;
            Some((kx - cx, ky - cy, v))
        })
    }
}

/// "Same"-size 2-D convolution with zero padding:
/// `out[y][x] = sum k[ky][kx] * in[y + cy - ky][x + cx - kx]`.
pub fn conv2d_same(image: &Image, kernel: &Kernel) -> Result<Image> {
    let (w, h) = image.dims();
    if kernel.width > w || kernel.height > h {
        return Err(Error::Dimension(format!(
            "{}x{} kernel does not fit a {w}x{h} image",
            kernel.width, kernel.height
        )));
    }
    let mut out = vec![0.0; w * h];
    let (wi, hi) = (w as isize, h as isize);
    for (dx, dy, tap) in kernel.offsets() {
        // input pixel (x - dx, y - dy) feeds output (x, y)
        let y0 = dy.max(0);
        let y1 = (hi + dy).min(hi);
        let x0 = dx.max(0);
        let x1 = (wi + dx).min(wi);
        for y in y0..y1 {
            let src = ((y - dy) * wi) as usize;
            let dst = (y * wi) as usize;
            for x in x0..x1 {
                out[dst + x as usize] += tap * image.data[src + (x - dx) as usize];
            }
        }
    }
    Ok(Image::from_raw(w, h, out))
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub image: Image,
    /// Set when the input had no variance and the output is all zeros.
    pub degenerate: bool,
}

/// Rescales to zero mean and unit root-mean-square. A constant input yields
/// an all-zero image with `degenerate` set.
pub fn power_normalize(image: &Image) -> Normalized {
    let mean = image.mean();
    let centered: Vec<f64> = image.data.iter().map(|v| v - mean).collect();
    let rms = (centered.iter().map(|v| v * v).sum::<f64>() / centered.len() as f64).sqrt();
    if rms <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
        return Normalized {
            image: Image::zeros(image.width, image.height),
            degenerate: true,
        };
    }
    Normalized {
        image: Image::from_raw(
            image.width,
            image.height,
            centered.into_iter().map(|v| v / rms).collect(),
        ),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolingSpec {
    blur: Kernel,
    stride: usize,
}

impl PoolingSpec {
    pub fn new(blur: Kernel, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("pooling stride must be >= 1".into()));
        }
        let mut nonzero = blur.taps.iter().filter(|&&v| v != 0.0);
        let first = nonzero
            .next()
            .ok_or_else(|| Error::InvalidArgument("blur kernel is all zeros".into()))?;
        if *first < 0.0 || nonzero.any(|v| v != first) {
            return Err(Error::InvalidArgument(
                "blur kernel must be a box (equal positive taps)".into(),
            ));
        }
        Ok(Self { blur, stride })
    }

    /// Averaging `size`x`size` box followed by downsampling by `stride`.
    ///
    /// Even sizes are embedded in a `(size+1)`-square kernel whose first row
    /// and column are zero, so the footprint of the sample at `y` is rows
    /// `y - size/2 .. y + size/2 - 1`. With `size == stride` the samples taken
    /// at offset `stride/2` then cover disjoint `stride`x`stride` cells.
    pub fn box_filter(size: usize, stride: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("box size must be >= 1".into()));
        }
        let side = size | 1;
        let pad = side - size;
        let tap = 1.0 / (size * size) as f64;
        let mut taps = vec![0.0; side * side];
        for ky in pad..side {
            for kx in pad..side {
                taps[ky * side + kx] = tap;
            }
        }
        Self::new(Kernel::new(side, side, taps)?, stride)
    }

    pub fn blur(&self) -> &Kernel {
        &self.blur
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Pooled grid size `(cols, rows)` for an image of the given size.
    pub fn output_dims(&self, width: usize, height: usize) -> Result<(usize, usize)> {
        let s = self.stride;
        if s > width || s > height {
            return Err(Error::Dimension(format!("stride {s} exceeds image {width}x{height}")));
        }
        if !width.is_multiple_of(s) || !height.is_multiple_of(s) {
            return Err(Error::Dimension(format!(
                "stride {s} does not divide image {width}x{height}"
            )));
        }
        Ok((width / s, height / s))
    }

    /// Source pixel coordinates of the samples kept by the downsampler.
    pub(crate) fn sample_positions(&self, len: usize) -> impl Iterator<Item = usize> {
        let s = self.stride;
        (0..len / s).map(move |i| s / 2 + i * s)
    }
}

/// Blur with the box kernel, then keep every `stride`-th pixel starting at
/// `stride / 2` in each direction.
pub fn pool(image: &Image, spec: &PoolingSpec) -> Result<Image> {
    let (cols, rows) = spec.output_dims(image.width, image.height)?;
    let blurred = conv2d_same(image, &spec.blur)?;
    Ok(downsample(&blurred, spec, cols, rows))
}

pub(crate) fn downsample(blurred: &Image, spec: &PoolingSpec, cols: usize, rows: usize) -> Image {
    let mut out = Vec::with_capacity(cols * rows);
    for y in spec.sample_positions(blurred.height) {
        for x in spec.sample_positions(blurred.width) {
            out.push(blurred.get(x, y));
        }
    }
    Image::from_raw(cols, rows, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut impl Rng) -> Image {
        Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_kernel(side: usize, rng: &mut impl Rng) -> Kernel {
        Kernel::new(
            side,
            side,
            (0..side * side).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(matches!(
            Image::new(2, 1, vec![0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
    }

    #[test]
    fn identity_kernel_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(7, 5, &mut rng);
        assert_eq!(conv2d_same(&img, &Kernel::identity()).unwrap(), img);
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = random_kernel(3, &mut rng);
        let mut impulse = Image::zeros(7, 7);
        impulse.data[3 * 7 + 4] = 1.0;
        let out = conv2d_same(&impulse, &k).unwrap();
        for y in 0..7usize {
            for x in 0..7usize {
                let (kx, ky) = (x as isize - 4 + 1, y as isize - 3 + 1);
                let expected = if (0..3).contains(&kx) && (0..3).contains(&ky) {
                    k.get(kx as usize, ky as usize)
                } else {
                    0.0
                };
                assert_eq!(out.get(x, y), expected);
            }
        }
    }

    #[test]
    fn conv_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(8, 8, &mut rng);
        let k = random_kernel(3, &mut rng);
        let out = conv2d_same(&img, &k).unwrap();
        for y in 0..8isize {
            for x in 0..8isize {
                let mut acc = 0.0;
                for ky in 0..3isize {
                    for kx in 0..3isize {
                        acc += k.get(kx as usize, ky as usize) * img.get_padded(x + 1 - kx, y + 1 - ky);
                    }
                }
                assert!((out.get(x as usize, y as usize) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_larger_than_image_is_rejected() {
        let k = Kernel::new(5, 5, vec![1.0; 25]).unwrap();
        assert!(matches!(conv2d_same(&Image::zeros(4, 8), &k), Err(Error::Dimension(_))));
    }

    #[test]
    fn power_normalize_two_pixels() {
        let img = Image::new(2, 1, vec![1.0, 3.0]).unwrap();
        let n = power_normalize(&img);
        assert!(!n.degenerate);
        assert_eq!(n.image.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn power_normalize_constant_is_degenerate() {
        let n = power_normalize(&Image::from_fn(3, 3, |_, _| 0.1));
        assert!(n.degenerate);
        assert!(n.image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn power_normalize_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = random_image(16, 16, &mut rng).map(|v| 3.0 * v + 7.0);
        let n = power_normalize(&img).image;
        assert!(n.mean().abs() < 1e-12);
        assert!((n.rms() - 1.0).abs() < 1e-12);
        let twice = power_normalize(&n).image;
        for (a, b) in twice.data().iter().zip(n.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = random_image(6, 4, &mut rng);
        let spec = PoolingSpec::new(Kernel::identity(), 1).unwrap();
        assert_eq!(pool(&img, &spec).unwrap(), img);
    }

    #[test]
    fn even_box_aligns_with_cells() {
        // 2x2 box in a 3x3 kernel, stride 2: each sample averages one
        // disjoint 2x2 cell, so a constant image stays constant.
        let spec = PoolingSpec::box_filter(2, 2).unwrap();
        assert_eq!(spec.blur().width(), 3);
        let out = pool(&Image::from_fn(4, 4, |_, _| 2.5), &spec).unwrap();
        assert_eq!(out.dims(), (2, 2));
        assert!(out.data().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn box_pool_is_cell_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let img = random_image(12, 8, &mut rng);
        let out = pool(&img, &PoolingSpec::box_filter(4, 4).unwrap()).unwrap();
        for cy in 0..2 {
            for cx in 0..3 {
                let mut acc = 0.0;
                for y in 0..4 {
                    for x in 0..4 {
                        acc += img.get(cx * 4 + x, cy * 4 + y);
                    }
                }
                assert!((out.get(cx, cy) - acc / 16.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_box_at_border_loses_mass() {
        // 3x3 box, stride 2 on a 4x4 constant: samples at (1,1),(3,1),(1,3),(3,3);
        // index 3 is on the border so one of three taps per axis falls outside.
        let out = pool(
            &Image::from_fn(4, 4, |_, _| 9.0),
            &PoolingSpec::box_filter(3, 2).unwrap(),
        )
        .unwrap();
        let expected = [9.0, 6.0, 6.0, 4.0];
        for (a, b) in out.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn pool_rejects_oversized_stride() {
        let spec = PoolingSpec::box_filter(1, 8).unwrap();
        assert!(matches!(pool(&Image::zeros(4, 4), &spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn box_spec_rejects_non_box() {
        let k = Kernel::new(3, 1, vec![1.0, 2.0, 1.0]).unwrap();
        assert!(PoolingSpec::new(k, 1).is_err());
    }
}
