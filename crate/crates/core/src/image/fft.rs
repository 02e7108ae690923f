use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{power_normalize, Image};
use crate::error::{Error, Result};

/// Discrete Fourier coefficients of an image, row-major like the image.
#[derive(Debug, Clone)]
pub struct Spectrum {
    width: usize,
    height: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(image: &Image) -> Self {
        let coeffs = image.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut s = Self {
            width: image.width(),
            height: image.height(),
            coeffs,
        };
        s.transform(false);
        s
    }

    /// Builds a spectrum from raw coefficients. Callers are responsible for
    /// Hermitian symmetry if they want a real image back.
    pub fn from_coeffs(width: usize, height: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), width * height);
        Self { width, height, coeffs }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Signed frequency (cycles per pixel) of index `k` along an axis of length `n`.
    pub fn axis_frequency(k: usize, n: usize) -> f64 {
        if k <= n / 2 {
            k as f64 / n as f64
        } else {
            k as f64 / n as f64 - 1.0
        }
    }

    /// Radial frequency in cycles per pixel of coefficient `(kx, ky)`.
    pub fn radial_frequency(&self, kx: usize, ky: usize) -> f64 {
        let fx = Self::axis_frequency(kx, self.width);
        let fy = Self::axis_frequency(ky, self.height);
        (fx * fx + fy * fy).sqrt()
    }

    /// Index of the coefficient at frequency `-f`.
    pub fn conjugate_index(&self, kx: usize, ky: usize) -> (usize, usize) {
        ((self.width - kx) % self.width, (self.height - ky) % self.height)
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(mut self) -> Image {
        self.transform(true);
        let scale = 1.0 / (self.width * self.height) as f64;
        let data = self.coeffs.iter().map(|c| c.re * scale).collect();
        Image::from_raw(self.width, self.height, data)
    }

    fn transform(&mut self, inverse: bool) {
        let (w, h) = (self.width, self.height);
        let mut planner = FftPlanner::<f64>::new();
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
        } else {
            (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
        };
        row_fft.process(&mut self.coeffs);
        let mut column = vec![Complex64::default(); h];
        for x in 0..w {
            for (y, c) in column.iter_mut().enumerate() {
                *c = self.coeffs[y * w + x];
            }
            col_fft.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                self.coeffs[y * w + x] = *c;
            }
        }
    }
}

/// Scales every Fourier coefficient by `|f|^exponent`, zeroes DC and
/// power-normalizes the result. Exponent 1 flattens a `1/f` amplitude
/// spectrum; exponent 0 only removes the mean.
pub fn whiten(image: &Image, spectrum_exponent: f64) -> Result<Image> {
    if image.width() < 2 || image.height() < 2 {
        return Err(Error::Dimension(format!(
            "whitening needs at least 2x2 pixels, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let mut spec = Spectrum::forward(image);
    let (w, h) = (spec.width, spec.height);
    for ky in 0..h {
        for kx in 0..w {
            let gain = if kx == 0 && ky == 0 {
                0.0
            } else {
                spec.radial_frequency(kx, ky).powf(spectrum_exponent)
            };
            spec.coeffs[ky * w + kx] *= gain;
        }
    }
    Ok(power_normalize(&spec.inverse_real()).image)
}

/// Mean Fourier amplitude in integer-radius annuli, excluding DC.
///
/// Returns `(frequency, amplitude)` pairs for radii `1..=n/2`, where `n` is
/// the longer image side and frequency is `radius / n` cycles per pixel.
pub fn radial_amplitude_profile(image: &Image) -> Vec<(f64, f64)> {
    let spec = Spectrum::forward(image);
    let n = spec.width.max(spec.height);
    let bins = n / 2;
    let mut sum = vec![0.0; bins + 1];
    let mut count = vec![0usize; bins + 1];
    for ky in 0..spec.height {
        for kx in 0..spec.width {
            let b = (spec.radial_frequency(kx, ky) * n as f64).round() as usize;
            if b == 0 || b > bins {
                continue;
            }
            sum[b] += spec.coeffs[ky * spec.width + kx].norm();
            count[b] += 1;
        }
    }
    (1..=bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (b as f64 / n as f64, sum[b] / count[b] as f64))
        .collect()
}

/// Least-squares slope of log amplitude against log frequency, fitted to the
/// radial profile averaged over `images`. All images must share a size.
pub fn spectral_slope(images: &[Image]) -> Result<f64> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("no images for a spectral slope".into()))?;
    let mut mean = radial_amplitude_profile(first);
    for im in &images[1..] {
        if im.dims() != first.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} image in a {}x{} ensemble",
                im.width(),
                im.height(),
                first.width(),
                first.height()
            )));
        }
        for (m, (_, a)) in mean.iter_mut().zip(radial_amplitude_profile(im)) {
            m.1 += a;
        }
    }
    let pts: Vec<(f64, f64)> = mean
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(f, a)| (f.ln(), a.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "spectrum has fewer than two nonzero bands".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
