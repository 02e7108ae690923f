//! Random images with a `1/f` amplitude spectrum.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::check_patch_size;
use crate::error::Result;
use crate::image::{power_normalize, Image, Spectrum};

/// `1 / |f|` with `f` in cycles per pixel; zero at DC.
fn pink_amplitude(spec: &Spectrum, kx: usize, ky: usize) -> f64 {
    if kx == 0 && ky == 0 {
        0.0
    } else {
        1.0 / spec.radial_frequency(kx, ky)
    }
}

/// Pink noise: `1/|f|` amplitudes with independent uniform phases, made
/// Hermitian so the image is real, then power-normalized.
pub fn sample_pink_noise(patch_size: usize, seed: u64) -> Result<Image> {
    check_patch_size(patch_size)?;
    let n = patch_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = Spectrum::from_coeffs(n, n, vec![Complex64::default(); n * n]);
    for ky in 0..n {
        for kx in 0..n {
            let (cx, cy) = spec.conjugate_index(kx, ky);
            let (i, j) = (ky * n + kx, cy * n + cx);
            if j < i {
                continue; // filled together with its partner
            }
            let amp = pink_amplitude(&spec, kx, ky);
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            let c = if i == j {
                // self-conjugate frequencies must be real
                Complex64::new(amp * phase.cos().signum(), 0.0)
            } else {
                Complex64::from_polar(amp, phase)
            };
            let coeffs = spec.coeffs_mut();
            coeffs[i] = c;
            coeffs[j] = c.conj();
        }
    }
    Ok(power_normalize(&spec.inverse_real()).image)
}

/// Gives `image` the pink-noise radial profile while keeping its phases and
/// its angular distribution of energy: every coefficient is divided by the
/// mean amplitude of its integer-radius annulus and multiplied by `1/|f|`.
/// Returns a power-normalized image.
pub fn reshape_to_pink(image: &Image) -> Image {
    let mut spec = Spectrum::forward(image);
    let (w, h) = (spec.width(), spec.height());
    let n = w.max(h) as f64;
    let band = |s: &Spectrum, kx: usize, ky: usize| (s.radial_frequency(kx, ky) * n).round() as usize;

    let bands = (n * std::f64::consts::SQRT_2).ceil() as usize + 1;
    let mut sum = vec![0.0; bands];
    let mut count = vec![0usize; bands];
    for ky in 0..h {
        for kx in 0..w {
            let b = band(&spec, kx, ky);
            sum[b] += spec.coeffs()[ky * w + kx].norm();
            count[b] += 1;
        }
    }
    for ky in 0..h {
        for kx in 0..w {
            let b = band(&spec, kx, ky);
            let mean = sum[b] / count[b] as f64;
            let gain = if b == 0 {
                0.0
            } else {
                pink_amplitude(&spec, kx, ky) / mean.max(1e-12)
            };
            spec.coeffs_mut()[ky * w + kx] *= gain;
        }
    }
    power_normalize(&spec.inverse_real()).image
}
