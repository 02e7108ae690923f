//! Explicit sparse-matrix forms of the convolution and downsampling
//! operators, acting on row-major vectorized images.

use sprs::{CsMat, TriMat};

use super::{Kernel, PoolingSpec};
use crate::error::Result;

/// `D x D` matrix `G` with `vec(conv2d_same(x, k)) = G vec(x)`.
pub fn conv_matrix(kernel: &Kernel, width: usize, height: usize) -> CsMat<f64> {
    let n = width * height;
    let mut tri = TriMat::new((n, n));
    let (wi, hi) = (width as isize, height as isize);
    for y in 0..hi {
        for x in 0..wi {
            let row = (y * wi + x) as usize;
            for (dx, dy, tap) in kernel.offsets() {
                let (sx, sy) = (x - dx, y - dy);
                if sx >= 0 && sy >= 0 && sx < wi && sy < hi {
                    tri.add_triplet(row, (sy * wi + sx) as usize, tap);
                }
            }
        }
    }
    tri.to_csr()
}

/// Selection matrix that keeps the downsampled pixels of a pooling spec.
pub fn selection_matrix(spec: &PoolingSpec, width: usize, height: usize) -> Result<CsMat<f64>> {
    let (cols, rows) = spec.output_dims(width, height)?;
    let mut tri = TriMat::new((cols * rows, width * height));
    let mut r = 0;
    for y in spec.sample_positions(height) {
        for x in spec.sample_positions(width) {
            tri.add_triplet(r, y * width + x, 1.0);
            r += 1;
        }
    }
    Ok(tri.to_csr())
}

pub fn mat_vec(m: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.cols(), x.len(), "matrix/vector size mismatch");
    m.outer_iterator()
        .map(|row| row.iter().map(|(c, &v)| v * x[c]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{conv2d_same, pool, Image};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pool_equals_selection_times_blur() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(w, h, size, stride) in &[(8, 8, 2, 2), (8, 8, 3, 2), (12, 8, 4, 4), (16, 16, 5, 4)] {
            let img = Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0));
            let spec = PoolingSpec::box_filter(size, stride).unwrap();
            let b = conv_matrix(spec.blur(), w, h);
            let d = selection_matrix(&spec, w, h).unwrap();
            let via_matrix = mat_vec(&d, &mat_vec(&b, img.data()));
            let direct = pool(&img, &spec).unwrap();
            for (a, e) in via_matrix.iter().zip(direct.data()) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_matrix_matches_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let img = Image::from_fn(7, 5, |_, _| rng.random_range(-1.0..1.0));
        let k = Kernel::new(3, 5, (0..15).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let g = conv_matrix(&k, 7, 5);
        let direct = conv2d_same(&img, &k).unwrap();
        for (a, e) in mat_vec(&g, img.data()).iter().zip(direct.data()) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
