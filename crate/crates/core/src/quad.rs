//! Local second-order pixel features.
//!
//! The full form stacks, for every pixel `i`, the `M x M` outer product of
//! the window around `i`; it is `M^2 D` long and only practical as a small
//! reference. The compact form keeps one shifted-image product per window
//! offset, `(x shifted by o_m) * x`, for `M D` values in total. Every product
//! `x_p x_q` with `|p - q|_inf <= radius` appears in the compact form at a
//! fixed index given by [`LocalWindow::compact_index`].

use crate::error::{Error, Result};
use crate::image::Image;

/// Pixel cap for [`local_quadratic_full`].
pub const MAX_FULL_PIXELS: usize = 256;

/// Square window of offsets `(dx, dy)` in row-major order
/// (`dy` outer, `dx` inner), optionally without the zero offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalWindow {
    radius: usize,
    offsets: Vec<(isize, isize)>,
}

impl LocalWindow {
    pub fn square(radius: usize) -> Self {
        let r = radius as isize;
        let offsets = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect();
        Self { radius, offsets }
    }

    /// The square window minus the zero offset (pure squares dropped).
    pub fn without_center(radius: usize) -> Self {
        let mut w = Self::square(radius);
        w.offsets.retain(|&o| o != (0, 0));
        w
    }

    /// Window of the given side; even sides are rounded up to the next odd one.
    pub fn from_side(side: usize) -> Self {
        Self::square(side.max(1) / 2)
    }

    /// Window whose side matches an RMS misalignment in pixels, rounded up to
    /// an odd side, with radius at least 1.
    pub fn for_rms(rms: f64) -> Self {
        let side = rms.max(0.0).ceil() as usize;
        Self::square((side / 2).max(1))
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `M`, the number of offsets.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn zero_offset_index(&self) -> Option<usize> {
        self.offsets.iter().position(|&o| o == (0, 0))
    }

    /// Index in the compact feature holding `x_p * x_q`, or `None` when the
    /// pair is out of bounds or farther apart than the window reaches.
    pub fn compact_index(&self, width: usize, height: usize, p: (usize, usize), q: (usize, usize)) -> Option<usize> {
        if p.0 >= width || p.1 >= height || q.0 >= width || q.1 >= height {
            return None;
        }
        let o = (q.0 as isize - p.0 as isize, q.1 as isize - p.1 as isize);
        let m = self.offsets.iter().position(|&off| off == o)?;
        Some(m * width * height + p.1 * width + p.0)
    }
}

/// `M * D`.
pub fn quad_dimension(width: usize, height: usize, window: &LocalWindow) -> usize {
    window.len() * width * height
}

/// Full local outer products: for each pixel `i`, `vec(P_i x x^T P_i^T)`
/// row-major, with zero padding at the borders. Length `M^2 D`.
pub fn local_quadratic_full(image: &Image, window: &LocalWindow) -> Result<Vec<f64>> {
    let d = image.len();
    if d > MAX_FULL_PIXELS {
        return Err(Error::SizeCap {
            pixels: d,
            columns: window.len() * window.len() * d,
            cap: MAX_FULL_PIXELS,
        });
    }
    let mut out = Vec::with_capacity(window.len() * window.len() * d);
    let mut patch = vec![0.0; window.len()];
    for y in 0..image.height() as isize {
        for x in 0..image.width() as isize {
            for (v, &(dx, dy)) in patch.iter_mut().zip(window.offsets()) {
                *v = image.get_padded(x + dx, y + dy);
            }
            for &a in &patch {
                out.extend(patch.iter().map(|&b| a * b));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadFeature {
    /// `M` blocks of `D` values; block `m` is `x[i + o_m] * x[i]`.
    pub values: Vec<f64>,
    pub offsets: usize,
    pub pixels: usize,
}

impl QuadFeature {
    pub fn block(&self, m: usize) -> &[f64] {
        &self.values[m * self.pixels..(m + 1) * self.pixels]
    }
}

pub fn local_quadratic_compact(image: &Image, window: &LocalWindow) -> QuadFeature {
    let mut values = vec![0.0; quad_dimension(image.width(), image.height(), window)];
    compact_into(image.data(), image.width(), image.height(), window, &mut values);
    QuadFeature {
        values,
        offsets: window.len(),
        pixels: image.len(),
    }
}

/// Writes the compact feature of a raw row-major image into `out`, which
/// must hold `M * width * height` values. Out-of-image partners give 0.
pub fn compact_into(x: &[f64], width: usize, height: usize, window: &LocalWindow, out: &mut [f64]) {
    let d = width * height;
    assert_eq!(x.len(), d);
    assert_eq!(out.len(), window.len() * d);
    let (w, h) = (width as isize, height as isize);
    for (block, &(dx, dy)) in out.chunks_exact_mut(d).zip(window.offsets()) {
        block.fill(0.0);
        let (x0, x1) = ((-dx).max(0), (w - dx).min(w));
        let (y0, y1) = ((-dy).max(0), (h - dy).min(h));
        for yy in y0..y1 {
            let row = yy * w;
            let partner = (yy + dy) * w + dx;
            for xx in x0..x1 {
                let (i, j) = ((row + xx) as usize, (partner + xx) as usize);
                block[i] = x[j] * x[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn window_layout() {
        let w = LocalWindow::square(1);
        assert_eq!(w.len(), 9);
        assert_eq!(w.offsets()[0], (-1, -1));
        assert_eq!(w.offsets()[1], (0, -1));
        assert_eq!(w.zero_offset_index(), Some(4));
        assert_eq!(LocalWindow::without_center(1).len(), 8);
        assert_eq!(LocalWindow::without_center(1).zero_offset_index(), None);
        assert_eq!(LocalWindow::from_side(10).len(), 121);
        assert_eq!(LocalWindow::from_side(3).radius(), 1);
        assert_eq!(LocalWindow::for_rms(0.0).radius(), 1);
        assert_eq!(LocalWindow::for_rms(2.0).radius(), 1);
        assert_eq!(LocalWindow::for_rms(5.0).radius(), 2);
        assert_eq!(LocalWindow::for_rms(10.0).radius(), 5);
    }

    #[test]
    fn dimensions() {
        assert_eq!(quad_dimension(80, 80, &LocalWindow::square(1)), 57600);
        assert_eq!(quad_dimension(16, 16, &LocalWindow::square(2)), 6400);
        assert_eq!(quad_dimension(7, 3, &LocalWindow::square(0)), 21);
    }

    #[test]
    fn radius_zero_is_squares() {
        let img = random_image(5, 4, 51);
        let squares: Vec<f64> = img.data().iter().map(|v| v * v).collect();
        let w = LocalWindow::square(0);
        assert_eq!(local_quadratic_compact(&img, &w).values, squares);
        assert_eq!(local_quadratic_full(&img, &w).unwrap(), squares);
    }

    #[test]
    fn zero_offset_block_is_exact_square() {
        let img = random_image(6, 6, 52);
        let w = LocalWindow::square(2);
        let f = local_quadratic_compact(&img, &w);
        let sq: Vec<f64> = img.data().iter().map(|v| v * v).collect();
        assert_eq!(f.block(w.zero_offset_index().unwrap()), &sq[..]);
    }

    #[test]
    fn zero_image() {
        let w = LocalWindow::square(1);
        let full = local_quadratic_full(&Image::zeros(4, 4), &w).unwrap();
        assert_eq!(full.len(), 81 * 16);
        assert!(full.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_entries_are_local_products() {
        let img = random_image(6, 6, 53);
        let w = LocalWindow::square(1);
        let full = local_quadratic_full(&img, &w).unwrap();
        let m = w.len();
        for (idx, &v) in full.iter().enumerate() {
            let i = idx / (m * m);
            let (a, b) = ((idx / m) % m, idx % m);
            let (cx, cy) = ((i % 6) as isize, (i / 6) as isize);
            let (oa, ob) = (w.offsets()[a], w.offsets()[b]);
            let (pa, pb) = ((cx + oa.0, cy + oa.1), (cx + ob.0, cy + ob.1));
            let inside = |p: (isize, isize)| p.0 >= 0 && p.1 >= 0 && p.0 < 6 && p.1 < 6;
            if inside(pa) && inside(pb) {
                assert!((pa.0 - pb.0).abs().max((pa.1 - pb.1).abs()) <= 2);
                let expected = img.get(pa.0 as usize, pa.1 as usize) * img.get(pb.0 as usize, pb.1 as usize);
                assert_eq!(v, expected);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn full_form_cap() {
        assert!(matches!(
            local_quadratic_full(&Image::zeros(17, 16), &LocalWindow::square(1)),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn padding_entries_are_zero() {
        let img = random_image(5, 5, 54).map(|v| v + 2.0); // strictly positive
        let w = LocalWindow::square(1);
        let f = local_quadratic_compact(&img, &w);
        for (m, &(dx, dy)) in w.offsets().iter().enumerate() {
            for y in 0..5isize {
                for x in 0..5isize {
                    let v = f.block(m)[(y * 5 + x) as usize];
                    let partner_inside = (0..5).contains(&(x + dx)) && (0..5).contains(&(y + dy));
                    assert_eq!(v == 0.0, !partner_inside);
                }
            }
        }
    }

    #[test]
    fn compact_index_lookup() {
        let img = random_image(6, 6, 55);
        let w = LocalWindow::square(1);
        let f = local_quadratic_compact(&img, &w);
        let idx = w.compact_index(6, 6, (2, 3), (3, 2)).unwrap();
        assert_eq!(f.values[idx], img.get(3, 2) * img.get(2, 3));
        assert_eq!(w.compact_index(6, 6, (0, 0), (2, 0)), None);
        assert_eq!(w.compact_index(6, 6, (5, 5), (6, 5)), None);
    }
}
