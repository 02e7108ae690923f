//! The HOG descriptor as a sparse linear operator on `vec(x x^T)`.
//!
//! For filter `f` the pooled energy at cell `c` is
//!
//! ```text
//! phi_f[c] = sum_u B[c,u] (G_f x)_u^2
//!          = sum_{p,q} ( sum_u B[c,u] G_f[u,p] G_f[u,q] ) x_p x_q
//! ```
//!
//! where `B` is the selected rows of the blur matrix. The bracket is row `c`
//! of block `f` of `L`, indexed by column `p * D + q`. Only pixel pairs that
//! share a filtered output inside a pooling footprint get an entry, so `L` is
//! assembled row by row from pairs of convolution-matrix rows instead of
//! forming `G_f (x) G_f` at full `D^2 x D^2` size.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sprs::{CsMat, TriMat};

use super::{FilterBank, HogDescriptor};
use crate::error::{Error, Result};
use crate::image::matrix::{conv_matrix, selection_matrix};
use crate::image::{Image, PoolingSpec};

/// Largest pixel count accepted for explicit construction (20x20).
pub const MAX_EXPLICIT_PIXELS: usize = 400;

#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    matrix: CsMat<f64>,
    pixels: usize,
    blocks: usize,
    cells_x: usize,
    cells_y: usize,
}

impl ProjectionMatrix {
    /// `L = I` on `vec(x x^T)`: one row per pixel product.
    pub fn identity(pixels: usize) -> Result<Self> {
        check_cap(pixels)?;
        let n = pixels * pixels;
        let mut tri = TriMat::with_capacity((n, n), n);
        for i in 0..n {
            tri.add_triplet(i, i, 1.0);
        }
        Ok(Self {
            matrix: tri.to_csr(),
            pixels,
            blocks: 1,
            cells_x: n,
            cells_y: 1,
        })
    }

    /// Wraps an arbitrary `rows x D^2` matrix as a single block.
    pub fn from_matrix(matrix: CsMat<f64>, pixels: usize) -> Result<Self> {
        if matrix.cols() != pixels * pixels {
            return Err(Error::Dimension(format!(
                "{} columns for {pixels} pixels",
                matrix.cols()
            )));
        }
        let rows = matrix.rows();
        Ok(Self {
            matrix: matrix.to_csr(),
            pixels,
            blocks: 1,
            cells_x: rows,
            cells_y: 1,
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }

    /// `L^T v`, a weight vector over pixel products.
    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows());
        let mut out = vec![0.0; self.cols()];
        for (r, row) in self.matrix.outer_iterator().enumerate() {
            for (c, &val) in row.iter() {
                out[c] += val * v[r];
            }
        }
        out
    }

    /// Writes `rows cols nnz` followed by one `row col value` line per entry.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {} {}", self.rows(), self.cols(), self.nnz())?;
        for (r, row) in self.matrix.outer_iterator().enumerate() {
            for (c, &v) in row.iter() {
                writeln!(out, "{r} {c} {v:e}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a triplet file written by [`write_triplets`](Self::write_triplets).
    pub fn read_triplets(path: &Path) -> Result<CsMat<f64>> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty triplet file".into()))??;
        let dims: Vec<usize> = parse_fields(&header)?;
        if dims.len() != 3 {
            return Err(Error::Format(format!("bad triplet header {header:?}")));
        }
        let mut tri = TriMat::with_capacity((dims[0], dims[1]), dims[2]);
        for line in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let (r, c, v) = match (it.next(), it.next(), it.next()) {
                (Some(r), Some(c), Some(v)) => (r, c, v),
                _ => return Err(Error::Format(format!("bad triplet line {line:?}"))),
            };
            let bad = |_| Error::Format(format!("bad triplet line {line:?}"));
            tri.add_triplet(
                r.parse().map_err(bad)?,
                c.parse().map_err(bad)?,
                v.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value in {line:?}")))?,
            );
        }
        Ok(tri.to_csr())
    }
}

fn parse_fields(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("bad triplet header {line:?}")))
        })
        .collect()
}

fn check_cap(pixels: usize) -> Result<()> {
    if pixels > MAX_EXPLICIT_PIXELS {
        return Err(Error::SizeCap {
            pixels,
            columns: pixels * pixels,
            cap: MAX_EXPLICIT_PIXELS,
        });
    }
    Ok(())
}

/// Assembles `L` block by block so that `apply_projection(L, x)` equals
/// `hog_conv(x, bank, pooling)`.
pub fn build_projection(
    bank: &FilterBank,
    pooling: &PoolingSpec,
    width: usize,
    height: usize,
) -> Result<ProjectionMatrix> {
    let d = width * height;
    check_cap(d)?;
    let (cells_x, cells_y) = pooling.output_dims(width, height)?;
    for k in bank.filters() {
        if k.width() > width || k.height() > height {
            return Err(Error::Dimension(format!(
                "{}x{} filter does not fit a {width}x{height} image",
                k.width(),
                k.height()
            )));
        }
    }
    let pool_rows = selection_matrix(pooling, width, height)?;
    let blur = conv_matrix(pooling.blur(), width, height);
    // B restricted to the kept samples: for each cell, (pixel u, weight) pairs
    let footprints: Vec<Vec<(usize, f64)>> = pool_rows
        .outer_iterator()
        .map(|sel| {
            let (s, _) = sel.iter().next().expect("one entry per selection row");
            blur.outer_view(s)
                .expect("row in range")
                .iter()
                .map(|(u, &w)| (u, w))
                .collect()
        })
        .collect();

    let cells = cells_x * cells_y;
    let mut tri = TriMat::new((bank.len() * cells, d * d));
    let mut scratch = vec![0.0; d * d];
    let mut touched: Vec<usize> = Vec::new();
    for (f, kernel) in bank.filters().iter().enumerate() {
        let g = conv_matrix(kernel, width, height);
        for (c, footprint) in footprints.iter().enumerate() {
            for &(u, bw) in footprint {
                let row = g.outer_view(u).expect("row in range");
                for (p, &gp) in row.iter() {
                    let scaled = bw * gp;
                    for (q, &gq) in row.iter() {
                        let col = p * d + q;
                        if scratch[col] == 0.0 {
                            touched.push(col);
                        }
                        scratch[col] += scaled * gq;
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &col in &touched {
                if scratch[col] != 0.0 {
                    tri.add_triplet(f * cells + c, col, scratch[col]);
                }
                scratch[col] = 0.0;
            }
            touched.clear();
        }
    }
    Ok(ProjectionMatrix {
        matrix: tri.to_csr(),
        pixels: d,
        blocks: bank.len(),
        cells_x,
        cells_y,
    })
}

/// `L vec(x x^T)`, evaluated from the nonzeros of `L` without forming the
/// `D^2` product vector.
pub fn apply_projection(l: &ProjectionMatrix, image: &Image) -> Result<HogDescriptor> {
    let d = image.len();
    if d * d != l.cols() {
        return Err(Error::Dimension(format!(
            "image has {d} pixels; projection expects {}",
            l.pixels
        )));
    }
    let x = image.data();
    let values = l
        .matrix
        .outer_iterator()
        .map(|row| row.iter().map(|(c, &v)| v * x[c / d] * x[c % d]).sum())
        .collect();
    Ok(HogDescriptor {
        values,
        filters: l.blocks,
        cells_x: l.cells_x,
        cells_y: l.cells_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hog::{hog_conv, make_gabor_bank, max_relative_deviation};
    use crate::image::Kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_filter_selects_the_diagonal() {
        let bank = FilterBank::from_kernels(vec![Kernel::identity()]).unwrap();
        let pooling = PoolingSpec::new(Kernel::identity(), 1).unwrap();
        let l = build_projection(&bank, &pooling, 2, 2).unwrap();
        assert_eq!((l.rows(), l.cols(), l.nnz()), (4, 16, 4));
        for (r, row) in l.matrix().outer_iterator().enumerate() {
            let entries: Vec<_> = row.iter().map(|(c, &v)| (c, v)).collect();
            assert_eq!(entries, vec![(r * 4 + r, 1.0)]);
        }
    }

    #[test]
    fn row_count_is_filters_times_cells() {
        let bank = make_gabor_bank(4, 1, 5).unwrap();
        let l = build_projection(&bank, &PoolingSpec::box_filter(4, 4).unwrap(), 12, 12).unwrap();
        assert_eq!(l.rows(), 4 * 9);
        assert_eq!(l.cols(), 144 * 144);
        assert_eq!(l.blocks(), 4);
    }

    #[test]
    fn matches_conv_path_on_random_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let bank = make_gabor_bank(4, 1, 5).unwrap();
        let pooling = PoolingSpec::box_filter(4, 4).unwrap();
        let l = build_projection(&bank, &pooling, 12, 12).unwrap();
        for _ in 0..5 {
            let img = Image::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
            let a = apply_projection(&l, &img).unwrap();
            let b = hog_conv(&img, &bank, &pooling).unwrap();
            assert!(max_relative_deviation(&a.values, &b.values) <= 1e-8);
        }
    }

    #[test]
    fn even_in_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let bank = make_gabor_bank(2, 1, 3).unwrap();
        let pooling = PoolingSpec::box_filter(2, 2).unwrap();
        let l = build_projection(&bank, &pooling, 6, 6).unwrap();
        let img = Image::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(
            apply_projection(&l, &img).unwrap(),
            apply_projection(&l, &img.scaled(-1.0)).unwrap()
        );
        let zero = apply_projection(&l, &Image::zeros(6, 6)).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn size_cap() {
        let bank = make_gabor_bank(1, 1, 3).unwrap();
        let pooling = PoolingSpec::box_filter(1, 1).unwrap();
        let err = build_projection(&bank, &pooling, 21, 20).unwrap_err();
        assert!(matches!(
            err,
            Error::SizeCap {
                pixels: 420,
                columns: 176400,
                ..
            }
        ));
        assert!(err.to_string().contains("420^2"));
    }

    #[test]
    fn wrong_image_size() {
        let l = ProjectionMatrix::identity(4).unwrap();
        assert!(apply_projection(&l, &Image::zeros(3, 3)).is_err());
    }

    #[test]
    fn triplet_round_trip() {
        let bank = make_gabor_bank(2, 1, 3).unwrap();
        let l = build_projection(&bank, &PoolingSpec::box_filter(2, 2).unwrap(), 4, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.txt");
        l.write_triplets(&path).unwrap();
        let back = ProjectionMatrix::read_triplets(&path).unwrap();
        assert_eq!(back, *l.matrix());
    }
}
