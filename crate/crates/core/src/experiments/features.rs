//! Turning images into fixed-length feature rows.

use std::path::Path;

use rayon::prelude::*;

use super::config::FeatureKind;
use crate::error::{Error, Result};
use crate::hog::{
    apply_projection, build_projection, hog_baseline, hog_conv, make_gabor_bank, FilterBank, ProjectionMatrix,
};
use crate::image::{Image, PoolingSpec};
use crate::quad::{compact_into, quad_dimension, LocalWindow};
use crate::store::{FeatureFile, FeatureWriter, Layout};
use crate::svm::{dcd_train_source, ExtractedRows, FeatureMatrix, MatrixRows, RowSource, SvmModel};

pub const HOG_ORIENTATIONS: usize = 18;
pub const HOG_CELL: usize = 4;
pub const GABOR_ORIENTATIONS: usize = 18;
pub const GABOR_SCALES: usize = 4;
pub const GABOR_BASE_SUPPORT: usize = 3;

/// A configured extractor for images of one size. Every row is multiplied
/// by `scale`, which [`FeatureExtractor::fit_scale`] sets so training rows
/// have unit mean squared norm.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    kind: FeatureKind,
    width: usize,
    height: usize,
    dim: usize,
    scale: f64,
    window: Option<LocalWindow>,
    bank: Option<(FilterBank, PoolingSpec)>,
    projection: Option<ProjectionMatrix>,
}

impl FeatureExtractor {
    /// `window` is required for [`FeatureKind::Quad`] and ignored otherwise.
    pub fn new(kind: FeatureKind, width: usize, height: usize, window: Option<LocalWindow>) -> Result<Self> {
        let mut ex = Self {
            kind,
            width,
            height,
            dim: 0,
            scale: 1.0,
            window: None,
            bank: None,
            projection: None,
        };
        ex.dim = match kind {
            FeatureKind::Pixels => width * height,
            FeatureKind::HogBaseline => {
                if !width.is_multiple_of(HOG_CELL) || !height.is_multiple_of(HOG_CELL) {
                    return Err(Error::Dimension(format!(
                        "{width}x{height} is not a multiple of the {HOG_CELL}-pixel cell"
                    )));
                }
                (width / HOG_CELL) * (height / HOG_CELL) * 4 * HOG_ORIENTATIONS
            }
            FeatureKind::HogConv | FeatureKind::HogReform => {
                let bank = make_gabor_bank(GABOR_ORIENTATIONS, GABOR_SCALES, GABOR_BASE_SUPPORT)?;
                let pooling = PoolingSpec::box_filter(HOG_CELL, HOG_CELL)?;
                let (cx, cy) = pooling.output_dims(width, height)?;
                let support = bank.max_support();
                if support > width || support > height {
                    return Err(Error::Dimension(format!(
                        "{support}x{support} filters do not fit a {width}x{height} image"
                    )));
                }
                if kind == FeatureKind::HogReform {
                    ex.projection = Some(build_projection(&bank, &pooling, width, height)?);
                }
                let dim = bank.len() * cx * cy;
                ex.bank = Some((bank, pooling));
                dim
            }
            FeatureKind::Quad => {
                let window = window.ok_or_else(|| Error::InvalidArgument("quad features need a window".into()))?;
                let dim = quad_dimension(width, height, &window);
                ex.window = Some(window);
                dim
            }
        };
        Ok(ex)
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn window(&self) -> Option<&LocalWindow> {
        self.window.as_ref()
    }

    pub fn layout(&self) -> Layout {
        match self.kind {
            FeatureKind::Pixels => Layout::Pixels,
            FeatureKind::HogBaseline => Layout::HogBaseline,
            FeatureKind::HogConv => Layout::HogConv,
            FeatureKind::HogReform => Layout::HogReform,
            FeatureKind::Quad => Layout::Quad,
        }
    }

    /// Unscaled features.
    pub fn extract_raw(&self, image: &Image, out: &mut [f64]) -> Result<()> {
        if image.dims() != (self.width, self.height) {
            return Err(Error::Dimension(format!(
                "{}x{} image for a {}x{} extractor",
                image.width(),
                image.height(),
                self.width,
                self.height
            )));
        }
        match self.kind {
            FeatureKind::Pixels => out.copy_from_slice(image.data()),
            FeatureKind::HogBaseline => out.copy_from_slice(&hog_baseline(image, HOG_ORIENTATIONS, HOG_CELL)?.values),
            FeatureKind::HogConv => {
                let (bank, pooling) = self.bank.as_ref().expect("set in new");
                out.copy_from_slice(&hog_conv(image, bank, pooling)?.values)
            }
            FeatureKind::HogReform => {
                let l = self.projection.as_ref().expect("set in new");
                out.copy_from_slice(&apply_projection(l, image)?.values)
            }
            FeatureKind::Quad => {
                let window = self.window.as_ref().expect("set in new");
                compact_into(image.data(), self.width, self.height, window, out)
            }
        }
        Ok(())
    }

    pub fn extract_into(&self, image: &Image, out: &mut [f64]) -> Result<()> {
        self.extract_raw(image, out)?;
        if self.scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.scale);
        }
        Ok(())
    }

    pub fn extract(&self, image: &Image) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.extract_into(image, &mut out)?;
        Ok(out)
    }

    /// Sets the row scale from `images` so their rows have unit mean squared
    /// norm.
    pub fn fit_scale(&mut self, images: &[Image]) -> Result<()> {
        self.scale = 1.0;
        let norms: Vec<f64> = images
            .par_iter()
            .map_init(
                || vec![0.0; self.dim],
                |buf, im| {
                    self.extract_raw(im, buf)?;
                    Ok(buf.iter().map(|v| v * v).sum::<f64>())
                },
            )
            .collect::<Result<_>>()?;
        let mean = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
        if mean > 0.0 {
            self.scale = 1.0 / mean.sqrt();
        }
        Ok(())
    }

    pub fn matrix(&self, images: &[Image]) -> Result<FeatureMatrix> {
        let mut data = vec![0.0; images.len() * self.dim];
        data.par_chunks_mut(self.dim.max(1))
            .zip(images.par_iter())
            .try_for_each(|(row, im)| self.extract_into(im, row))?;
        FeatureMatrix::new(images.len(), self.dim, data)
    }

    pub fn bytes_for(&self, rows: usize) -> u64 {
        rows as u64 * self.dim as u64 * 8
    }
}

/// Where training rows live during an SVM solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    InMemory,
    /// Rows are recomputed from the images on every visit.
    Recompute,
    /// Rows are written once to a container file and streamed back.
    Spill,
}

impl Storage {
    pub fn choose(bytes: u64, budget: u64, spill: bool) -> Self {
        if bytes <= budget {
            Self::InMemory
        } else if spill {
            Self::Spill
        } else {
            Self::Recompute
        }
    }
}

/// Training rows for a set of images under a storage policy. Holds either
/// the matrix or the spill file so several models can be trained on the
/// same rows.
pub enum TrainingRows<'a> {
    InMemory(FeatureMatrix),
    Recompute {
        images: &'a [Image],
        extractor: &'a FeatureExtractor,
    },
    Spill(std::path::PathBuf),
}

impl<'a> TrainingRows<'a> {
    pub fn prepare(
        storage: Storage,
        images: &'a [Image],
        extractor: &'a FeatureExtractor,
        spill_dir: &Path,
    ) -> Result<Self> {
        Ok(match storage {
            Storage::InMemory => Self::InMemory(extractor.matrix(images)?),
            Storage::Recompute => Self::Recompute { images, extractor },
            Storage::Spill => {
                std::fs::create_dir_all(spill_dir)?;
                let path = spill_dir.join(format!(
                    "{}-{}x{}.hqfm",
                    extractor.kind().name(),
                    images.len(),
                    extractor.dim()
                ));
                let mut w = FeatureWriter::create(&path, extractor.dim(), extractor.layout())?;
                let mut row = vec![0.0; extractor.dim()];
                for im in images {
                    extractor.extract_into(im, &mut row)?;
                    w.push_row(&row)?;
                }
                w.finish()?;
                Self::Spill(path)
            }
        })
    }

    pub fn train(&self, labels: &[f64], params: &crate::svm::DcdParams) -> Result<SvmModel> {
        match self {
            Self::InMemory(m) => dcd_train_source(&mut MatrixRows(m), labels, params),
            Self::Recompute { images, extractor } => {
                let mut rows = ExtractedRows::new(images, extractor.dim(), |im: &Image, out: &mut [f64]| {
                    extractor
                        .extract_into(im, out)
                        .expect("extractor checked image size on construction")
                });
                dcd_train_source(&mut rows, labels, params)
            }
            Self::Spill(path) => {
                let mut file = FeatureFile::open(path)?;
                dcd_train_source(&mut file, labels, params)
            }
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::InMemory(m) => m.rows(),
            Self::Recompute { images, .. } => images.len(),
            Self::Spill(path) => FeatureFile::open(path).map_or(0, |f| f.rows()),
        }
    }
}

impl Drop for TrainingRows<'_> {
    fn drop(&mut self) {
        if let Self::Spill(path) = self {
            let _ = std::fs::remove_file(path);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: usize, size: usize) -> Vec<Image> {
        (0..n)
            .map(|i| Image::from_fn(size, size, |x, y| ((x * 3 + y * 7 + i * 5) % 11) as f64 - 5.0))
            .collect()
    }

    #[test]
    fn dimensions() {
        let w = LocalWindow::square(1);
        assert_eq!(
            FeatureExtractor::new(FeatureKind::Pixels, 16, 16, None).unwrap().dim(),
            256
        );
        assert_eq!(
            FeatureExtractor::new(FeatureKind::Quad, 16, 16, Some(w)).unwrap().dim(),
            9 * 256
        );
        assert_eq!(
            FeatureExtractor::new(FeatureKind::HogBaseline, 32, 32, None)
                .unwrap()
                .dim(),
            64 * 72
        );
        assert_eq!(
            FeatureExtractor::new(FeatureKind::HogConv, 20, 20, None).unwrap().dim(),
            72 * 25
        );
        assert!(FeatureExtractor::new(FeatureKind::Quad, 16, 16, None).is_err());
        assert!(FeatureExtractor::new(FeatureKind::HogConv, 16, 16, None).is_err());
        assert!(matches!(
            FeatureExtractor::new(FeatureKind::HogReform, 32, 32, None),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn reform_matches_conv() {
        let conv = FeatureExtractor::new(FeatureKind::HogConv, 20, 20, None).unwrap();
        let reform = FeatureExtractor::new(FeatureKind::HogReform, 20, 20, None).unwrap();
        for im in images(3, 20) {
            let a = conv.extract(&im).unwrap();
            let b = reform.extract(&im).unwrap();
            assert!(crate::hog::max_relative_deviation(&b, &a) < 1e-8);
        }
    }

    #[test]
    fn scale_gives_unit_mean_squared_norm() {
        let ims = images(6, 8);
        let mut ex = FeatureExtractor::new(FeatureKind::Quad, 8, 8, Some(LocalWindow::square(1))).unwrap();
        ex.fit_scale(&ims).unwrap();
        let m = ex.matrix(&ims).unwrap();
        let msn = m.iter_rows().map(|r| r.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / 6.0;
        assert!((msn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn storage_policies_agree() {
        let ims = images(10, 8);
        let labels: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let ex = FeatureExtractor::new(FeatureKind::Quad, 8, 8, Some(LocalWindow::square(1))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let params = crate::svm::DcdParams::new(1.0, 1e-6).seed(3);
        let models: Vec<SvmModel> = [Storage::InMemory, Storage::Recompute, Storage::Spill]
            .into_iter()
            .map(|s| {
                TrainingRows::prepare(s, &ims, &ex, dir.path())
                    .unwrap()
                    .train(&labels, &params)
                    .unwrap()
            })
            .collect();
        assert_eq!(models[0], models[1]);
        assert_eq!(models[0], models[2]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn storage_choice() {
        assert_eq!(Storage::choose(10, 10, true), Storage::InMemory);
        assert_eq!(Storage::choose(11, 10, false), Storage::Recompute);
        assert_eq!(Storage::choose(11, 10, true), Storage::Spill);
    }
}
