use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check_patch_size;
use crate::error::{Error, Result};
use crate::image::{load_gray, power_normalize, Image};

/// Readable image files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Square crop with its top-left corner at `(x0, y0)`.
pub fn crop(image: &Image, x0: usize, y0: usize, size: usize) -> Image {
    Image::from_fn(size, size, |x, y| image.get(x0 + x, y0 + y))
}

/// Samples `count` power-normalized square patches from the images in
/// `source_dir`: each patch picks a file uniformly, then a position
/// uniformly. Files that fail to decode or are smaller than the patch are
/// skipped.
pub fn ingest_patches(source_dir: &Path, patch_size: usize, count: usize, seed: u64) -> Result<Vec<Image>> {
    check_patch_size(patch_size)?;
    let files = list_images(source_dir)?;
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no files in {}", source_dir.display())));
    }
    let mut decoded = 0;
    let images: Vec<Image> = files
        .iter()
        .filter_map(|p| load_gray(p).ok())
        .inspect(|_| decoded += 1)
        .filter(|im| im.width() >= patch_size && im.height() >= patch_size)
        .collect();
    if decoded == 0 {
        return Err(Error::InvalidArgument(format!(
            "no readable images in {}",
            source_dir.display()
        )));
    }
    if images.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "every image in {} is smaller than {patch_size}x{patch_size}",
            source_dir.display()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let im = &images[rng.random_range(0..images.len())];
            let x0 = rng.random_range(0..=im.width() - patch_size);
            let y0 = rng.random_range(0..=im.height() - patch_size);
            power_normalize(&crop(im, x0, y0, patch_size)).image
        })
        .collect())
}
