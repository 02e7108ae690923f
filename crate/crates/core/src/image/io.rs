use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::DynamicImage;

use super::Image;
use crate::error::{Error, Result};

/// Reads a PNG or binary PGM as grayscale in `[0, 1]`.
///
/// 8-bit gray is used as is; color is reduced with luma weights
/// 0.299 / 0.587 / 0.114.
pub fn load_gray(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
            })
            .collect(),
    };
    Image::new(w, h, data)
}

/// Writes a binary PGM, linearly stretching the value range to 0..=255.
pub fn save_pgm(image: &Image, path: &Path) -> Result<()> {
    let (lo, hi) = image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|&v| (255.0 * (v - lo) / span).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.pgm");
        let img = Image::from_fn(5, 3, |x, y| (x + 5 * y) as f64);
        save_pgm(&img, &path).unwrap();
        let back = load_gray(&path).unwrap();
        assert_eq!(back.dims(), (5, 3));
        assert_eq!(back.get(0, 0), 0.0);
        assert_eq!(back.get(4, 2), 1.0);
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b / 14.0).abs() < 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn rgb_png_uses_luma_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let buf = image::RgbImage::from_fn(2, 1, |x, _| {
            if x == 0 {
                image::Rgb([255, 0, 0])
            } else {
                image::Rgb([0, 0, 255])
            }
        });
        buf.save(&path).unwrap();
        let img = load_gray(&path).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-12);
        assert!((img.get(1, 0) - 0.114).abs() < 1e-12);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(load_gray(Path::new("/nonexistent/x.png")).is_err());
    }
}
