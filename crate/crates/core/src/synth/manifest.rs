//! Tab-separated record of generated samples, enough to regenerate each one.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimilarityTransform;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub label: String,
    pub scale: Option<f64>,
    pub rotation: Option<f64>,
    pub tx: Option<f64>,
    pub ty: Option<f64>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, seed: u64, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            seed,
            label: label.into(),
            scale: None,
            rotation: None,
            tx: None,
            ty: None,
        }
    }

    pub fn with_transform(mut self, t: &SimilarityTransform) -> Self {
        self.scale = Some(t.scale);
        self.rotation = Some(t.rotation);
        self.tx = Some(t.translation.0);
        self.ty = Some(t.translation.1);
        self
    }

    pub fn transform(&self) -> Option<SimilarityTransform> {
        Some(SimilarityTransform {
            scale: self.scale?,
            rotation: self.rotation?,
            translation: (self.tx?, self.ty?),
        })
    }
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(path)?;
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        let t = SimilarityTransform::new(1.05, -0.02, (0.3, 1e-17)).unwrap();
        let entries = vec![
            ManifestEntry::new("noise-0", 17, "noise"),
            ManifestEntry::new("warp-3-1", u64::MAX, "class 2").with_transform(&t),
        ];
        write_manifest(&path, &entries).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, entries);
        assert_eq!(back[1].transform(), Some(t));
        assert_eq!(back[0].transform(), None);
    }
}
