use crate::error::{Error, Result};

/// Dense row-major matrix, one example per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact on an empty slice with cols == 0 would panic
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Stacks every row twice (row order `0, 0, 1, 1, ...`).
    pub fn duplicated(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len() * 2);
        for r in self.iter_rows() {
            data.extend_from_slice(r);
            data.extend_from_slice(r);
        }
        Self {
            rows: self.rows * 2,
            cols: self.cols,
            data,
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Labeled examples. Labels are `-1.0` or `+1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: Vec<f64>,
    pub tags: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: FeatureMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Dimension(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not +-1")));
        }
        Ok(Self {
            features,
            labels,
            tags: None,
        })
    }

    pub fn with_tags(mut self, tags: Vec<String>) -> Result<Self> {
        if tags.len() != self.labels.len() {
            return Err(Error::Dimension(format!(
                "{} tags for {} rows",
                tags.len(),
                self.labels.len()
            )));
        }
        self.tags = Some(tags);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            tags: self
                .tags
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
        }
    }
}

/// Errors unless both classes are present.
pub(crate) fn check_two_classes(labels: &[f64]) -> Result<()> {
    let pos = labels.iter().any(|&y| y > 0.0);
    let neg = labels.iter().any(|&y| y < 0.0);
    if labels.len() < 2 || !pos || !neg {
        return Err(Error::SingleClass);
    }
    Ok(())
}
