use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Random access to training rows. The solver touches rows one at a time,
/// so a source may keep only the current row in memory.
pub trait RowSource {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn row(&mut self, i: usize) -> Result<&[f64]>;
}

/// In-memory rows.
pub struct MatrixRows<'a>(pub &'a FeatureMatrix);

impl RowSource for MatrixRows<'_> {
    fn rows(&self) -> usize {
        self.0.rows()
    }

    fn cols(&self) -> usize {
        self.0.cols()
    }

    fn row(&mut self, i: usize) -> Result<&[f64]> {
        if i >= self.0.rows() {
            return Err(Error::Dimension(format!("row {i} of {}", self.0.rows())));
        }
        Ok(self.0.row(i))
    }
}

/// Rows recomputed on every visit from a per-example input, for feature maps
/// too large to hold in memory.
pub struct ExtractedRows<'a, T, F> {
    inputs: &'a [T],
    cols: usize,
    extract: F,
    buf: Vec<f64>,
    current: Option<usize>,
}

impl<'a, T, F> ExtractedRows<'a, T, F>
where
    F: FnMut(&T, &mut [f64]),
{
    pub fn new(inputs: &'a [T], cols: usize, extract: F) -> Self {
        Self {
            inputs,
            cols,
            extract,
            buf: vec![0.0; cols],
            current: None,
        }
    }
}

impl<T, F> RowSource for ExtractedRows<'_, T, F>
where
    F: FnMut(&T, &mut [f64]),
{
    fn rows(&self) -> usize {
        self.inputs.len()
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn row(&mut self, i: usize) -> Result<&[f64]> {
        let input = self
            .inputs
            .get(i)
            .ok_or_else(|| Error::Dimension(format!("row {i} of {}", self.inputs.len())))?;
        if self.current != Some(i) {
            (self.extract)(input, &mut self.buf);
            self.current = Some(i);
        }
        Ok(&self.buf)
    }
}
