//! Trained linear model and its on-disk form.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "HQSV"
//!      4     4  version (u32 LE, currently 1)
//!      8     4  flags (u32 LE; bit 0 = augmented bias coordinate)
//!     12     8  d = length of w (u64 LE)
//!     20     8  C (f64 LE)
//!     28     8  tol (f64 LE)
//!     36     8  iterations run (u64 LE)
//!     44     8  objective (f64 LE)
//!     52   8*d  w (f64 LE)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"HQSV";
const VERSION: u32 = 1;
const FLAG_BIAS: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub(crate) w: Vec<f64>,
    pub(crate) bias: bool,
    pub(crate) c: f64,
    pub(crate) tol: f64,
    pub(crate) iterations_run: usize,
    pub(crate) objective: f64,
    pub(crate) converged: bool,
}

impl SvmModel {
    /// Weights; the last entry is the bias when [`has_bias`](Self::has_bias).
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    /// Number of input features the model expects.
    pub fn input_dim(&self) -> usize {
        self.w.len() - self.bias as usize
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Epochs (or consensus rounds) run.
    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// Primal objective at termination.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Whether the stopping tolerance was reached (not persisted).
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn bias_value(&self) -> f64 {
        if self.bias {
            self.w[self.w.len() - 1]
        } else {
            0.0
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim());
        x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.bias_value()
    }

    /// `w . x` per row.
    pub fn decision_values(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "{} feature columns for a {}-input model",
                features.cols(),
                self.input_dim()
            )));
        }
        Ok(features.iter_rows().map(|r| self.decision(r)).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        let flags = if self.bias { FLAG_BIAS } else { 0 };
        out.write_all(&flags.to_le_bytes())?;
        out.write_all(&(self.w.len() as u64).to_le_bytes())?;
        out.write_all(&self.c.to_le_bytes())?;
        out.write_all(&self.tol.to_le_bytes())?;
        out.write_all(&(self.iterations_run as u64).to_le_bytes())?;
        out.write_all(&self.objective.to_le_bytes())?;
        for v in &self.w {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        read(&mut r, &mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("not a model file".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let flags = u32::from_le_bytes(read_array(&mut r)?);
        let d = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let c = f64::from_le_bytes(read_array(&mut r)?);
        let tol = f64::from_le_bytes(read_array(&mut r)?);
        let iterations_run = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let objective = f64::from_le_bytes(read_array(&mut r)?);
        let bias = flags & FLAG_BIAS != 0;
        if d < bias as usize {
            return Err(Error::Format("weight vector shorter than bias".into()));
        }
        let mut w = Vec::with_capacity(d);
        for _ in 0..d {
            w.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after weights".into()));
        }
        Ok(Self {
            w,
            bias,
            c,
            tol,
            iterations_run,
            objective,
            converged: true,
        })
    }
}

fn read(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format("truncated model file".into()))
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read(r, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SvmModel {
        SvmModel {
            w: vec![0.25, -1.5, 1e-17, 3.0],
            bias: true,
            c: 2.0,
            tol: 1e-6,
            iterations_run: 17,
            objective: 4.125,
            converged: true,
        }
    }

    #[test]
    fn zero_weights_give_zero_decisions() {
        let m = SvmModel {
            w: vec![0.0; 3],
            bias: false,
            ..model()
        };
        let x = FeatureMatrix::new(2, 3, vec![1.0, 2.0, 3.0, -4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.decision_values(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let x = FeatureMatrix::new(1, 4, vec![0.0; 4]).unwrap();
        assert!(matches!(model().decision_values(&x), Err(Error::Dimension(_))));
    }

    #[test]
    fn persisted_model_predicts_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.svm");
        let m = model();
        m.save(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 52 + 32);
        let back = SvmModel::load(&path).unwrap();
        assert_eq!(back, m);
        let x = FeatureMatrix::new(2, 3, vec![0.1, 0.2, 0.3, 1e10, -7.0, 0.5]).unwrap();
        let a = m.decision_values(&x).unwrap();
        let b = back.decision_values(&x).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.svm");
        model().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(SvmModel::load(&path), Err(Error::Format(_))));
    }
}
