//! Binary feature container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "HQFM"
//!      4     4  version (u32 LE, currently 1)
//!      8     8  rows (u64 LE)
//!     16     8  cols (u64 LE)
//!     24     4  layout tag (u32 LE)
//!     28     -  rows * cols f64 LE, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::svm::{FeatureMatrix, RowSource};

pub const MAGIC: [u8; 4] = *b"HQFM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 28;

/// Which extractor produced the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Layout {
    Generic = 0,
    Pixels = 1,
    HogBaseline = 2,
    HogConv = 3,
    HogReform = 4,
    Quad = 5,
}

impl Layout {
    fn from_tag(tag: u32) -> Result<Self> {
        Ok(match tag {
            0 => Self::Generic,
            1 => Self::Pixels,
            2 => Self::HogBaseline,
            3 => Self::HogConv,
            4 => Self::HogReform,
            5 => Self::Quad,
            other => return Err(Error::Format(format!("unknown layout tag {other}"))),
        })
    }
}

pub struct FeatureWriter {
    out: BufWriter<File>,
    cols: usize,
    rows: u64,
}

impl FeatureWriter {
    pub fn create(path: &Path, cols: usize, layout: Layout) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?; // patched by finish()
        out.write_all(&(cols as u64).to_le_bytes())?;
        out.write_all(&(layout as u32).to_le_bytes())?;
        Ok(Self { out, cols, rows: 0 })
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::Dimension(format!(
                "row of {} values for a {}-column container",
                row.len(),
                self.cols
            )));
        }
        for v in row {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.seek(SeekFrom::Start(8))?;
        self.out.write_all(&self.rows.to_le_bytes())?;
        self.out.flush()?;
        Ok(self.rows)
    }
}

pub fn write_matrix(path: &Path, m: &FeatureMatrix, layout: Layout) -> Result<()> {
    let mut w = FeatureWriter::create(path, m.cols(), layout)?;
    for r in m.iter_rows() {
        w.push_row(r)?;
    }
    w.finish()?;
    Ok(())
}

/// Random-access reader; rows are decoded on demand.
pub struct FeatureFile {
    reader: BufReader<File>,
    rows: usize,
    cols: usize,
    layout: Layout,
    row_buf: Vec<f64>,
    byte_buf: Vec<u8>,
    current: Option<usize>,
}

impl FeatureFile {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let file_len = file.metadata()?.len();
        let mut reader = BufReader::new(file);
        let mut header = [0u8; HEADER_LEN as usize];
        reader
            .read_exact(&mut header)
            .map_err(|_| Error::Format("truncated feature header".into()))?;
        if header[0..4] != MAGIC {
            return Err(Error::Format("not a feature container".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let rows = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
        let layout = Layout::from_tag(u32::from_le_bytes(header[24..28].try_into().unwrap()))?;
        let expected = HEADER_LEN + (rows * cols * 8) as u64;
        if file_len != expected {
            return Err(Error::Format(format!(
                "container is {file_len} bytes, header implies {expected}"
            )));
        }
        Ok(Self {
            reader,
            rows,
            cols,
            layout,
            row_buf: vec![0.0; cols],
            byte_buf: vec![0u8; cols * 8],
            current: None,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Payload size in bytes.
    pub fn payload_bytes(&self) -> u64 {
        (self.rows * self.cols * 8) as u64
    }

    pub fn read_all(&mut self) -> Result<FeatureMatrix> {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.load(i)?);
        }
        FeatureMatrix::new(self.rows, self.cols, data)
    }

    fn load(&mut self, i: usize) -> Result<&[f64]> {
        if i >= self.rows {
            return Err(Error::Dimension(format!("row {i} of {}", self.rows)));
        }
        if self.current != Some(i) {
            let offset = HEADER_LEN + (i * self.cols * 8) as u64;
            self.reader.seek(SeekFrom::Start(offset))?;
            self.reader.read_exact(&mut self.byte_buf)?;
            for (v, b) in self.row_buf.iter_mut().zip(self.byte_buf.chunks_exact(8)) {
                *v = f64::from_le_bytes(b.try_into().unwrap());
            }
            self.current = Some(i);
        }
        Ok(&self.row_buf)
    }
}

impl RowSource for FeatureFile {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn row(&mut self, i: usize) -> Result<&[f64]> {
        self.load(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let m = FeatureMatrix::new(3, 2, vec![1.0, -2.0, 0.5, 1e-300, f64::MAX, 7.0]).unwrap();
        write_matrix(&path, &m, Layout::Quad).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"HQFM");
        assert_eq!(bytes.len(), 28 + 6 * 8);
        let mut f = FeatureFile::open(&path).unwrap();
        assert_eq!(f.layout(), Layout::Quad);
        assert_eq!((f.rows(), f.cols()), (3, 2));
        assert_eq!(f.read_all().unwrap(), m);
        assert_eq!(f.row(1).unwrap(), &[0.5, 1e-300]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"nope").unwrap();
        assert!(matches!(FeatureFile::open(&path), Err(Error::Format(_))));

        let m = FeatureMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        write_matrix(&path, &m, Layout::Generic).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(FeatureFile::open(&path), Err(Error::Format(_))));
    }

    #[test]
    fn writer_checks_width() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = FeatureWriter::create(&dir.path().join("w.bin"), 3, Layout::Pixels).unwrap();
        assert!(w.push_row(&[1.0, 2.0]).is_err());
    }
}
