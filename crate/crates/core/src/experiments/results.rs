use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub feature: String,
    pub train_size: usize,
    pub rms_level: f64,
    pub test_accuracy: f64,
    pub train_seconds: f64,
    pub feature_dim: usize,
    pub objective: f64,
}

impl ResultRow {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.test_accuracy) {
            return Err(Error::InvalidArgument(format!(
                "accuracy {} outside [0, 1]",
                self.test_accuracy
            )));
        }
        Ok(())
    }
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record([
        "experiment",
        "feature",
        "train_size",
        "rms_level",
        "test_accuracy",
        "train_seconds",
        "feature_dim",
        "objective",
    ])?;
    for r in rows {
        r.validate()?;
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Appends rows one at a time to a CSV file, writing the header first if
/// the file is new or empty.
pub struct CsvAppender {
    writer: csv::Writer<std::fs::File>,
}

impl CsvAppender {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self { writer })
    }

    pub fn push(&mut self, row: &ResultRow) -> Result<()> {
        row.validate()?;
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(feature: &str, acc: f64) -> ResultRow {
        ResultRow {
            experiment: "alignment_sweep".into(),
            feature: feature.into(),
            train_size: 300,
            rms_level: 2.5,
            test_accuracy: acc,
            train_seconds: 0.125,
            feature_dim: 9216,
            objective: 12.75,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_csv(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "experiment,feature,train_size,rms_level,test_accuracy,train_seconds,feature_dim,objective\n"
        );
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn round_trip_with_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row("quad", 0.5), row("odd, \"name\"", 1.0)];
        emit_csv(&rows, &path).unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .contains("\"odd, \"\"name\"\"\""));
        assert_eq!(read_csv(&path).unwrap(), rows);
        assert!(emit_csv(&[row("quad", 1.5)], &path).is_err());
    }

    #[test]
    fn appender_writes_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        CsvAppender::open(&path).unwrap().push(&row("a", 0.1)).unwrap();
        CsvAppender::open(&path).unwrap().push(&row("b", 0.2)).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back, vec![row("a", 0.1), row("b", 0.2)]);
    }
}
