//! File formats: `.npy` and CSV feature matrices, score tables, and
//! `.combood` detector archives.

pub mod archive;
pub mod csv;
pub mod npy;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::detector::{Decision, ScoreTriple};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub use archive::{load_detector, save_detector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Npy,
    Csv,
}

impl MatrixFormat {
    /// Guesses the format from the file extension; anything but `.csv` is npy.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Npy,
        }
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::Npy => npy::read_npy(reader),
        MatrixFormat::Csv => csv::read_csv(reader),
    }
}

/// Loads a matrix, picking the format from the extension.
pub fn load_matrix_auto(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    load_matrix(path, MatrixFormat::from_path(path))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &FeatureMatrix, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        MatrixFormat::Npy => npy::write_npy(&mut w, m)?,
        MatrixFormat::Csv => csv::write_csv(&mut w, m)?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes an `id,kc,mc,score[,decision]` table.
pub fn write_scores<W: Write>(
    writer: W,
    ids: &[String],
    scores: &[ScoreTriple],
    decisions: Option<&[Decision]>,
) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(writer);
    if decisions.is_some() {
        w.write_record(["id", "kc", "mc", "score", "decision"])?;
    } else {
        w.write_record(["id", "kc", "mc", "score"])?;
    }
    for (i, (id, s)) in ids.iter().zip(scores).enumerate() {
        let mut rec = vec![
            id.clone(),
            format!("{:?}", s.kc),
            format!("{:?}", s.mc),
            format!("{:?}", s.score),
        ];
        if let Some(d) = decisions {
            rec.push(d[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one named numeric column from a headered scores table.
pub fn read_score_column<R: Read>(reader: R, column: &str) -> Result<Vec<f64>> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let text = rec.get(idx).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| Error::Parse {
            row,
            col: idx,
            text: text.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col: idx, value: v });
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Empty("scores table has no rows".into()));
    }
    Ok(out)
}

pub fn read_score_file(path: impl AsRef<Path>, column: &str) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_score_column(BufReader::new(file), column)
}
