//! Comma-separated matrices with an optional single header row.
//!
//! The first record is treated as a header when any of its fields fails to
//! parse as a number. A header whose first field is `id` marks the first
//! column as per-row identifiers.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub fn read_csv<R: Read>(reader: R) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Empty("CSV has no rows".into())),
    };

    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let has_ids = is_header && first.get(0).is_some_and(|f| f.eq_ignore_ascii_case("id"));
    let skip = usize::from(has_ids);

    let mut cols = None;
    let mut values = Vec::new();
    let mut ids = Vec::new();
    let mut row = 0;

    let pending = if is_header { None } else { Some(Ok(first.clone())) };
    if is_header {
        cols = Some(first.len() - skip);
    }
    for rec in pending.into_iter().chain(records) {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let width = rec.len().saturating_sub(skip);
        let expected = *cols.get_or_insert(width);
        if width != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: width,
            });
        }
        if has_ids {
            ids.push(rec[0].to_string());
        }
        for (col, field) in rec.iter().skip(skip).enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                col,
                text: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col, value });
            }
            values.push(value);
        }
        row += 1;
    }

    let m = FeatureMatrix::new(row, cols.unwrap_or(0), values)?;
    if has_ids {
        m.with_ids(ids)
    } else {
        Ok(m)
    }
}

/// Writes a matrix with a `f0,f1,...` header (or `id,f0,...` when rows carry ids).
pub fn write_csv<W: Write>(writer: W, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = Vec::with_capacity(m.cols() + 1);
    if m.ids().is_some() {
        header.push("id".into());
    }
    header.extend((0..m.cols()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (i, r) in m.iter_rows().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(m.cols() + 1);
        if let Some(ids) = m.ids() {
            rec.push(ids[i].clone());
        }
        // `{:?}` prints the shortest representation that round-trips exactly
        rec.extend(r.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
