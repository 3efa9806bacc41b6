use std::io::{Read, Write};
use std::path::Path;

use super::{CorrMatrix, DataMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first record as a header if any field is not a number.
    #[default]
    Auto,
    Present,
    Absent,
}

/// Read a numeric CSV (rows are samples, columns variables). Error
/// coordinates are 1-based file line and column.
pub fn read_csv<R: Read>(reader: R, header: HeaderMode) -> Result<(DataMatrix, Option<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        let is_header = k == 0
            && match header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => rec.iter().any(|f| f.parse::<f64>().is_err()),
            };
        if is_header {
            names = Some(rec.iter().map(str::to_owned).collect());
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: line,
                col: c + 1,
                msg: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: line, col: c + 1, value: v });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::ShapeMismatch(format!(
                    "line {line} has {} fields, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::ShapeMismatch("no data rows".into()));
    }
    Ok((DataMatrix::from_rows(&rows)?, names))
}

pub fn read_csv_path(path: &Path, header: HeaderMode) -> Result<(DataMatrix, Option<Vec<String>>)> {
    read_csv(std::fs::File::open(path)?, header)
}

/// Upper triangle as `i,j,rho` rows with 1-based indices.
pub fn write_corr_csv<W: Write>(corr: &CorrMatrix, out: W) -> Result<()> {
    let columns: Vec<usize> = (0..corr.p()).collect();
    write_corr_csv_with_columns(corr, &columns, out)
}

/// Like [`write_corr_csv`], labelling matrix column `k` as original column
/// `columns[k]` (0-based), e.g. after constant columns were dropped.
pub fn write_corr_csv_with_columns<W: Write>(corr: &CorrMatrix, columns: &[usize], out: W) -> Result<()> {
    if columns.len() != corr.p() {
        return Err(Error::ShapeMismatch(format!("{} labels for {} columns", columns.len(), corr.p())));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "rho"])?;
    for (i, j, r) in corr.iter_upper() {
        w.write_record([(columns[i] + 1).to_string(), (columns[j] + 1).to_string(), format!("{r:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}
