//! Plain numeric CSV input and output.
//!
//! Rows are observations, values are IEEE-754 doubles, and there is no header
//! unless the caller opts in to skipping one line. The writer emits 17
//! significant digits so that values survive a write/read round trip exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::{Error, Result};

fn parse_field(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("{field:?}: {e}"),
    })
}

fn read_rows(path: &Path, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 && skip_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| parse_field(field, idx + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a matrix; every row must have the same number of fields.
pub fn read_matrix(path: impl AsRef<Path>, skip_header: bool) -> Result<Array2<f64>> {
    let rows = read_rows(path.as_ref(), skip_header)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty file".into(),
        });
    }
    let ncols = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse {
            line: i + 1,
            msg: format!("expected {ncols} fields, found {}", row.len()),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((flat.len() / ncols, ncols), flat).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })
}

/// Reads a vector stored either as a single column or a single row.
pub fn read_vector(path: impl AsRef<Path>, skip_header: bool) -> Result<Array1<f64>> {
    let rows = read_rows(path.as_ref(), skip_header)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty file".into(),
        });
    }
    if rows.len() == 1 {
        return Ok(Array1::from_vec(rows.into_iter().next().unwrap()));
    }
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 1 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "expected one field per row for a vector, found {}",
                    row.len()
                ),
            });
        }
        values.push(row[0]);
    }
    Ok(Array1::from_vec(values))
}

/// Reads a set of zero-based column indices (one per row or comma-separated).
pub fn read_index_set(path: impl AsRef<Path>, skip_header: bool) -> Result<Vec<usize>> {
    let rows = read_rows(path.as_ref(), skip_header)?;
    let mut indices = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for &v in row {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("index must be a nonnegative integer, got {v}"),
                });
            }
            indices.push(v as usize);
        }
    }
    Ok(indices)
}

fn fmt(v: f64) -> String {
    // 17 significant digits round-trips any f64.
    format!("{v:.16e}")
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &Array2<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_vector(path: impl AsRef<Path>, vector: &Array1<f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for &v in vector {
        writeln!(out, "{}", fmt(v))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = arr2(&[[1.0 / 3.0, -2.5e-13], [7.0f64.sqrt(), 0.0]]);
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path, false).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn vector_accepts_row_or_column_layout() {
        let dir = tempfile::tempdir().unwrap();
        let col = dir.path().join("col.csv");
        std::fs::write(&col, "1.0\n2.0\n3.0\n").unwrap();
        assert_eq!(
            read_vector(&col, false).unwrap().to_vec(),
            vec![1.0, 2.0, 3.0]
        );

        let row = dir.path().join("row.csv");
        std::fs::write(&row, "1.0,2.0,3.0\n").unwrap();
        assert_eq!(
            read_vector(&row, false).unwrap().to_vec(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn header_is_skipped_on_request() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n").unwrap();
        assert!(read_matrix(&path, false).is_err());
        let m = read_matrix(&path, true).unwrap();
        assert_eq!(m, arr2(&[[1.0, 2.0]]));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_matrix(&path, false).is_err());
    }
}
