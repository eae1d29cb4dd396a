//! Plain CSV codec for matrices and label vectors: one row per line,
//! comma-separated, `.` as the decimal separator, no header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::Matrix;

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    parse_matrix(file, path)
}

/// Parses CSV text; `origin` is only used in error messages.
pub fn parse_matrix(reader: impl Read, origin: impl AsRef<Path>) -> Result<Matrix> {
    let origin = origin.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| Error::Csv {
            path: origin.to_owned(),
            source,
        })?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: origin.to_owned(),
                    message: format!("line {line}, field {}: '{field}' is not a number", col + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: origin.to_owned(),
            message: "no rows".into(),
        });
    }
    Matrix::from_rows(&rows).map_err(|e| Error::Parse {
        path: origin.to_owned(),
        message: e.to_string(),
    })
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(matrix_to_csv(m).as_bytes())?;
    Ok(())
}

/// Reads one nonnegative integer label per line.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_owned(),
                message: format!("line {}: '{}' is not a class label", i + 1, l.trim()),
            })
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bit_exactly() {
        let m = Matrix::from_rows(&[[0.1, -2.5e-17], [std::f64::consts::PI, 1.0]]).unwrap();
        let text = matrix_to_csv(&m);
        let back = parse_matrix(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ragged_rows_are_rejected_with_position() {
        let err = parse_matrix("1,2\n3\n".as_bytes(), "bad.csv").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.csv"), "{msg}");
        assert!(msg.contains("line 2") || msg.contains("record 1"), "{msg}");
    }

    #[test]
    fn non_numbers_name_line_and_field() {
        let err = parse_matrix("1, 2\n3, x\n".as_bytes(), "m.csv").unwrap_err();
        assert!(err.to_string().contains("line 2, field 2"), "{err}");
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        write_labels(&p, &[0, 2, 1]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![0, 2, 1]);
    }
}
