//! Plain numeric CSV matrices: one matrix row per line, no header unless
//! requested, decimal reals, no negative values.
//!
//! Values are written with 17 significant digits, which is enough for every
//! `f64` to survive a write/read cycle bit-for-bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_matrix(path: impl AsRef<Path>, header: bool) -> Result<NonnegMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(file, header, path)
}

/// Parses CSV text from any reader; `origin` is only used in error messages.
pub fn parse_matrix<R: Read>(reader: R, header: bool, origin: &Path) -> Result<NonnegMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {c} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: cannot parse {field:?}", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", j + 1)));
            }
            if v < 0.0 {
                return Err(parse_err(line, format!("column {}: negative value {v}", j + 1)));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(0, "no data rows".into()))?;
    NonnegMatrix::new(rows, cols, data)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &NonnegMatrix) -> Result<()> {
    write_array(path, m.view())
}

/// Writes any real matrix (used for signed quantities such as noise).
pub fn write_array(path: impl AsRef<Path>, m: ArrayView2<'_, f64>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    write_rows(&mut out, m.rows().into_iter().map(|r| r.to_vec())).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn write_rows<W, I, R>(out: &mut W, rows: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    for row in rows {
        let line: Vec<String> = row.as_ref().iter().map(|v| format_value(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a signed real matrix; used for files that are not factor matrices.
pub fn read_real_array(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if *cols.get_or_insert(vals.len()) != vals.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "ragged row".into(),
            });
        }
        data.extend(vals);
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data).map_err(|_| Error::DataLength {
        rows,
        cols,
        len: rows * cols,
    })
}
