//! CSV reading and writing for matrices: comma-separated values, one matrix
//! row per line, with an optional single leading header line starting `#`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Formats a float with full round-trip precision (17 significant digits).
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Formats a float with `sig` significant digits, `%g`-style: plain decimal
/// for moderate exponents, scientific otherwise.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if exp < -4 || exp >= sig as i32 {
        return sci;
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    let plain = format!("{x:.decimals$}");
    if plain.contains('.') {
        plain.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        plain
    }
}

/// Reads a matrix from CSV text.
pub fn read_matrix<R: BufRead>(reader: R) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if idx == 0 && trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::CsvParse {
                    line: idx + 1,
                    msg: format!("cannot parse '{}' as a number", tok.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::CsvParse {
                    line: idx + 1,
                    msg: format!("expected {w} columns, found {}", row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::CsvParse {
            line: 0,
            msg: "no data rows".to_string(),
        });
    }
    Matrix::from_rows(&rows)
}

pub fn read_matrix_path(path: &Path) -> Result<Matrix> {
    let file = std::fs::File::open(path)?;
    read_matrix(BufReader::new(file))
}

/// Writes a matrix as CSV with 17 significant digits per entry.
pub fn write_matrix<W: Write>(mut w: W, m: &Matrix, header: Option<&str>) -> Result<()> {
    if let Some(h) = header {
        writeln!(w, "# {h}")?;
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_full(m.get(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_path(path: &Path, m: &Matrix, header: Option<&str>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(file), m, header)
}
