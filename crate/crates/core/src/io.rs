//! Plain-text matrix files: a `rows cols` header followed by one line per row,
//! entries separated by single spaces and written with 17 significant digits.

use std::fs;
use std::path::Path;

use crate::error::{DmdError, Result};
use crate::RealMatrix;

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(DmdError::ParseError(msg.into()))
}

/// Parse a matrix from the textual format.
pub fn parse_matrix(text: &str) -> Result<RealMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = match lines.next() {
        Some(h) => h,
        None => return parse_err("empty matrix file"),
    };
    let dims: Vec<&str> = header.split_whitespace().collect();
    let (rows, cols) = match dims.as_slice() {
        [r, c] => match (r.parse::<usize>(), c.parse::<usize>()) {
            (Ok(r), Ok(c)) => (r, c),
            _ => return parse_err(format!("malformed header `{header}`")),
        },
        _ => return parse_err(format!("malformed header `{header}`")),
    };

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        seen += 1;
        if seen > rows {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(v) => data.push(v),
                Err(_) => return parse_err(format!("row {}: bad number `{tok}`", i + 1)),
            }
        }
        if data.len() - before != cols {
            return parse_err(format!("row {} has {} entries, expected {cols}", i + 1, data.len() - before));
        }
    }
    if seen != rows {
        return parse_err(format!("header declares {rows} rows but {seen} follow"));
    }
    Ok(RealMatrix::from_row_slice(rows, cols, &data))
}

/// Render a matrix in the textual format.
pub fn format_matrix(m: &RealMatrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<RealMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn save_matrix(m: &RealMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}
