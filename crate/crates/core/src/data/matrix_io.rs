//! CSV and binary matrix files.
//!
//! CSV: comma separated, `.` decimal point, `\n` line ends, with an optional
//! first line `# rows cols` that is checked against the body.
//!
//! Binary: `PSTB`, `u32` version 1, `u64` rows, `u64` cols, then `rows * cols`
//! little-endian `f64` values in row-major order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"PSTB";
pub const MATRIX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    /// `.csv` / `.txt` are CSV, anything else binary.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                MatrixFormat::Csv
            }
            _ => MatrixFormat::Binary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Binary => "pstb",
        }
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<Matrix> {
    let path = path.as_ref();
    match format {
        MatrixFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text)
        }
        MatrixFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_binary(&bytes)
        }
    }
}

pub fn write_matrix(matrix: &Matrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        MatrixFormat::Csv => to_csv(matrix).into_bytes(),
        MatrixFormat::Binary => encode_binary(matrix),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.trim_start_matches('#').split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Format(format!("header is missing {what}")))?
            .parse()
            .map_err(|_| Error::Format(format!("header {what} is not a count")))
    };
    let rows = next("rows")?;
    let cols = next("cols")?;
    Ok((rows, cols))
}

/// Parses CSV text. Row and column indices in errors are zero-based and
/// count data rows only.
pub fn parse_csv(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().peekable();
    let header = match lines.peek() {
        Some(first) if first.trim_start().starts_with('#') => {
            let h = parse_header(first)?;
            lines.next();
            Some(h)
        }
        _ => None,
    };

    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for line in lines {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: rows,
                col,
                message: format!("{field:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value at row {rows}, column {col}"
                )));
            }
            values.push(value);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Format(format!(
                    "row {rows} has {count} columns, expected {c}"
                )))
            }
            _ => {}
        }
        rows += 1;
    }

    let cols = cols.ok_or_else(|| Error::Format("no data rows".into()))?;
    if let Some((hr, hc)) = header {
        if hr != rows || hc != cols {
            return Err(Error::Format(format!(
                "header declares {hr}x{hc} but body is {rows}x{cols}"
            )));
        }
    }
    Matrix::new(rows, cols, values)
}

/// CSV with a `# rows cols` header and shortest round-trip float formatting.
pub fn to_csv(matrix: &Matrix) -> String {
    let mut out = String::with_capacity(matrix.values().len() * 20);
    let _ = writeln!(out, "# {} {}", matrix.rows(), matrix.cols());
    for row in matrix.iter_rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn encode_binary(matrix: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * matrix.values().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.cols() as u64).to_le_bytes());
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated file: needed {n} bytes at offset {}, {} available",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::Format("element count overflows".into()))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub(crate) fn to_count(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in memory")))
}

pub fn decode_binary(bytes: &[u8]) -> Result<Matrix> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MATRIX_MAGIC {
        return Err(Error::Format("bad magic, expected PSTB".into()));
    }
    let version = r.u32()?;
    if version != MATRIX_VERSION {
        return Err(Error::Format(format!(
            "unsupported matrix version {version}"
        )));
    }
    let rows = to_count(r.u64()?, "rows")?;
    let cols = to_count(r.u64()?, "cols")?;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("rows * cols overflows".into()))?;
    let values = r.f64s(n)?;
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bytes after {rows}x{cols} matrix",
            r.remaining()
        )));
    }
    Matrix::new(rows, cols, values)
}
