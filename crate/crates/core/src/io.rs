//! Plain-text matrix and mask files.
//!
//! Matrix file:
//!
//! ```text
//! pcpmat 1
//! <rows> <cols>
//! <rows*cols whitespace-separated values, row-major>
//! ```
//!
//! Mask file:
//!
//! ```text
//! pcpmask 1
//! <rows> <cols> <count>
//! <i> <j>        (count lines, zero-based)
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every f64.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{PcpError, Result};
use crate::matrix::{DenseMatrix, SupportMask};

const MATRIX_MAGIC: &str = "pcpmat 1";
const MASK_MAGIC: &str = "pcpmask 1";

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 25 + 32);
    let _ = writeln!(out, "{MATRIX_MAGIC}");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let mut first = true;
        for &v in m.row(i) {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Tokens of `text` tagged with their one-based line numbers.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .flat_map(|(ln, line)| line.split_whitespace().map(move |t| (ln + 1, t)))
}

fn expect_magic(text: &str, magic: &str) -> Result<()> {
    match text.lines().next() {
        Some(line) if line.trim() == magic => Ok(()),
        Some(line) => Err(PcpError::Parse {
            line: 1,
            msg: format!("expected header `{magic}`, found `{}`", line.trim()),
        }),
        None => Err(PcpError::Parse {
            line: 1,
            msg: "empty file".into(),
        }),
    }
}

fn parse_count(tok: Option<(usize, &str)>, what: &str, last_line: usize) -> Result<usize> {
    let (line, t) = tok.ok_or_else(|| PcpError::Parse {
        line: last_line,
        msg: format!("missing {what}"),
    })?;
    t.parse().map_err(|_| PcpError::Parse {
        line,
        msg: format!("invalid {what} `{t}`"),
    })
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    expect_magic(text, MATRIX_MAGIC)?;
    let last_line = text.lines().count().max(1);
    let mut toks = tokens(text).skip_while(|&(ln, _)| ln == 1);
    let rows = parse_count(toks.next(), "row count", 2)?;
    let cols = parse_count(toks.next(), "column count", 2)?;
    let expected = rows * cols;
    let mut data = Vec::with_capacity(expected);
    for (line, t) in toks {
        if data.len() == expected {
            return Err(PcpError::Parse {
                line,
                msg: format!("more than the {expected} values declared by the header"),
            });
        }
        let v: f64 = t.parse().map_err(|_| PcpError::Parse {
            line,
            msg: format!("non-numeric token `{t}`"),
        })?;
        if !v.is_finite() {
            return Err(PcpError::Parse {
                line,
                msg: format!("non-finite value `{t}`"),
            });
        }
        data.push(v);
    }
    if data.len() != expected {
        return Err(PcpError::Parse {
            line: last_line,
            msg: format!(
                "header declares {rows}x{cols} = {expected} values but the body holds {}",
                data.len()
            ),
        });
    }
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn format_mask(mask: &SupportMask) -> String {
    let mut out = String::with_capacity(mask.len() * 12 + 32);
    let _ = writeln!(out, "{MASK_MAGIC}");
    let _ = writeln!(out, "{} {} {}", mask.rows(), mask.cols(), mask.len());
    for &(i, j) in mask.entries() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_mask(path: impl AsRef<Path>, mask: &SupportMask) -> Result<()> {
    fs::write(path, format_mask(mask))?;
    Ok(())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<SupportMask> {
    parse_mask(&fs::read_to_string(path)?)
}

pub fn parse_mask(text: &str) -> Result<SupportMask> {
    expect_magic(text, MASK_MAGIC)?;
    let mut lines = text.lines().enumerate().skip(1).map(|(i, l)| (i + 1, l));
    let (hline, header) = lines.next().ok_or_else(|| PcpError::Parse {
        line: 2,
        msg: "missing shape line".into(),
    })?;
    let mut h = header.split_whitespace().map(|t| (hline, t));
    let rows = parse_count(h.next(), "row count", hline)?;
    let cols = parse_count(h.next(), "column count", hline)?;
    let count = parse_count(h.next(), "entry count", hline)?;
    if let Some((_, extra)) = h.next() {
        return Err(PcpError::Parse {
            line: hline,
            msg: format!("unexpected token `{extra}` on shape line"),
        });
    }

    let mut entries = Vec::with_capacity(count);
    let mut seen = vec![false; rows * cols];
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        let mut t = text.split_whitespace().map(|tok| (line, tok));
        let i = parse_count(t.next(), "row index", line)?;
        let j = parse_count(t.next(), "column index", line)?;
        if t.next().is_some() {
            return Err(PcpError::Parse {
                line,
                msg: "expected exactly two indices".into(),
            });
        }
        if i >= rows || j >= cols {
            return Err(PcpError::Parse {
                line,
                msg: format!("index ({i}, {j}) outside a {rows}x{cols} mask"),
            });
        }
        if std::mem::replace(&mut seen[i * cols + j], true) {
            return Err(PcpError::Parse {
                line,
                msg: format!("duplicate index ({i}, {j})"),
            });
        }
        entries.push((i, j));
    }
    if entries.len() != count {
        return Err(PcpError::Parse {
            line: hline,
            msg: format!("header declares {count} entries but {} were listed", entries.len()),
        });
    }
    SupportMask::new(rows, cols, entries)
}
