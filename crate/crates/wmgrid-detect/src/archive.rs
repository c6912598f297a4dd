//! Plain-text matrix archive for auditing reduced models.
//!
//! ```text
//! matrix a 2 2
//! 1e0 0e0
//! 0e0 1e0
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Values use the shortest
//! round-trip representation, so an archive reads back bit-exactly.

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::reduced::ReducedModel;
use crate::DetectError;

pub fn write_matrices(header: &str, matrices: &[(&str, &DMatrix<f64>)]) -> String {
    let mut s = String::new();
    for line in header.lines() {
        let _ = writeln!(s, "# {line}");
    }
    for (name, m) in matrices {
        let _ = writeln!(s, "matrix {name} {} {}", m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

fn bad(line: usize, msg: impl std::fmt::Display) -> DetectError {
    DetectError::Archive(format!("line {line}: {msg}"))
}

pub fn read_matrices(text: &str) -> Result<Vec<(String, DMatrix<f64>)>, DetectError> {
    let mut out = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    while let Some((no, head)) = lines.next() {
        let parts: Vec<&str> = head.split_whitespace().collect();
        let [kw, name, rows, cols] = parts[..] else {
            return Err(bad(no, "expected 'matrix <name> <rows> <cols>'"));
        };
        if kw != "matrix" {
            return Err(bad(no, format!("expected 'matrix', found '{kw}'")));
        }
        let dim = |s: &str| s.parse::<usize>().map_err(|_| bad(no, format!("'{s}' is not a dimension")));
        let (rows, cols) = (dim(rows)?, dim(cols)?);
        if rows.checked_mul(cols).is_none_or(|n| n > 1 << 24) {
            return Err(bad(no, "matrix too large"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rno, row) = lines.next().ok_or_else(|| bad(no, format!("matrix {name} ends early")))?;
            let vals = row
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad(rno, format!("'{v}' is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != cols {
                return Err(bad(rno, format!("expected {cols} values, found {}", vals.len())));
            }
            data.extend(vals);
        }
        out.push((name.to_string(), DMatrix::from_row_slice(rows, cols, &data)));
    }
    Ok(out)
}

impl ReducedModel {
    /// Archive of `a, b_ref, b_load, c, d_load, r, v` and the basis into interconnection coordinates.
    pub fn to_archive(&self) -> String {
        let header = format!(
            "reduced model of DGU {}: order {} of {}",
            self.dgu + 1,
            self.order(),
            self.full_order
        );
        write_matrices(
            &header,
            &[
                ("a", &self.a),
                ("b_ref", &self.b_ref),
                ("b_load", &self.b_load),
                ("c", &self.c),
                ("d_load", &self.d_load),
                ("r", &self.r),
                ("v", &self.v),
                ("basis", &self.basis),
            ],
        )
    }
}
