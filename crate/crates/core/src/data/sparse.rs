//! Compressed sparse rows and the `label idx:val ...` text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result, Tensor};

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row and all values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from per-row `(index, value)` pairs in any order.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(i, _)| i);
            for (k, &(i, v)) in row.iter().enumerate() {
                if i >= cols {
                    return Err(Error::Range(format!("row {r}: index {i} >= {cols}")));
                }
                if k > 0 && row[k - 1].0 == i {
                    return Err(Error::Format(format!("row {r}: duplicate index {i}")));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("sparse value"));
                }
                indices.push(i);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(idx.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &r in idx {
            if r >= self.rows() {
                return Err(Error::Range(format!("row {r} out of {}", self.rows())));
            }
            let (ix, vals) = self.row(r);
            indices.extend_from_slice(ix);
            values.extend_from_slice(vals);
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            cols: self.cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn to_dense(&self) -> Result<Tensor> {
        let mut data = vec![0.0; self.rows() * self.cols];
        for r in 0..self.rows() {
            let (ix, vals) = self.row(r);
            for (&i, &v) in ix.iter().zip(vals) {
                data[r * self.cols + i] = v;
            }
        }
        Tensor::from_vec(&[self.rows(), self.cols], data)
    }

    /// Row-wise dot products with a dense vector of length `cols`.
    pub fn dot(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.cols {
            return Err(Error::ShapeMismatch {
                left: vec![self.rows(), self.cols],
                right: vec![w.len()],
            });
        }
        Ok((0..self.rows())
            .map(|r| {
                let (ix, vals) = self.row(r);
                ix.iter().zip(vals).map(|(&i, &v)| v * w[i]).sum()
            })
            .collect())
    }

    /// Product with a dense `[cols×k]` matrix.
    pub fn matmul(&self, w: &Tensor) -> Result<Tensor> {
        let k = match w.shape() {
            [d, k] if *d == self.cols => *k,
            _ => {
                return Err(Error::ShapeMismatch {
                    left: vec![self.rows(), self.cols],
                    right: w.shape().to_vec(),
                })
            }
        };
        let mut out = vec![0.0; self.rows() * k];
        for r in 0..self.rows() {
            let (ix, vals) = self.row(r);
            let dst = &mut out[r * k..(r + 1) * k];
            for (&i, &v) in ix.iter().zip(vals) {
                for (o, &wv) in dst.iter_mut().zip(w.row(i)) {
                    *o += v * wv;
                }
            }
        }
        Tensor::from_vec(&[self.rows(), k], out)
    }

    /// Applies `f(row, position_in_row, value)` to every stored value.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let mut values = self.values.clone();
        for r in 0..self.rows() {
            for (k, pos) in (self.indptr[r]..self.indptr[r + 1]).enumerate() {
                values[pos] = f(r, k, values[pos]);
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse value"));
        }
        Ok(SparseMatrix {
            values,
            ..self.clone()
        })
    }
}

/// Parses `label idx:val idx:val ...` lines with 0-based indices `< d`.
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_sparse_text(text: &str, d: usize) -> Result<(SparseMatrix, Vec<usize>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let label = match label {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label {other:?} is not 0 or 1"),
                })
            }
        };
        let mut row = Vec::new();
        for tok in tokens {
            let bad = |msg: String| Error::Parse { line: line_no, msg };
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("token {tok:?} is not idx:val")))?;
            let i: usize = i
                .parse()
                .map_err(|_| bad(format!("bad index in {tok:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| bad(format!("bad value in {tok:?}")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value in {tok:?}")));
            }
            if i >= d {
                return Err(Error::Range(format!(
                    "line {line_no}: index {i} outside vocabulary of {d}"
                )));
            }
            row.push((i, v));
        }
        row.sort_by_key(|&(i, _)| i);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate index {}", w[0].0),
            });
        }
        rows.push(row);
        labels.push(label);
    }
    Ok((SparseMatrix::from_rows(d, rows)?, labels))
}

pub fn load_sparse_text(path: &Path, d: usize) -> Result<(SparseMatrix, Vec<usize>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sparse_text(&text, d)
}

/// Renders rows in the text format; values use shortest round-trip form.
pub fn write_sparse_text(x: &SparseMatrix, labels: &[usize]) -> Result<String> {
    if labels.len() != x.rows() {
        return Err(Error::Length(format!(
            "{} rows but {} labels",
            x.rows(),
            labels.len()
        )));
    }
    let mut out = String::new();
    for (r, label) in labels.iter().enumerate() {
        out.push_str(&label.to_string());
        let (ix, vals) = x.row(r);
        for (i, v) in ix.iter().zip(vals) {
            let _ = write!(out, " {i}:{v:?}");
        }
        out.push('\n');
    }
    Ok(out)
}
