//! Row-compressed feature matrix with per-column provenance.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Category;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub category: Category,
    pub name: String,
}

impl Column {
    pub fn new(category: Category, name: impl Into<String>) -> Self {
        Column { category, name: name.into() }
    }

    /// CSV header form: `segment.name.index`.
    pub fn header(&self, index: usize) -> String {
        format!("{}.{}.{}", self.category.name(), self.name, index)
    }
}

/// SHA-256 over the column layout; models refuse inputs with a different fingerprint.
pub fn fingerprint(columns: &[Column]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.category.name().as_bytes());
        h.update(b".");
        h.update(c.name.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..16])
}

/// A borrowed sparse row.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl SparseRow<'_> {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(self.values)
            .map(|(&i, &v)| dense[i as usize] * v)
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `dense += scale * self`
    pub fn axpy(&self, scale: f64, dense: &mut [f64]) {
        for (&i, &v) in self.indices.iter().zip(self.values) {
            dense[i as usize] += scale * v;
        }
    }

    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&(col as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self, n_cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cols];
        for (&i, &v) in self.indices.iter().zip(self.values) {
            out[i as usize] = v;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<Column>,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Column>) -> Self {
        FeatureMatrix { columns, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }

    /// Build from dense rows; zeros are not stored.
    pub fn from_dense(columns: Vec<Column>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = FeatureMatrix::new(columns);
        for r in rows {
            m.push_dense(r)?;
        }
        Ok(m)
    }

    /// Anonymous columns, all in the given category. Handy for tests and synthetic data.
    pub fn from_dense_anonymous(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let cols = (0..d).map(|i| Column::new(Category::Text, format!("x{i}"))).collect();
        Self::from_dense(cols, rows)
    }

    pub fn push_dense(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols() {
            return Err(Error::Dimension { expected: self.n_cols(), actual: row.len() });
        }
        for (i, &v) in row.iter().enumerate() {
            if v != 0.0 {
                self.indices.push(i as u32);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
        Ok(())
    }

    /// Append a row given as (column, value) pairs sorted by column.
    pub fn push_sparse(&mut self, entries: &[(u32, f64)]) -> Result<()> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::invalid("sparse row entries must be strictly increasing"));
            }
        }
        if let Some(&(last, _)) = entries.last() {
            if last as usize >= self.n_cols() {
                return Err(Error::Dimension { expected: self.n_cols(), actual: last as usize + 1 });
            }
        }
        for &(i, v) in entries {
            if v != 0.0 {
                self.indices.push(i);
                self.values.push(v);
            }
        }
        self.indptr.push(self.indices.len());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.columns)
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow { indices: &self.indices[a..b], values: &self.values[a..b] }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> + '_ {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.row(row).get(col)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut m = FeatureMatrix::new(self.columns.clone());
        for &r in rows {
            let row = self.row(r);
            m.indices.extend_from_slice(row.indices);
            m.values.extend_from_slice(row.values);
            m.indptr.push(m.indices.len());
        }
        m
    }

    /// Keep the listed columns (must be increasing), renumbering them densely.
    pub fn select_columns(&self, keep: &[usize]) -> FeatureMatrix {
        let mut remap = vec![u32::MAX; self.n_cols()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut m = FeatureMatrix::new(keep.iter().map(|&c| self.columns[c].clone()).collect());
        for row in self.rows() {
            for (&i, &v) in row.indices.iter().zip(row.values) {
                let j = remap[i as usize];
                if j != u32::MAX {
                    m.indices.push(j);
                    m.values.push(v);
                }
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn drop_category(&self, category: Category) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&c| self.columns[c].category != category)
            .collect();
        self.select_columns(&keep)
    }

    pub fn category_width(&self, category: Category) -> usize {
        self.columns.iter().filter(|c| c.category == category).count()
    }

    /// Stack rows of `other` (same columns) under `self`.
    pub fn vstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.columns != other.columns {
            return Err(Error::invalid("cannot stack matrices with different columns"));
        }
        let mut m = self.clone();
        let offset = m.indices.len();
        m.indices.extend_from_slice(&other.indices);
        m.values.extend_from_slice(&other.values);
        m.indptr.extend(other.indptr[1..].iter().map(|p| p + offset));
        Ok(m)
    }

    /// Population variance of every column.
    pub fn column_variances(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        let mut sum = vec![0.0; self.n_cols()];
        let mut sq = vec![0.0; self.n_cols()];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            sum[i as usize] += v;
            sq[i as usize] += v * v;
        }
        if n == 0.0 {
            return vec![0.0; self.n_cols()];
        }
        sum.iter()
            .zip(&sq)
            .map(|(s, q)| {
                let mean = s / n;
                (q / n - mean * mean).max(0.0)
            })
            .collect()
    }

    /// Column-major copy: for every column, the (row, value) pairs of its nonzeros.
    pub fn to_csc(&self) -> Vec<Vec<(u32, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols()];
        for (r, row) in self.rows().enumerate() {
            for (&i, &v) in row.indices.iter().zip(row.values) {
                cols[i as usize].push((r as u32, v));
            }
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, labels: Option<&[u8]>, out: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(out);
        let io = |e| Error::io("<csv>", e);
        let mut header: Vec<String> = self.columns.iter().enumerate().map(|(i, c)| c.header(i)).collect();
        if labels.is_some() {
            header.push("label".into());
        }
        writeln!(w, "{}", header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",")).map_err(io)?;
        for (r, row) in self.rows().enumerate() {
            let dense = row.to_dense(self.n_cols());
            let mut fields: Vec<String> = dense.iter().map(|v| format_value(*v)).collect();
            if let Some(l) = labels {
                fields.push(l[r].to_string());
            }
            writeln!(w, "{}", fields.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Columns whose population variance exceeds `threshold`. Word-embedding columns are always kept.
pub fn variance_select(matrix: &FeatureMatrix, threshold: f64) -> Vec<usize> {
    matrix
        .column_variances()
        .iter()
        .enumerate()
        .filter(|&(c, &var)| var > threshold || matrix.columns()[c].category == Category::Embeddings)
        .map(|(c, _)| c)
        .collect()
}
