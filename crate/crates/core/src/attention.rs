//! Cross-attention bias kernel.
//!
//! Computes `H = softmax(Q * E_c^T / sqrt(F)) * E_c` for a single sequence:
//! the context embeddings serve as both key and value, with no learned
//! projections. Each output row is a convex combination of context rows.

use crate::error::{Error, Result};

/// Dense row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

/// Encoder or predictor hidden states, T x F.
pub type QueryMatrix = DenseMatrix;
/// Context word embeddings, N x F.
pub type ContextEmbedding = DenseMatrix;

impl DenseMatrix {
    pub fn from_flat(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape {
                detail: format!(
                    "{rows}x{cols} matrix needs {} values, got {}",
                    rows * cols,
                    data.len()
                ),
            });
        }
        Ok(DenseMatrix { data, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape {
                    detail: format!("row {i} has {} entries, expected {cols}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::from_flat(data, rows.len(), cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

fn check_dims(q: &QueryMatrix, e_c: &ContextEmbedding) -> Result<()> {
    if e_c.rows() == 0 {
        return Err(Error::Shape {
            detail: "context embedding has no rows".into(),
        });
    }
    if q.cols() == 0 {
        return Err(Error::Shape {
            detail: "query has zero feature dimension".into(),
        });
    }
    if q.cols() != e_c.cols() {
        return Err(Error::Shape {
            detail: format!(
                "query feature dim {} != context feature dim {}",
                q.cols(),
                e_c.cols()
            ),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-stochastic attention weights, T x N: softmax over scaled dot products
/// of each query row with every context row.
pub fn attention_weights(q: &QueryMatrix, e_c: &ContextEmbedding) -> Result<DenseMatrix> {
    check_dims(q, e_c)?;
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let n = e_c.rows();

    let mut weights = Vec::with_capacity(q.rows() * n);
    for t in 0..q.rows() {
        let query = q.row(t);
        let logits: Vec<f64> = (0..n).map(|i| dot(query, e_c.row(i)) * scale).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        weights.extend(exps.iter().map(|&e| e / total));
    }
    DenseMatrix::from_flat(weights, q.rows(), n)
}

/// Biased hidden representation `H`, T x F: attention weights applied to the
/// context rows.
pub fn bias_attention(q: &QueryMatrix, e_c: &ContextEmbedding) -> Result<DenseMatrix> {
    let weights = attention_weights(q, e_c)?;
    let f = e_c.cols();
    let mut out = vec![0.0f64; q.rows() * f];
    for t in 0..q.rows() {
        let w = weights.row(t);
        let h = &mut out[t * f..(t + 1) * f];
        for (i, &wi) in w.iter().enumerate() {
            for (cell, &e) in h.iter_mut().zip(e_c.row(i)) {
                *cell += wi * e;
            }
        }
    }
    DenseMatrix::from_flat(out, q.rows(), f)
}
