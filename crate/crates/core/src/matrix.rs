//! Dense row-major `n × K` matrices.
//!
//! [`Matrix`] carries unconstrained scores (the `F` of the quadratic methods,
//! label targets `Z`). [`DistributionMatrix`] wraps a matrix whose rows are
//! probability vectors and re-checks that invariant on construction.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row sums of a [`DistributionMatrix`] must be within this of one.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Score matrix of the function-estimation methods.
pub type ScoreMatrix = Matrix;

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// One-hot rows: row `i` has a single 1 at column `labels[i]`.
    pub fn one_hot(labels: &[usize], cols: usize) -> Result<Self> {
        let mut m = Self::zeros(labels.len(), cols);
        for (i, &c) in labels.iter().enumerate() {
            if c >= cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: c + 1,
                });
            }
            m[(i, c)] = 1.0;
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, k)]).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm of the entrywise difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Argmax per row, lowest index on ties.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows).map(|i| argmax(self.row(i))).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + k]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + k]
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// `n × K` matrix with every row on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMatrix(Matrix);

impl DistributionMatrix {
    /// Validates entries in `[0, 1]` and row sums within [`SIMPLEX_TOL`].
    pub fn new(m: Matrix) -> Result<Self> {
        Self::with_tolerance(m, SIMPLEX_TOL)
    }

    pub fn with_tolerance(m: Matrix, tol: f64) -> Result<Self> {
        if m.cols() < 2 {
            return Err(Error::InvalidParameter(
                "distributions need at least two classes",
            ));
        }
        for i in 0..m.rows() {
            let row = m.row(i);
            let sum: f64 = row.iter().sum();
            let in_range = row.iter().all(|&v| (-tol..=1.0 + tol).contains(&v));
            if !in_range || (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(Self(m))
    }

    /// Validates with `tol`, then clips to `[0, 1]` and rescales rows to sum to one.
    pub fn renormalized(mut m: Matrix, tol: f64) -> Result<Self> {
        Self::with_tolerance(m.clone(), tol)?;
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            for v in row.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
            let s: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        Ok(Self(m))
    }

    /// Rows that have been built to be exact simplex points.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(Self::new(m.clone()).is_ok());
        Self(m)
    }

    pub fn one_hot(labels: &[usize], k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(
                "distributions need at least two classes",
            ));
        }
        Ok(Self(Matrix::one_hot(labels, k)?))
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Self(Matrix::from_vec(n, k, vec![1.0 / k as f64; n * k]).unwrap())
    }

    /// Maps scores to distributions for reporting: negatives clipped to zero,
    /// rows rescaled, all-zero rows become uniform.
    pub fn from_scores(scores: &Matrix) -> Self {
        let k = scores.cols();
        let mut m = scores.clone();
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            for v in row.iter_mut() {
                if !(*v > 0.0) {
                    *v = 0.0;
                }
            }
            let s: f64 = row.iter().sum();
            if s > 0.0 && s.is_finite() {
                for v in row.iter_mut() {
                    *v /= s;
                }
            } else {
                row.fill(1.0 / k as f64);
            }
        }
        Self(m)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn k(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Argmax label per node, lowest class index on ties.
    pub fn derived_labels(&self) -> Vec<usize> {
        self.0.argmax_rows()
    }
}

impl AsRef<Matrix> for DistributionMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}
