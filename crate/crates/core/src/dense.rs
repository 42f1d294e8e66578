//! Dense reference solutions.
//!
//! These build the full `n × n` operators and solve them by Gaussian
//! elimination. They exist to check the iterative solvers on small graphs and
//! refuse anything above [`ORACLE_MAX_NODES`].

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, SparseWeightedGraph};
use crate::matrix::Matrix;
use crate::quadratic::QuadraticConfig;

pub const ORACLE_MAX_NODES: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    /// Solves `A X = B` for square `A` with partial pivoting.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if self.m != n || b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.rows(),
            });
        }
        let k = b.cols();
        let mut a = self.data.clone();
        let mut x = b.as_slice().to_vec();
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap();
            if a[pivot * n + col].abs() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot * n + c);
                }
                for c in 0..k {
                    x.swap(col * k + c, pivot * k + c);
                }
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                for c in 0..k {
                    x[r * k + c] -= f * x[col * k + c];
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[col * n + col];
            for c in 0..k {
                let mut s = x[col * k + c];
                for j in col + 1..n {
                    s -= a[col * n + j] * x[j * k + c];
                }
                x[col * k + c] = s / p;
            }
        }
        Matrix::from_vec(n, k, x)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.m + j]
    }
}

fn check_cap(g: &SparseWeightedGraph) -> Result<()> {
    if g.n() > ORACLE_MAX_NODES {
        return Err(Error::InvalidParameter(
            "graph too large for the dense oracle",
        ));
    }
    Ok(())
}

/// Dense `D^(-1/2) W D^(-1/2)` (or `D⁻¹W` when `row_normalized`).
fn dense_propagation(g: &SparseWeightedGraph, row_normalized: bool) -> DenseMatrix {
    let n = g.n();
    let inv = |d: f64| if d > 0.0 { 1.0 / d } else { 0.0 };
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for (j, w) in g.neighbors(i) {
            s[(i, j)] = if row_normalized {
                inv(g.degree(i)) * w
            } else {
                w * inv(libm::sqrt(g.degree(i))) * inv(libm::sqrt(g.degree(j)))
            };
        }
    }
    s
}

/// Dense Laplacian of either kind.
pub fn dense_laplacian(g: &SparseWeightedGraph, kind: LaplacianKind) -> DenseMatrix {
    let n = g.n();
    match kind {
        LaplacianKind::Unnormalized => {
            let mut l = DenseMatrix::zeros(n, n);
            for i in 0..n {
                l[(i, i)] = g.degree(i);
                for (j, w) in g.neighbors(i) {
                    l[(i, j)] -= w;
                }
            }
            l
        }
        LaplacianKind::Normalized => {
            let mut l = dense_propagation(g, false);
            for v in l.data.iter_mut() {
                *v = -*v;
            }
            for i in 0..n {
                if g.degree(i) > 0.0 {
                    l[(i, i)] += 1.0;
                }
            }
            l
        }
    }
}

/// `F = C (L + C H)⁻¹ H Z`, column by column. Requires finite `H`.
pub fn closed_form_oracle(
    g: &SparseWeightedGraph,
    cfg: &QuadraticConfig,
    z: &Matrix,
) -> Result<Matrix> {
    check_cap(g)?;
    let n = g.n();
    if z.rows() != n || cfg.error_weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.rows(),
        });
    }
    if cfg.error_weights.iter().any(|h| !h.is_finite()) {
        return Err(Error::InvalidParameter(
            "dense oracle needs finite error weights",
        ));
    }
    let mut a = dense_laplacian(g, cfg.laplacian);
    let mut rhs = z.clone();
    for i in 0..n {
        let h = cfg.error_weights[i];
        a[(i, i)] += cfg.c * h;
        rhs.row_mut(i).iter_mut().for_each(|v| *v *= cfg.c * h);
    }
    a.solve(&rhs)
}

/// `F = (I − (I − Λ) D⁻¹ W)⁻¹ Λ Z`.
pub fn gfhf_oracle(g: &SparseWeightedGraph, lambda: &[f64], z: &Matrix) -> Result<Matrix> {
    check_cap(g)?;
    let n = g.n();
    let p = dense_propagation(g, true);
    let mut a = DenseMatrix::identity(n);
    let mut rhs = z.clone();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= (1.0 - lambda[i]) * p[(i, j)];
        }
        rhs.row_mut(i).iter_mut().for_each(|v| *v *= lambda[i]);
    }
    a.solve(&rhs)
}

/// `F = (1 − γ)(I − γ S)⁻¹ Λ Z` with `γ = 1/(1 + C)` and `S = D^(-1/2) W D^(-1/2)`.
pub fn lgc_oracle(g: &SparseWeightedGraph, lambda: &[f64], z: &Matrix, c: f64) -> Result<Matrix> {
    check_cap(g)?;
    let n = g.n();
    let gamma = 1.0 / (1.0 + c);
    let s = dense_propagation(g, false);
    let mut a = DenseMatrix::identity(n);
    let mut rhs = z.clone();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= gamma * s[(i, j)];
        }
        rhs.row_mut(i)
            .iter_mut()
            .for_each(|v| *v *= (1.0 - gamma) * lambda[i]);
    }
    a.solve(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 0)] = 0.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        let b = Matrix::from_rows(&[&[4.0], &[3.0]]).unwrap();
        let x = a.solve(&b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((x[(1, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::zeros(2, 2);
        assert_eq!(a.solve(&Matrix::zeros(2, 1)), Err(Error::Singular));
    }

    #[test]
    fn two_node_path_by_hand() {
        // L_un = [[1,-1],[-1,1]], C = 1, H = I:
        // (L + I) F = Z  =>  [[2,-1],[-1,2]] F = Z, inverse = [[2,1],[1,2]]/3.
        let g = SparseWeightedGraph::build(2, &[(0, 1, 1.0)]).unwrap();
        let cfg = QuadraticConfig::new(1.0, LaplacianKind::Unnormalized, vec![1.0, 1.0]);
        let z = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let f = closed_form_oracle(&g, &cfg, &z).unwrap();
        let expect = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for (a, b) in f.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_when_no_edges() {
        let g = SparseWeightedGraph::build(3, &[]).unwrap();
        let cfg = QuadraticConfig::new(0.7, LaplacianKind::Normalized, vec![2.0; 3]);
        let z = Matrix::from_rows(&[&[0.1, 0.9], &[0.5, 0.5], &[0.3, 0.2]]).unwrap();
        let f = closed_form_oracle(&g, &cfg, &z).unwrap();
        assert!(f.max_abs_diff(&z) < 1e-15);
    }
}
