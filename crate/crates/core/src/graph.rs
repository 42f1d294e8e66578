//! Immutable sparse symmetric weighted graph and matrix-free graph operators.
//!
//! Rows of isolated nodes (zero degree) in `D⁻¹` and `D^(-1/2)` are taken to
//! be zero, so every operator maps an isolated row to zero (or, for the
//! Laplacians, to the identity/zero part alone).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `L = D − W`
    Unnormalized,
    /// `L = D^(-1/2) (D − W) D^(-1/2)`, i.e. `I − D^(-1/2) W D^(-1/2)` on
    /// non-isolated rows and zero on isolated ones.
    Normalized,
}

/// Construction diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub self_loops_dropped: usize,
    pub input_edges: usize,
}

/// Symmetric nonnegative weight matrix in CSR order with cached degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl SparseWeightedGraph {
    /// Builds a graph on `n` nodes from directed or undirected triples.
    ///
    /// Every triple `(u, v, w)` contributes `w` to both `w_uv` and `w_vu`, so a
    /// pair listed in both directions ends up with the summed weight.
    /// Self-loops are dropped and counted; pairs whose total weight is zero
    /// are not stored.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<(Self, BuildReport)> {
        let mut report = BuildReport {
            input_edges: edges.len(),
            ..Default::default()
        };
        let mut directed: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v, w) in edges {
            for index in [u, v] {
                if index >= n {
                    return Err(Error::NodeOutOfRange { index, n });
                }
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeight { u, v, weight: w });
            }
            if u == v {
                report.self_loops_dropped += 1;
                continue;
            }
            directed.push((u, v, w));
            directed.push((v, u, w));
        }
        // Stable sort keeps input order inside a (u, v) bucket so sums are reproducible.
        directed.sort_by_key(|e| (e.0, e.1));

        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut idx = 0;
        for u in 0..n {
            while idx < directed.len() && directed[idx].0 == u {
                let v = directed[idx].1;
                let mut w = 0.0;
                while idx < directed.len() && directed[idx].0 == u && directed[idx].1 == v {
                    w += directed[idx].2;
                    idx += 1;
                }
                if w > 0.0 {
                    targets.push(v);
                    weights.push(w);
                }
            }
            offsets[u + 1] = targets.len();
        }
        let degrees = (0..n)
            .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();
        Ok((
            Self {
                offsets,
                targets,
                weights,
                degrees,
            },
            report,
        ))
    }

    /// Convenience wrapper discarding the build report.
    pub fn build(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::from_edges(n, edges).map(|(g, _)| g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Number of stored directed entries (twice the edge count).
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    #[inline]
    pub fn is_isolated(&self, i: usize) -> bool {
        self.degrees[i] == 0.0
    }

    /// CSR entry range of row `i`.
    #[inline]
    pub fn entry_range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    #[inline]
    pub fn entry(&self, e: usize) -> (usize, f64) {
        (self.targets[e], self.weights[e])
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.entry_range(i);
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// Stored weight `w_ij`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.entry_range(i);
        match self.targets[r.clone()].binary_search(&j) {
            Ok(p) => self.weights[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// All undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| i < j)
                .map(move |(j, w)| (i, j, w))
        })
    }

    #[inline]
    pub(crate) fn inv_degree(&self, i: usize) -> f64 {
        let d = self.degrees[i];
        if d > 0.0 {
            1.0 / d
        } else {
            0.0
        }
    }

    #[inline]
    pub(crate) fn inv_sqrt_degree(&self, i: usize) -> f64 {
        let d = self.degrees[i];
        if d > 0.0 {
            1.0 / libm::sqrt(d)
        } else {
            0.0
        }
    }

    fn check_rows(&self, m: &Matrix) -> Result<()> {
        if m.rows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: m.rows(),
            });
        }
        Ok(())
    }

    /// `W · M`.
    pub fn apply_adjacency(&self, m: &Matrix) -> Result<Matrix> {
        self.check_rows(m)?;
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for i in 0..self.n() {
            let acc = out.row_mut(i);
            for (j, w) in self.neighbors(i) {
                for (a, x) in acc.iter_mut().zip(m.row(j)) {
                    *a += w * x;
                }
            }
        }
        Ok(out)
    }

    /// `D⁻¹ W · M`.
    pub fn apply_row_normalized(&self, m: &Matrix) -> Result<Matrix> {
        let mut out = self.apply_adjacency(m)?;
        for i in 0..self.n() {
            let s = self.inv_degree(i);
            out.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        Ok(out)
    }

    /// `D^(-1/2) W D^(-1/2) · M`.
    pub fn apply_symmetric_normalized(&self, m: &Matrix) -> Result<Matrix> {
        self.check_rows(m)?;
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for i in 0..self.n() {
            let si = self.inv_sqrt_degree(i);
            if si == 0.0 {
                continue;
            }
            let acc = out.row_mut(i);
            for (j, w) in self.neighbors(i) {
                let s = si * w * self.inv_sqrt_degree(j);
                for (a, x) in acc.iter_mut().zip(m.row(j)) {
                    *a += s * x;
                }
            }
        }
        Ok(out)
    }

    /// `L · M` for either Laplacian.
    pub fn apply_laplacian(&self, kind: LaplacianKind, m: &Matrix) -> Result<Matrix> {
        let mut out = match kind {
            LaplacianKind::Unnormalized => self.apply_adjacency(m)?,
            LaplacianKind::Normalized => self.apply_symmetric_normalized(m)?,
        };
        for i in 0..self.n() {
            let diag = self.laplacian_diag(kind, i);
            for (o, x) in out.row_mut(i).iter_mut().zip(m.row(i)) {
                *o = diag * x - *o;
            }
        }
        Ok(out)
    }

    /// Diagonal entry of the chosen Laplacian at node `i`.
    #[inline]
    pub(crate) fn laplacian_diag(&self, kind: LaplacianKind, i: usize) -> f64 {
        match kind {
            LaplacianKind::Unnormalized => self.degrees[i],
            LaplacianKind::Normalized if self.degrees[i] > 0.0 => 1.0,
            LaplacianKind::Normalized => 0.0,
        }
    }

    /// Off-diagonal magnitude `−L_ij` for the stored entry `e` of row `i`.
    #[inline]
    pub(crate) fn laplacian_offdiag(&self, kind: LaplacianKind, i: usize, e: usize) -> f64 {
        let (j, w) = self.entry(e);
        match kind {
            LaplacianKind::Unnormalized => w,
            LaplacianKind::Normalized => w * self.inv_sqrt_degree(i) * self.inv_sqrt_degree(j),
        }
    }

    /// Per-column quadratic form `Σ_k M_kᵀ L M_k`.
    pub fn laplacian_energy(&self, kind: LaplacianKind, m: &Matrix) -> Result<f64> {
        let lm = self.apply_laplacian(kind, m)?;
        Ok(lm
            .as_slice()
            .iter()
            .zip(m.as_slice())
            .map(|(a, b)| a * b)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use proptest::prelude::*;

    fn path3() -> SparseWeightedGraph {
        SparseWeightedGraph::build(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn mutual_entries_sum() {
        let g = SparseWeightedGraph::build(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(g.weight(0, 1), 2.0);
        assert_eq!(g.weight(1, 0), 2.0);
        assert_eq!(g.degrees(), &[2.0, 2.0]);
    }

    #[test]
    fn empty_graph() {
        let g = SparseWeightedGraph::build(3, &[]).unwrap();
        assert_eq!(g.degrees(), &[0.0, 0.0, 0.0]);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn path_degrees() {
        assert_eq!(path3().degrees(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let (g, r) = SparseWeightedGraph::from_edges(2, &[(0, 0, 3.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(r.self_loops_dropped, 1);
        assert_eq!(g.degrees(), &[1.0, 1.0]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            SparseWeightedGraph::build(2, &[(0, 2, 1.0)]),
            Err(Error::NodeOutOfRange { index: 2, n: 2 })
        );
        assert!(matches!(
            SparseWeightedGraph::build(2, &[(0, 1, -1.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(SparseWeightedGraph::build(2, &[(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn row_normalized_averages_neighbours() {
        let g = path3();
        let m = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        let out = g.apply_row_normalized(&m).unwrap();
        assert_eq!(out.row(1), &[0.5, 0.5]);
        assert_eq!(out.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn isolated_rows_are_zero() {
        let g = SparseWeightedGraph::build(3, &[(0, 1, 1.0)]).unwrap();
        let m = Matrix::from_rows(&[&[1.0], &[2.0], &[3.0]]).unwrap();
        assert_eq!(g.apply_row_normalized(&m).unwrap().row(2), &[0.0]);
        assert_eq!(g.apply_symmetric_normalized(&m).unwrap().row(2), &[0.0]);
    }

    #[test]
    fn two_node_symmetric_is_exchange() {
        let g = SparseWeightedGraph::build(2, &[(0, 1, 1.0)]).unwrap();
        let m = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let out = g.apply_symmetric_normalized(&m).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn constants_in_unnormalized_null_space() {
        let g = path3();
        let m = Matrix::from_rows(&[&[2.5], &[2.5], &[2.5]]).unwrap();
        let out = g.apply_laplacian(LaplacianKind::Unnormalized, &m).unwrap();
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = Matrix::zeros(2, 2);
        assert!(matches!(
            path3().apply_laplacian(LaplacianKind::Normalized, &m),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    fn random_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n, 0.0f64..3.0), 0..3 * n),
            )
        })
    }

    fn dense_w(g: &SparseWeightedGraph) -> DenseMatrix {
        let n = g.n();
        let mut w = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] = g.weight(i, j);
            }
        }
        w
    }

    proptest! {
        #[test]
        fn operators_match_dense(
            (n, edges) in random_graph(),
            seed in proptest::collection::vec(-1.0f64..1.0, 90),
        ) {
            let g = SparseWeightedGraph::build(n, &edges).unwrap();
            let k = 3;
            let m = Matrix::from_vec(n, k, seed[..n * k].to_vec()).unwrap();
            let w = dense_w(&g);
            let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect();
            for i in 0..n {
                prop_assert!((d[i] - g.degree(i)).abs() < 1e-12);
                for j in 0..n {
                    prop_assert_eq!(w[(i, j)], w[(j, i)]);
                }
            }
            let inv = |x: f64| if x > 0.0 { 1.0 / x } else { 0.0 };
            let rn = g.apply_row_normalized(&m).unwrap();
            let sn = g.apply_symmetric_normalized(&m).unwrap();
            let lu = g.apply_laplacian(LaplacianKind::Unnormalized, &m).unwrap();
            let ln = g.apply_laplacian(LaplacianKind::Normalized, &m).unwrap();
            for i in 0..n {
                for c in 0..k {
                    let mut a = 0.0;
                    let mut s = 0.0;
                    let mut l = d[i] * m[(i, c)];
                    for j in 0..n {
                        a += inv(d[i]) * w[(i, j)] * m[(j, c)];
                        s += inv(d[i].sqrt()) * w[(i, j)] * inv(d[j].sqrt()) * m[(j, c)];
                        l -= w[(i, j)] * m[(j, c)];
                    }
                    prop_assert!((rn[(i, c)] - a).abs() < 1e-10);
                    prop_assert!((sn[(i, c)] - s).abs() < 1e-10);
                    prop_assert!((lu[(i, c)] - l).abs() < 1e-10);
                    let diag = if d[i] > 0.0 { m[(i, c)] } else { 0.0 };
                    prop_assert!((ln[(i, c)] - (diag - s)).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn laplacians_are_psd((n, edges) in random_graph(), v in proptest::collection::vec(-5.0f64..5.0, 30)) {
            let g = SparseWeightedGraph::build(n, &edges).unwrap();
            let m = Matrix::from_vec(n, 1, v[..n].to_vec()).unwrap();
            let norm2: f64 = v[..n].iter().map(|x| x * x).sum();
            for kind in [LaplacianKind::Unnormalized, LaplacianKind::Normalized] {
                prop_assert!(g.laplacian_energy(kind, &m).unwrap() >= -1e-12 * norm2);
            }
            // row sums of L_un vanish, so the column total of L_un·M is zero
            let lu = g.apply_laplacian(LaplacianKind::Unnormalized, &m).unwrap();
            let total: f64 = lu.as_slice().iter().sum();
            prop_assert!(total.abs() < 1e-9 * (1.0 + norm2));
        }

        #[test]
        fn row_normalized_keeps_stochastic_rows((n, edges) in random_graph(), raw in proptest::collection::vec(0.01f64..1.0, 60)) {
            let g = SparseWeightedGraph::build(n, &edges).unwrap();
            let mut m = Matrix::from_vec(n, 2, raw[..2 * n].to_vec()).unwrap();
            for i in 0..n {
                let s = m[(i, 0)] + m[(i, 1)];
                m[(i, 0)] /= s;
                m[(i, 1)] /= s;
            }
            let out = g.apply_row_normalized(&m).unwrap();
            for i in 0..n {
                if !g.is_isolated(i) {
                    prop_assert!((out.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
