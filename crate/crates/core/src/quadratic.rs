//! Function-estimation methods built on the generic quadratic objective
//!
//! ```text
//! Q(F) = Σ_k C (F_k − Z_k)ᵀ H (F_k − Z_k) + F_kᵀ L F_k
//! ```
//!
//! whose minimizer is `F_k = C (L + C H)⁻¹ H Z_k`. All solvers here are
//! matrix-free Jacobi sweeps over the sparse graph; the dense closed forms
//! live in [`crate::dense`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, SparseWeightedGraph};
use crate::matrix::Matrix;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 1000;
/// Sup-norm beyond which an iterate is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConfig {
    /// Fitting strength `C > 0`.
    pub c: f64,
    pub laplacian: LaplacianKind,
    /// Diagonal of `H`. `f64::INFINITY` clamps the node to its target row.
    pub error_weights: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl QuadraticConfig {
    pub fn new(c: f64, laplacian: LaplacianKind, error_weights: Vec<f64>) -> Self {
        Self {
            c,
            laplacian,
            error_weights,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter("C must be positive and finite"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive"));
        }
        if self.error_weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.error_weights.len(),
            });
        }
        if self.error_weights.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidParameter("error weights must be positive"));
        }
        Ok(())
    }
}

/// Fitting targets `Z` together with the node regularization that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedLabelData {
    /// Diagonal node regularization `v_ii` (all ones when disabled).
    pub v: Vec<f64>,
    pub z: Matrix,
    /// Per-class normalizers `η_k` (empty when disabled).
    pub class_norms: Vec<f64>,
}

/// Builds the fitting targets from label degrees `Λ` and labels `Y`.
///
/// With node regularization enabled each class column is weighted by degree
/// and label degree and rescaled to unit mass,
/// `z_ik = d_i λ_i y_ik / η_k` with `η_k = Σ_i d_i λ_i y_ik`, and
/// `v_ii = Σ_k d_i λ_i y_ik / η_k` is reported alongside. For hard labels and
/// `λ ∈ {0, 1}` this is exactly `Z = V Λ Y`. Disabled, `Z = Λ Y`.
pub fn build_node_regularization(
    g: &SparseWeightedGraph,
    lambda: &[f64],
    y: &Matrix,
    enabled: bool,
) -> Result<NormalizedLabelData> {
    let n = g.n();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.rows(),
        });
    }
    let k = y.cols();
    let mut z = Matrix::zeros(n, k);
    if !enabled {
        for i in 0..n {
            for (o, &v) in z.row_mut(i).iter_mut().zip(y.row(i)) {
                *o = lambda[i] * v;
            }
        }
        return Ok(NormalizedLabelData {
            v: vec![1.0; n],
            z,
            class_norms: Vec::new(),
        });
    }
    let mut eta = vec![0.0; k];
    for i in 0..n {
        let s = g.degree(i) * lambda[i];
        for (e, &v) in eta.iter_mut().zip(y.row(i)) {
            *e += s * v;
        }
    }
    if let Some(class) = eta.iter().position(|&e| !(e > 0.0)) {
        return Err(Error::DegenerateClass { class });
    }
    let mut v = vec![0.0; n];
    for i in 0..n {
        let s = g.degree(i) * lambda[i];
        for c in 0..k {
            let t = s * y[(i, c)] / eta[c];
            z[(i, c)] = t;
            v[i] += t;
        }
    }
    Ok(NormalizedLabelData {
        v,
        z,
        class_norms: eta,
    })
}

/// Iterative solution and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub scores: Matrix,
    pub iterations: usize,
    /// False when `max_iter` was reached first.
    pub converged: bool,
}

/// Runs synchronous sweeps `next_i = update(i, current)` until the sup-norm
/// change drops below `tol`.
fn jacobi(
    init: Matrix,
    tol: f64,
    max_iter: usize,
    update: impl Fn(usize, &Matrix, &mut [f64]),
    observer: &mut dyn FnMut(&Matrix),
) -> Result<Solution> {
    let n = init.rows();
    let mut cur = init;
    let mut next = cur.clone();
    observer(&cur);
    for it in 1..=max_iter {
        for i in 0..n {
            update(i, &cur, next.row_mut(i));
        }
        let delta = next.max_abs_diff(&cur);
        core::mem::swap(&mut cur, &mut next);
        observer(&cur);
        if !(cur.max_abs() <= DIVERGENCE_BOUND) {
            return Err(Error::Diverged { iterations: it });
        }
        if delta < tol {
            return Ok(Solution {
                scores: cur,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(Solution {
        scores: cur,
        iterations: max_iter,
        converged: false,
    })
}

fn check_targets(g: &SparseWeightedGraph, lambda: Option<&[f64]>, z: &Matrix) -> Result<()> {
    if z.rows() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: z.rows(),
        });
    }
    if let Some(l) = lambda {
        if l.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: l.len(),
            });
        }
        if l.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("label degrees must lie in [0, 1]"));
        }
    }
    Ok(())
}

/// Minimizes the generic objective.
///
/// Solves `(L + C H) F = C H Z` by Jacobi sweeps. This is the fixed point
/// `F = Z − (1/C) H⁻¹ L F` with the diagonal of `L` moved to the left-hand
/// side, which keeps the sweep a contraction for every `C, H > 0`. Rows with
/// infinite `h_ii` are clamped to `Z`.
pub fn solve_generic(
    g: &SparseWeightedGraph,
    cfg: &QuadraticConfig,
    z: &NormalizedLabelData,
) -> Result<Solution> {
    solve_generic_observed(g, cfg, &z.z, &mut |_| {})
}

/// [`solve_generic`] on raw targets, calling `observer` on every iterate.
pub fn solve_generic_observed(
    g: &SparseWeightedGraph,
    cfg: &QuadraticConfig,
    z: &Matrix,
    observer: &mut dyn FnMut(&Matrix),
) -> Result<Solution> {
    cfg.validate(g.n())?;
    check_targets(g, None, z)?;
    let kind = cfg.laplacian;
    let c = cfg.c;
    let h = &cfg.error_weights;
    jacobi(
        z.clone(),
        cfg.tol,
        cfg.max_iter,
        |i, cur, out| {
            if h[i].is_infinite() {
                out.copy_from_slice(z.row(i));
                return;
            }
            let ch = c * h[i];
            for (o, &t) in out.iter_mut().zip(z.row(i)) {
                *o = ch * t;
            }
            for e in g.entry_range(i) {
                let (j, _) = g.entry(e);
                let a = g.laplacian_offdiag(kind, i, e);
                for (o, &x) in out.iter_mut().zip(cur.row(j)) {
                    *o += a * x;
                }
            }
            let denom = g.laplacian_diag(kind, i) + ch;
            out.iter_mut().for_each(|o| *o /= denom);
        },
        observer,
    )
}

/// Value of the generic objective at `f`.
pub fn objective(
    g: &SparseWeightedGraph,
    cfg: &QuadraticConfig,
    z: &Matrix,
    f: &Matrix,
) -> Result<f64> {
    let mut fit = 0.0;
    for i in 0..g.n() {
        let h = cfg.error_weights[i];
        let sq: f64 = f
            .row(i)
            .iter()
            .zip(z.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if h.is_infinite() {
            if sq > 0.0 {
                return Ok(f64::INFINITY);
            }
        } else {
            fit += h * sq;
        }
    }
    Ok(cfg.c * fit + g.laplacian_energy(cfg.laplacian, f)?)
}

/// Error weights `H = D Λ (I − Λ)⁻¹` that turn the generic objective (with
/// `C = 1`, unnormalized Laplacian) into the harmonic-function method.
/// Nodes with `λ = 1` get infinite weight.
pub fn gfhf_error_weights(g: &SparseWeightedGraph, lambda: &[f64]) -> Vec<f64> {
    lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l >= 1.0 {
                f64::INFINITY
            } else {
                g.degree(i) * l / (1.0 - l)
            }
        })
        .collect()
}

/// Harmonic function with per-node dongle weights:
/// `F = (I − Λ) D⁻¹ W F + Λ Z`, starting from `Λ Z`.
///
/// Nodes with `λ = 1` are clamped to their `Z` row and never iterated.
pub fn solve_gfhf(
    g: &SparseWeightedGraph,
    lambda: &[f64],
    z: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    solve_gfhf_observed(g, lambda, z, tol, max_iter, &mut |_| {})
}

pub fn solve_gfhf_observed(
    g: &SparseWeightedGraph,
    lambda: &[f64],
    z: &Matrix,
    tol: f64,
    max_iter: usize,
    observer: &mut dyn FnMut(&Matrix),
) -> Result<Solution> {
    check_targets(g, Some(lambda), z)?;
    if !lambda.iter().any(|&l| l > 0.0) {
        return Err(Error::NoAnchor);
    }
    jacobi(
        scale_rows(z, lambda),
        tol,
        max_iter,
        |i, cur, out| {
            let l = lambda[i];
            if l >= 1.0 {
                out.copy_from_slice(z.row(i));
                return;
            }
            out.fill(0.0);
            for (j, w) in g.neighbors(i) {
                for (o, &x) in out.iter_mut().zip(cur.row(j)) {
                    *o += w * x;
                }
            }
            let s = (1.0 - l) * g.inv_degree(i);
            for (o, &t) in out.iter_mut().zip(z.row(i)) {
                *o = s * *o + l * t;
            }
        },
        observer,
    )
}

/// Local/global consistency extended to soft label degrees:
/// `F = γ S F + (1 − γ) Λ Z` with `γ = 1/(1 + C)` and
/// `S = D^(-1/2) W D^(-1/2)`, starting from `Λ Z`.
pub fn solve_lgc(
    g: &SparseWeightedGraph,
    lambda: &[f64],
    z: &Matrix,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    solve_lgc_observed(g, lambda, z, c, tol, max_iter, &mut |_| {})
}

pub fn solve_lgc_observed(
    g: &SparseWeightedGraph,
    lambda: &[f64],
    z: &Matrix,
    c: f64,
    tol: f64,
    max_iter: usize,
    observer: &mut dyn FnMut(&Matrix),
) -> Result<Solution> {
    check_targets(g, Some(lambda), z)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter("C must be positive and finite"));
    }
    let gamma = 1.0 / (1.0 + c);
    jacobi(
        scale_rows(z, lambda),
        tol,
        max_iter,
        |i, cur, out| {
            out.fill(0.0);
            let si = g.inv_sqrt_degree(i);
            for (j, w) in g.neighbors(i) {
                let s = si * w * g.inv_sqrt_degree(j);
                for (o, &x) in out.iter_mut().zip(cur.row(j)) {
                    *o += s * x;
                }
            }
            let fit = (1.0 - gamma) * lambda[i];
            for (o, &t) in out.iter_mut().zip(z.row(i)) {
                *o = gamma * *o + fit * t;
            }
        },
        observer,
    )
}

fn scale_rows(z: &Matrix, lambda: &[f64]) -> Matrix {
    let mut m = z.clone();
    for (i, &l) in lambda.iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|v| *v *= l);
    }
    m
}
