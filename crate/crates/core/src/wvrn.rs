//! Weighted-vote relational neighbour classifier with relaxation labeling.
//!
//! Every sweep computes, from the frozen previous estimates, the vote
//! `q_i = Σ_j w_ij p_j / Σ_j w_ij` for each free node and moves towards it by
//! the annealing factor: `p_i ← p_i + β (q_i − p_i)`, then `β ← β ν`.
//! `β` starts at one, so the first sweep replaces free rows by their votes.
//!
//! * [`WvrnVariant::Base`]: clamped nodes keep their one-hot rows, free nodes
//!   start at the class prior of the clamped labels.
//! * [`WvrnVariant::V1`]: every node starts at its external prior, nothing is
//!   clamped.
//! * [`WvrnVariant::V2`]: as V1, but the vote is mixed with the node's own
//!   prior, `q̃_i = λ_i p⁰_i + (1 − λ_i) q_i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::SparseWeightedGraph;
use crate::matrix::{DistributionMatrix, Matrix};
use crate::selection::SelectionResult;

pub const DEFAULT_NU: f64 = 0.95;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 2000;
/// Annealing factor below which the iteration is declared converged.
pub const BETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WvrnVariant {
    Base,
    V1,
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WvrnConfig {
    /// Annealing decay `ν ∈ (0, 1)`.
    pub nu: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WvrnConfig {
    fn default() -> Self {
        Self {
            nu: DEFAULT_NU,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl WvrnConfig {
    pub fn with_nu(nu: f64) -> Self {
        Self {
            nu,
            ..Self::default()
        }
    }
}

/// Relaxation-labeling state; one [`WvrnState::step`] per sweep.
#[derive(Debug, Clone)]
pub struct WvrnState {
    t: usize,
    beta: f64,
    nu: f64,
    p: Matrix,
    next: Matrix,
    clamped: Vec<bool>,
    variant: WvrnVariant,
    lambda: Vec<f64>,
    p0: Option<Matrix>,
    flagged: Vec<usize>,
}

impl WvrnState {
    /// Clamped start: selected nodes one-hot on their derived label, the rest
    /// at the empirical class distribution of those labels.
    pub fn base(
        g: &SparseWeightedGraph,
        selection: &SelectionResult,
        k: usize,
        nu: f64,
    ) -> Result<Self> {
        let n = g.n();
        if selection.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut prior = vec![0.0; k];
        for &c in &selection.derived_labels {
            if c >= k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: c + 1,
                });
            }
            prior[c] += 1.0;
        }
        let total = selection.len() as f64;
        prior.iter_mut().for_each(|v| *v /= total);
        let mut p = Matrix::zeros(n, k);
        let mut clamped = vec![false; n];
        for i in 0..n {
            p.row_mut(i).copy_from_slice(&prior);
        }
        for (&i, &c) in selection.nodes.iter().zip(&selection.derived_labels) {
            if i >= n {
                return Err(Error::NodeOutOfRange { index: i, n });
            }
            let row = p.row_mut(i);
            row.fill(0.0);
            row[c] = 1.0;
            clamped[i] = true;
        }
        Self::from_parts(g, p, clamped, WvrnVariant::Base, Vec::new(), None, nu)
    }

    /// Unclamped start from the external priors.
    pub fn v1(g: &SparseWeightedGraph, p0: &DistributionMatrix, nu: f64) -> Result<Self> {
        let n = g.n();
        Self::from_parts(
            g,
            p0.matrix().clone(),
            vec![false; n],
            WvrnVariant::V1,
            Vec::new(),
            None,
            nu,
        )
    }

    /// Unclamped start from the external priors with dongle weights `lambda`.
    pub fn v2(
        g: &SparseWeightedGraph,
        p0: &DistributionMatrix,
        lambda: &[f64],
        nu: f64,
    ) -> Result<Self> {
        let n = g.n();
        if lambda.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lambda.len(),
            });
        }
        if lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidParameter("label degrees must lie in [0, 1]"));
        }
        let m = p0.matrix().clone();
        Self::from_parts(
            g,
            m.clone(),
            vec![false; n],
            WvrnVariant::V2,
            lambda.to_vec(),
            Some(m),
            nu,
        )
    }

    fn from_parts(
        g: &SparseWeightedGraph,
        p: Matrix,
        clamped: Vec<bool>,
        variant: WvrnVariant,
        lambda: Vec<f64>,
        p0: Option<Matrix>,
        nu: f64,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(
                "annealing decay must lie in (0, 1)",
            ));
        }
        if p.rows() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: p.rows(),
            });
        }
        let flagged = (0..g.n())
            .filter(|&i| !clamped[i] && g.is_isolated(i))
            .collect();
        Ok(Self {
            t: 0,
            beta: 1.0,
            nu,
            next: p.clone(),
            p,
            clamped,
            variant,
            lambda,
            p0,
            flagged,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variant(&self) -> WvrnVariant {
        self.variant
    }

    pub fn estimates(&self) -> &Matrix {
        &self.p
    }

    /// Free nodes without neighbours; they keep their initial rows.
    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    /// One synchronous sweep; returns the sup-norm change.
    pub fn step(&mut self, g: &SparseWeightedGraph) -> f64 {
        let beta = self.beta;
        let mut delta = 0.0f64;
        for i in 0..g.n() {
            let cur = self.p.row(i);
            let out = self.next.row_mut(i);
            if self.clamped[i] || g.is_isolated(i) {
                out.copy_from_slice(cur);
                continue;
            }
            out.fill(0.0);
            for (j, w) in g.neighbors(i) {
                for (o, &x) in out.iter_mut().zip(self.p.row(j)) {
                    *o += w * x;
                }
            }
            let inv = g.inv_degree(i);
            out.iter_mut().for_each(|o| *o *= inv);
            if let Some(p0) = &self.p0 {
                let l = self.lambda[i];
                for (o, &x) in out.iter_mut().zip(p0.row(i)) {
                    *o = l * x + (1.0 - l) * *o;
                }
            }
            if beta != 1.0 {
                for (o, &x) in out.iter_mut().zip(cur) {
                    *o = x + beta * (*o - x);
                }
            }
            for (o, &x) in out.iter().zip(cur) {
                delta = delta.max((o - x).abs());
            }
        }
        core::mem::swap(&mut self.p, &mut self.next);
        self.t += 1;
        self.beta *= self.nu;
        delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WvrnOutcome {
    pub estimates: DistributionMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub flagged: Vec<usize>,
}

/// Runs sweeps until the change drops below `tol`, `β` falls under
/// [`BETA_FLOOR`], or `max_iter` sweeps have been made.
pub fn run(g: &SparseWeightedGraph, mut state: WvrnState, cfg: &WvrnConfig) -> Result<WvrnOutcome> {
    let mut converged = false;
    while state.t < cfg.max_iter {
        let delta = state.step(g);
        if delta < cfg.tol || state.beta < BETA_FLOOR {
            converged = true;
            break;
        }
    }
    let iterations = state.t;
    let flagged = state.flagged.clone();
    Ok(WvrnOutcome {
        estimates: DistributionMatrix::with_tolerance(state.p, 1e-9)?,
        iterations,
        converged,
        flagged,
    })
}

/// One-call entry point.
///
/// `selection` is required for [`WvrnVariant::Base`] and `lambda` for
/// [`WvrnVariant::V2`].
pub fn wvrn(
    g: &SparseWeightedGraph,
    p0: &DistributionMatrix,
    selection: Option<&SelectionResult>,
    variant: WvrnVariant,
    lambda: Option<&[f64]>,
    cfg: &WvrnConfig,
) -> Result<WvrnOutcome> {
    let state = match variant {
        WvrnVariant::Base => {
            let s = selection.ok_or(Error::InvalidParameter("base WvRN needs a clamped subset"))?;
            WvrnState::base(g, s, p0.k(), cfg.nu)?
        }
        WvrnVariant::V1 => WvrnState::v1(g, p0, cfg.nu)?,
        WvrnVariant::V2 => {
            let l = lambda.ok_or(Error::InvalidParameter("WvRN-V2 needs label degrees"))?;
            WvrnState::v2(g, p0, l, cfg.nu)?
        }
    };
    if p0.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: p0.n(),
        });
    }
    run(g, state, cfg)
}
