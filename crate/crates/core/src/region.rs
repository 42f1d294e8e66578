//! Edge-region regularization: information regularization (IR), its dual
//! (DIR) and least-squares regularization (LSR).
//!
//! Every edge `(i, j)` is a region with its own distribution `p̄_ij`. The
//! objective is
//!
//! ```text
//! H(P, P̄) = Σ_i μ_i D(p⁰_i, p_i) + Σ_i Σ_{j ~ i} w_ij D(p_i, p̄_ij)
//! ```
//!
//! with `μ_i = C λ_i`, the inner sum running over both endpoints of each edge,
//! and `D` the KL divergence (IR), the reversed KL divergence `KL(p̄ ‖ p)` in
//! the regularizer (DIR) or the squared distance (LSR). It is minimized by
//! alternating an exact region step with a node step:
//!
//! | method | region step                 | node step                          |
//! |--------|-----------------------------|------------------------------------|
//! | IR     | arithmetic mean             | weighted geometric mean / exp-grad |
//! | DIR    | normalized geometric mean   | [`node_update_shared`]             |
//! | LSR    | arithmetic mean             | [`node_update_shared`]             |
//!
//! In setting 1 the selected nodes are clamped to one-hot rows and the fitting
//! term is dropped; in setting 2 every node is free and fitted to its prior.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::SparseWeightedGraph;
use crate::matrix::{DistributionMatrix, Matrix};
use crate::selection::{SelectionResult, Setting};

/// Floor applied to probabilities before taking logarithms.
pub const EPS_FLOOR: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_OUTER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionMethod {
    Ir,
    Dir,
    Lsr,
}

impl RegionMethod {
    pub fn name(self) -> &'static str {
        match self {
            RegionMethod::Ir => "IR",
            RegionMethod::Dir => "DIR",
            RegionMethod::Lsr => "LSR",
        }
    }
}

/// Exponentiated-gradient parameters for the IR setting-2 node step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams {
    /// Initial step, relative to the node's total weight `μ_i + D_ii`.
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for InnerParams {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMethodConfig {
    pub method: RegionMethod,
    pub setting: Setting,
    /// Fitting strength; only used in setting 2.
    pub c: f64,
    /// Per-node label degrees; only used in setting 2.
    pub lambda: Vec<f64>,
    pub eps: f64,
    pub tol: f64,
    pub max_outer_iter: usize,
    pub inner: InnerParams,
    /// Record the objective after every half-step.
    pub trace: bool,
}

impl RegionMethodConfig {
    pub fn new(method: RegionMethod, setting: Setting, c: f64, lambda: Vec<f64>) -> Self {
        Self {
            method,
            setting,
            c,
            lambda,
            eps: EPS_FLOOR,
            tol: DEFAULT_TOL,
            max_outer_iter: DEFAULT_MAX_OUTER,
            inner: InnerParams::default(),
            trace: false,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1e-6) {
            return Err(Error::InvalidParameter(
                "probability floor must lie in (0, 1e-6]",
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive"));
        }
        if self.setting == Setting::Two {
            if !(self.c > 0.0) || !self.c.is_finite() {
                return Err(Error::InvalidParameter("C must be positive and finite"));
            }
            if self.lambda.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: self.lambda.len(),
                });
            }
            if self.lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
                return Err(Error::InvalidParameter("label degrees must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Region distributions, one row per stored directed entry of the graph.
/// Both directions of an edge hold the same row.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions(Matrix);

impl Regions {
    /// Row of the stored entry `e` (see [`SparseWeightedGraph::entry_range`]).
    pub fn entry(&self, e: usize) -> &[f64] {
        self.0.row(e)
    }

    /// Distribution of the region on edge `(i, j)`, if the edge exists.
    pub fn edge(&self, g: &SparseWeightedGraph, i: usize, j: usize) -> Option<&[f64]> {
        g.entry_range(i)
            .find(|&e| g.entry(e).0 == j)
            .map(|e| self.0.row(e))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Anything that can produce the region distribution of a stored entry.
pub trait RegionSource {
    fn region_into(&self, i: usize, e: usize, out: &mut [f64]);
}

impl RegionSource for Regions {
    #[inline]
    fn region_into(&self, _i: usize, e: usize, out: &mut [f64]) {
        out.copy_from_slice(self.0.row(e));
    }
}

/// Arithmetic-mean regions computed on the fly from node distributions.
pub struct MeanRegions<'a> {
    pub graph: &'a SparseWeightedGraph,
    pub nodes: &'a Matrix,
}

impl RegionSource for MeanRegions<'_> {
    #[inline]
    fn region_into(&self, i: usize, e: usize, out: &mut [f64]) {
        let (j, _) = self.graph.entry(e);
        mean_into(self.nodes.row(i), self.nodes.row(j), out);
    }
}

#[inline]
fn mean_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = 0.5 * (x + y);
    }
}

/// Floors entries at `eps` and rescales to unit sum.
fn floored_into(p: &[f64], eps: f64, out: &mut [f64]) {
    let mut s = 0.0;
    for (o, &v) in out.iter_mut().zip(p) {
        *o = v.max(eps);
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}

/// Normalizes `exp(a_k)` in place.
fn softmax_in_place(a: &mut [f64]) {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in a.iter_mut() {
        *v = libm::exp(*v - m);
        s += *v;
    }
    a.iter_mut().for_each(|v| *v /= s);
}

/// IR/LSR region step: `p̄_ij = (p_i + p_j) / 2`.
pub fn ir_region_update(p: &Matrix, g: &SparseWeightedGraph) -> Regions {
    let mut r = Matrix::zeros(g.nnz(), p.cols());
    for i in 0..g.n() {
        for e in g.entry_range(i) {
            let (j, _) = g.entry(e);
            mean_into(p.row(i), p.row(j), r.row_mut(e));
        }
    }
    Regions(r)
}

/// DIR region step: normalized geometric mean of the `eps`-floored endpoints.
pub fn dir_region_update(p: &Matrix, g: &SparseWeightedGraph, eps: f64) -> Regions {
    let k = p.cols();
    let mut logs = Matrix::zeros(p.rows(), k);
    for i in 0..p.rows() {
        let row = logs.row_mut(i);
        floored_into(p.row(i), eps, row);
        row.iter_mut().for_each(|v| *v = libm::log(*v));
    }
    let mut r = Matrix::zeros(g.nnz(), k);
    for i in 0..g.n() {
        for e in g.entry_range(i) {
            let (j, _) = g.entry(e);
            let out = r.row_mut(e);
            for ((o, &a), &b) in out.iter_mut().zip(logs.row(i)).zip(logs.row(j)) {
                *o = 0.5 * (a + b);
            }
            softmax_in_place(out);
        }
    }
    Regions(r)
}

/// `μ_i = C λ_i`.
pub fn fit_weights(c: f64, lambda: &[f64]) -> Vec<f64> {
    lambda.iter().map(|&l| c * l).collect()
}

/// Result of a node half-step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUpdate {
    pub p: Matrix,
    /// Active nodes left unchanged because they have neither neighbours nor fit weight.
    pub flagged: Vec<usize>,
}

/// DIR/LSR node step:
/// `p_i = (μ_i p⁰_i + Σ_j w_ij p̄_ij) / (μ_i + D_ii)` for every active node.
pub fn node_update_shared<R: RegionSource + ?Sized>(
    g: &SparseWeightedGraph,
    regions: &R,
    p0: &Matrix,
    mu: &[f64],
    active: &[bool],
    prev: &Matrix,
) -> NodeUpdate {
    let k = prev.cols();
    let mut p = prev.clone();
    let mut flagged = Vec::new();
    let mut buf = vec![0.0; k];
    for i in 0..g.n() {
        if !active[i] {
            continue;
        }
        let denom = mu[i] + g.degree(i);
        if !(denom > 0.0) {
            flagged.push(i);
            continue;
        }
        let out = p.row_mut(i);
        if g.is_isolated(i) {
            out.copy_from_slice(p0.row(i));
            continue;
        }
        for (o, &x) in out.iter_mut().zip(p0.row(i)) {
            *o = mu[i] * x;
        }
        for e in g.entry_range(i) {
            let (_, w) = g.entry(e);
            regions.region_into(i, e, &mut buf);
            for (o, &r) in out.iter_mut().zip(&buf) {
                *o += w * r;
            }
        }
        out.iter_mut().for_each(|o| *o /= denom);
    }
    NodeUpdate { p, flagged }
}

/// `G_ik = Σ_j w_ij ln p̄_ij(k)` with `eps`-floored regions.
fn log_region_sum<R: RegionSource + ?Sized>(
    g: &SparseWeightedGraph,
    regions: &R,
    i: usize,
    eps: f64,
    buf: &mut [f64],
    fl: &mut [f64],
    out: &mut [f64],
) {
    out.fill(0.0);
    for e in g.entry_range(i) {
        let (_, w) = g.entry(e);
        regions.region_into(i, e, buf);
        floored_into(buf, eps, fl);
        for (o, &r) in out.iter_mut().zip(fl.iter()) {
            *o += w * libm::log(r);
        }
    }
}

/// IR node step without a fitting term: for every active node the weighted
/// geometric mean of its incident regions, `p_ik ∝ exp(Σ_j w_ij ln p̄_ij(k) / D_ii)`.
pub fn ir_node_update_setting1<R: RegionSource + ?Sized>(
    g: &SparseWeightedGraph,
    regions: &R,
    eps: f64,
    active: &[bool],
    prev: &Matrix,
) -> NodeUpdate {
    let k = prev.cols();
    let mut p = prev.clone();
    let mut flagged = Vec::new();
    let (mut buf, mut fl) = (vec![0.0; k], vec![0.0; k]);
    for i in 0..g.n() {
        if !active[i] {
            continue;
        }
        if g.is_isolated(i) {
            flagged.push(i);
            continue;
        }
        let out = p.row_mut(i);
        log_region_sum(g, regions, i, eps, &mut buf, &mut fl, out);
        let d = g.degree(i);
        out.iter_mut().for_each(|v| *v /= d);
        softmax_in_place(out);
    }
    NodeUpdate { p, flagged }
}

/// Per-node IR objective `μ KL(p⁰ ‖ p) + D Σ p ln p − Σ_k p_k G_k`.
fn ir_node_objective(p: &[f64], p0: &[f64], mu: f64, degree: f64, log_sum: &[f64]) -> f64 {
    let mut f = 0.0;
    for ((&pk, &qk), &gk) in p.iter().zip(p0).zip(log_sum) {
        if mu > 0.0 && qk > 0.0 {
            f += mu * qk * (libm::log(qk) - libm::log(pk));
        }
        if pk > 0.0 {
            f += degree * pk * libm::log(pk) - pk * gk;
        }
    }
    f
}

/// Diagnostics of the IR setting-2 node step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InnerStats {
    /// Nodes whose inner solve hit the iteration cap.
    pub unconverged: Vec<usize>,
    pub max_iterations: usize,
}

/// Minimizes `f(p) = μ_i KL(p⁰_i ‖ p) + Σ_j w_ij KL(p ‖ p̄_ij)` over the
/// simplex for one node by exponentiated gradient with backtracking.
///
/// `start` must be strictly positive. Returns the minimizer, the iteration
/// count and whether the inner tolerance was reached. The objective never
/// increases between accepted iterates.
pub fn exp_gradient_node(
    start: &[f64],
    p0: &[f64],
    mu: f64,
    degree: f64,
    log_sum: &[f64],
    params: &InnerParams,
) -> (Vec<f64>, usize, bool) {
    let k = start.len();
    let mut p = start.to_vec();
    let mut cand = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut f = ir_node_objective(&p, p0, mu, degree, log_sum);
    let mut eta = params.step / (mu + degree);
    for it in 1..=params.max_iter {
        for kk in 0..k {
            grad[kk] = -mu * p0[kk] / p[kk] + degree * (libm::log(p[kk]) + 1.0) - log_sum[kk];
        }
        // stationarity on the simplex: p_k (g_k - Σ p g) vanishes at the optimum
        let gbar: f64 = p.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let residual = p
            .iter()
            .zip(&grad)
            .fold(0.0f64, |m, (a, b)| m.max((a * (b - gbar)).abs()));
        if residual / (mu + degree) < params.tol {
            return (p, it, true);
        }
        let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        for _ in 0..60 {
            for kk in 0..k {
                cand[kk] = libm::log(p[kk]) - eta * (grad[kk] - gmax);
            }
            softmax_in_place(&mut cand);
            if cand.iter().all(|&v| v > 0.0) {
                let fc = ir_node_objective(&cand, p0, mu, degree, log_sum);
                // Armijo condition along the multiplicative step
                let slope: f64 = grad
                    .iter()
                    .zip(&cand)
                    .zip(&p)
                    .map(|((g, c), q)| g * (c - q))
                    .sum();
                if fc <= f + 0.5 * slope.min(0.0) {
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !accepted {
            // no descent direction left at floating-point resolution
            return (p, it, true);
        }
        let delta = p
            .iter()
            .zip(&cand)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        core::mem::swap(&mut p, &mut cand);
        if delta < params.tol {
            return (p, it, true);
        }
        // grow again; backtracking keeps every accepted step a descent step
        eta = (eta * 2.0).min(params.step / (mu + degree) * 1e6);
    }
    (p, params.max_iter, false)
}

/// IR node step with a fitting term, solved per node by [`exp_gradient_node`].
/// Nodes with `μ_i = 0` fall back to the closed-form geometric mean and
/// isolated nodes with `μ_i > 0` return their prior.
#[allow(clippy::too_many_arguments)]
pub fn ir_node_update_setting2<R: RegionSource + ?Sized>(
    g: &SparseWeightedGraph,
    regions: &R,
    p0: &Matrix,
    mu: &[f64],
    eps: f64,
    params: &InnerParams,
    active: &[bool],
    prev: &Matrix,
) -> (NodeUpdate, InnerStats) {
    let k = prev.cols();
    let mut p = prev.clone();
    let mut flagged = Vec::new();
    let mut stats = InnerStats::default();
    let (mut buf, mut fl, mut gsum, mut start) =
        (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    for i in 0..g.n() {
        if !active[i] {
            continue;
        }
        let d = g.degree(i);
        let out = p.row_mut(i);
        if !(mu[i] > 0.0) {
            if d > 0.0 {
                log_region_sum(g, regions, i, eps, &mut buf, &mut fl, out);
                out.iter_mut().for_each(|v| *v /= d);
                softmax_in_place(out);
            } else {
                flagged.push(i);
            }
            continue;
        }
        if d == 0.0 {
            out.copy_from_slice(p0.row(i));
            continue;
        }
        log_region_sum(g, regions, i, eps, &mut buf, &mut fl, &mut gsum);
        floored_into(prev.row(i), eps, &mut start);
        let (sol, iters, ok) = exp_gradient_node(&start, p0.row(i), mu[i], d, &gsum, params);
        out.copy_from_slice(&sol);
        stats.max_iterations = stats.max_iterations.max(iters);
        if !ok {
            stats.unconverged.push(i);
        }
    }
    (NodeUpdate { p, flagged }, stats)
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (libm::log(a) - libm::log(b)))
        .sum()
}

fn sq_dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Objective `H(P, P̄)` of `method` for node distributions `p` and regions.
///
/// Logarithms see the same `eps`-floored, renormalized arguments as the
/// corresponding update steps.
pub fn objective<R: RegionSource + ?Sized>(
    method: RegionMethod,
    g: &SparseWeightedGraph,
    p: &Matrix,
    regions: &R,
    p0: &Matrix,
    mu: &[f64],
    eps: f64,
) -> f64 {
    let k = p.cols();
    let (mut r, mut a, mut b) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut total = 0.0;
    for i in 0..g.n() {
        let pi = p.row(i);
        if mu[i] > 0.0 {
            total += mu[i]
                * match method {
                    RegionMethod::Lsr => sq_dist(p0.row(i), pi),
                    _ => {
                        floored_into(pi, eps, &mut a);
                        kl(p0.row(i), &a)
                    }
                };
        }
        for e in g.entry_range(i) {
            let (_, w) = g.entry(e);
            regions.region_into(i, e, &mut r);
            total += w * match method {
                RegionMethod::Lsr => sq_dist(pi, &r),
                RegionMethod::Ir => {
                    floored_into(&r, eps, &mut b);
                    kl(pi, &b)
                }
                RegionMethod::Dir => {
                    floored_into(pi, eps, &mut a);
                    kl(&r, &a)
                }
            };
        }
    }
    total
}

/// Objective values around one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// After the region step (regions refreshed, nodes from the previous iterate).
    pub after_region: f64,
    /// After the node step.
    pub after_node: f64,
    /// Sup-norm change of the node distributions.
    pub delta: f64,
}

/// Alternating solver exposing the two half-steps.
#[derive(Debug, Clone)]
pub struct RegionSolver<'g> {
    g: &'g SparseWeightedGraph,
    method: RegionMethod,
    setting: Setting,
    mu: Vec<f64>,
    p0: Matrix,
    active: Vec<bool>,
    eps: f64,
    inner: InnerParams,
    p: Matrix,
    /// Node distributions the current regions were computed from (IR/LSR).
    basis: Matrix,
    /// Materialized regions (DIR).
    regions: Option<Regions>,
    flagged: Vec<usize>,
    inner_unconverged: usize,
}

impl<'g> RegionSolver<'g> {
    /// Setting 1 clamps `selection` to one-hot rows of its derived labels and
    /// starts free nodes at the class prior of those labels. Setting 2 starts
    /// every node at its prior.
    pub fn new(
        g: &'g SparseWeightedGraph,
        cfg: &RegionMethodConfig,
        p0: &DistributionMatrix,
        selection: Option<&SelectionResult>,
    ) -> Result<Self> {
        let n = g.n();
        cfg.validate(n)?;
        if p0.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p0.n(),
            });
        }
        let k = p0.k();
        let (p, active, mu) = match cfg.setting {
            Setting::Two => (
                p0.matrix().clone(),
                vec![true; n],
                fit_weights(cfg.c, &cfg.lambda),
            ),
            Setting::One => {
                let s = selection
                    .ok_or(Error::InvalidParameter("setting 1 needs a selected subset"))?;
                if s.is_empty() {
                    return Err(Error::EmptySelection);
                }
                let mut prior = vec![0.0; k];
                for &c in &s.derived_labels {
                    prior[c] += 1.0 / s.len() as f64;
                }
                let mut p = Matrix::zeros(n, k);
                let mut active = vec![true; n];
                for i in 0..n {
                    p.row_mut(i).copy_from_slice(&prior);
                }
                for (&i, &c) in s.nodes.iter().zip(&s.derived_labels) {
                    let row = p.row_mut(i);
                    row.fill(0.0);
                    row[c] = 1.0;
                    active[i] = false;
                }
                (p, active, vec![0.0; n])
            }
        };
        Ok(Self {
            g,
            method: cfg.method,
            setting: cfg.setting,
            mu,
            p0: p0.matrix().clone(),
            active,
            eps: cfg.eps,
            inner: cfg.inner,
            basis: p.clone(),
            p,
            regions: None,
            flagged: Vec::new(),
            inner_unconverged: 0,
        })
    }

    pub fn estimates(&self) -> &Matrix {
        &self.p
    }

    pub fn fit_weights(&self) -> &[f64] {
        &self.mu
    }

    /// Region distributions currently in force, materialized.
    pub fn regions(&self) -> Regions {
        match &self.regions {
            Some(r) => r.clone(),
            None => ir_region_update(&self.basis, self.g),
        }
    }

    /// Active nodes that could not be updated in the last node step.
    pub fn flagged(&self) -> &[usize] {
        &self.flagged
    }

    pub fn inner_unconverged(&self) -> usize {
        self.inner_unconverged
    }

    /// Recomputes all region distributions from the current nodes.
    pub fn region_step(&mut self) {
        match self.method {
            RegionMethod::Dir => self.regions = Some(dir_region_update(&self.p, self.g, self.eps)),
            RegionMethod::Ir | RegionMethod::Lsr => self.basis.clone_from(&self.p),
        }
    }

    /// Re-estimates active nodes from the current regions; returns the sup-norm change.
    pub fn node_step(&mut self) -> f64 {
        let update = match self.method {
            RegionMethod::Dir => {
                let r = self
                    .regions
                    .as_ref()
                    .expect("region step precedes node step");
                node_update_shared(self.g, r, &self.p0, &self.mu, &self.active, &self.p)
            }
            RegionMethod::Lsr => {
                let r = MeanRegions {
                    graph: self.g,
                    nodes: &self.basis,
                };
                node_update_shared(self.g, &r, &self.p0, &self.mu, &self.active, &self.p)
            }
            RegionMethod::Ir => {
                let r = MeanRegions {
                    graph: self.g,
                    nodes: &self.basis,
                };
                match self.setting {
                    Setting::One => {
                        ir_node_update_setting1(self.g, &r, self.eps, &self.active, &self.p)
                    }
                    Setting::Two => {
                        let (u, stats) = ir_node_update_setting2(
                            self.g,
                            &r,
                            &self.p0,
                            &self.mu,
                            self.eps,
                            &self.inner,
                            &self.active,
                            &self.p,
                        );
                        self.inner_unconverged += stats.unconverged.len();
                        u
                    }
                }
            }
        };
        let delta = update.p.max_abs_diff(&self.p);
        self.p = update.p;
        self.flagged = update.flagged;
        delta
    }

    /// Objective at the current nodes and regions.
    pub fn objective(&self) -> f64 {
        match &self.regions {
            Some(r) => objective(
                self.method,
                self.g,
                &self.p,
                r,
                &self.p0,
                &self.mu,
                self.eps,
            ),
            None => {
                let r = MeanRegions {
                    graph: self.g,
                    nodes: &self.basis,
                };
                objective(
                    self.method,
                    self.g,
                    &self.p,
                    &r,
                    &self.p0,
                    &self.mu,
                    self.eps,
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome {
    pub estimates: DistributionMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Empty unless tracing was requested.
    pub trace: Vec<TraceRow>,
    pub flagged: Vec<usize>,
    /// Inner exp-gradient solves that hit their cap (IR setting 2).
    pub inner_unconverged: usize,
}

/// Alternates region and node steps until the node change drops below `tol`.
pub fn run_region_method(
    g: &SparseWeightedGraph,
    cfg: &RegionMethodConfig,
    p0: &DistributionMatrix,
    selection: Option<&SelectionResult>,
) -> Result<RegionOutcome> {
    let mut solver = RegionSolver::new(g, cfg, p0, selection)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_outer_iter {
        iterations = it;
        solver.region_step();
        let after_region = if cfg.trace {
            solver.objective()
        } else {
            f64::NAN
        };
        let delta = solver.node_step();
        if cfg.trace {
            trace.push(TraceRow {
                iter: it,
                after_region,
                after_node: solver.objective(),
                delta,
            });
        }
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    let flagged = solver.flagged.clone();
    let inner_unconverged = solver.inner_unconverged;
    Ok(RegionOutcome {
        estimates: DistributionMatrix::from_matrix_unchecked(solver.p),
        iterations,
        converged,
        trace,
        flagged,
        inner_unconverged,
    })
}
