//! Stochastic block graphs standing in for the benchmark datasets.

use rand::Rng;

use priorprop_core::rng::substream;
use priorprop_core::SparseWeightedGraph;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBlockSpec {
    /// Node count per class; block `b` holds consecutive ids.
    pub blocks: Vec<usize>,
    pub p_within: f64,
    pub p_across: f64,
    pub weight: f64,
    pub seed: u64,
}

impl SyntheticBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() < 2 || self.blocks.contains(&0) {
            return Err(BenchError::Spec("need at least two nonempty blocks".into()));
        }
        for p in [self.p_within, self.p_across] {
            if !(0.0..=1.0).contains(&p) {
                return Err(BenchError::Spec(format!(
                    "edge probability {p} outside [0, 1]"
                )));
            }
        }
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(BenchError::Spec("edge weight must be positive".into()));
        }
        Ok(())
    }
}

/// Draws each unordered pair independently; row `u` uses random stream `u`,
/// so the graph does not depend on iteration order.
pub fn generate_block_graph(
    spec: &SyntheticBlockSpec,
) -> Result<(SparseWeightedGraph, Vec<usize>)> {
    spec.validate()?;
    let truth: Vec<usize> = spec
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &n)| std::iter::repeat_n(b, n))
        .collect();
    let n = truth.len();
    let mut edges = Vec::new();
    for u in 0..n {
        let mut rng = substream(spec.seed, u as u64);
        for v in u + 1..n {
            let p = if truth[u] == truth[v] {
                spec.p_within
            } else {
                spec.p_across
            };
            if rng.gen::<f64>() < p {
                edges.push((u, v, spec.weight));
            }
        }
    }
    Ok((SparseWeightedGraph::build(n, &edges)?, truth))
}
