//! Graph-based collective classification with inaccurate external class priors.
//!
//! The crate fuses a sparse relational graph with per-node class distributions
//! coming from some upstream classifier. Two regimes are supported:
//!
//! * **Setting 1**: a confident subset of nodes is selected (by maximum
//!   probability or entropy score), hard-clamped to its argmax label, and the
//!   remaining nodes are inferred transductively.
//! * **Setting 2**: every node's prior enters a data-fitting term, weighted by
//!   a per-node label degree derived from the same scores.
//!
//! Six solver families are provided: the harmonic-function (GFHF) and
//! local/global-consistency (LGC) quadratic methods on top of a generic
//! quadratic objective, weighted-vote relational neighbour with relaxation
//! labeling (WvRN and its two prior-aware variants), and the edge-region
//! family (IR, dual IR and least-squares regularization).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, synthetic
//! graphs and the experiment harness live in the `priorprop` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cv;
pub mod dense;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod method;
pub mod priors;
pub mod quadratic;
pub mod region;
pub mod rng;
pub mod selection;
pub mod wvrn;

pub use error::{Error, Result};
pub use graph::{LaplacianKind, SparseWeightedGraph};
pub use matrix::{DistributionMatrix, Matrix};
