//! Confident-subset selection and per-node label degrees.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DistributionMatrix;
use crate::priors::{ebs_score, mps_score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Maximum probability score.
    Mps,
    /// Entropy-based score.
    Ebs,
}

impl Scheme {
    pub fn score(self, p: &DistributionMatrix) -> Scores {
        let values = match self {
            Scheme::Mps => mps_score(p),
            Scheme::Ebs => ebs_score(p),
        };
        Scores {
            scheme: self,
            values,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mps => "MPS",
            Scheme::Ebs => "EBS",
        }
    }
}

/// Solution regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    /// Clamp a confident subset, infer the rest.
    One,
    /// Every node's prior enters the fitting term.
    Two,
}

impl Setting {
    pub fn number(self) -> u8 {
        match self {
            Setting::One => 1,
            Setting::Two => 2,
        }
    }

    /// Class-coverage enforcement default for subset selection.
    pub fn default_coverage(self) -> bool {
        matches!(self, Setting::One)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMode {
    /// Nodes whose score is at least the threshold.
    Threshold(f64),
    /// The top `M` percent by score, `floor(M n / 100)` nodes but at least one.
    TopPercent(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected nodes in ascending order.
    pub nodes: Vec<usize>,
    /// Argmax label of each selected node, parallel to `nodes`.
    pub derived_labels: Vec<usize>,
    pub scheme: Scheme,
    pub mode: SelectionMode,
    /// Nodes added only to give every class a representative.
    pub forced: Vec<usize>,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Membership mask over all `n` nodes.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.nodes {
            m[i] = true;
        }
        m
    }
}

/// Node order by descending score, lower index first on ties.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Number of nodes selected by `TopPercent(pct)` out of `n`.
pub fn top_count(pct: f64, n: usize) -> usize {
    (libm::floor(pct * n as f64 / 100.0) as usize).clamp(1, n.max(1))
}

pub fn select_subset(
    scores: &Scores,
    mode: SelectionMode,
    p: &DistributionMatrix,
    ensure_coverage: bool,
) -> Result<SelectionResult> {
    let n = p.n();
    if scores.values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: scores.values.len(),
        });
    }
    let order = rank_by_score(&scores.values);
    let mut chosen = vec![false; n];
    match mode {
        SelectionMode::Threshold(th) => {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::InvalidParameter("threshold must lie in (0, 1]"));
            }
            for (i, &s) in scores.values.iter().enumerate() {
                chosen[i] = s >= th;
            }
        }
        SelectionMode::TopPercent(pct) => {
            if !(pct > 0.0 && pct <= 100.0) {
                return Err(Error::InvalidParameter("top percent must lie in (0, 100]"));
            }
            if n > 0 {
                for &i in &order[..top_count(pct, n)] {
                    chosen[i] = true;
                }
            }
        }
    }

    let labels = p.derived_labels();
    let mut forced = Vec::new();
    if ensure_coverage {
        let mut present = vec![false; p.k()];
        let mut covered = vec![false; p.k()];
        for i in 0..n {
            present[labels[i]] = true;
            if chosen[i] {
                covered[labels[i]] = true;
            }
        }
        for class in 0..p.k() {
            if present[class] && !covered[class] {
                // order is by score, so the first hit is the best node of this class
                let best = order.iter().copied().find(|&i| labels[i] == class).unwrap();
                chosen[best] = true;
                forced.push(best);
            }
        }
        forced.sort_unstable();
    }

    let nodes: Vec<usize> = (0..n).filter(|&i| chosen[i]).collect();
    if nodes.is_empty() {
        return Err(Error::EmptySelection);
    }
    let derived_labels = nodes.iter().map(|&i| labels[i]).collect();
    Ok(SelectionResult {
        nodes,
        derived_labels,
        scheme: scores.scheme,
        mode,
        forced,
    })
}

/// Per-node label degree `λ_ii`.
///
/// Setting 2 uses the scheme's score for every node. Setting 1 puts `1` on the
/// selected nodes and `0` elsewhere; `selection` is required there.
pub fn lambda_from_scheme(
    p: &DistributionMatrix,
    scheme: Scheme,
    setting: Setting,
    selection: Option<&SelectionResult>,
) -> Result<Vec<f64>> {
    match setting {
        Setting::Two => Ok(scheme.score(p).values),
        Setting::One => {
            let s =
                selection.ok_or(Error::InvalidParameter("setting 1 needs a selected subset"))?;
            let mut lambda = vec![0.0; p.n()];
            for &i in &s.nodes {
                lambda[i] = 1.0;
            }
            Ok(lambda)
        }
    }
}
