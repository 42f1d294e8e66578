//! Noisy k-fold cross-validation over a grid of fitting strengths.
//!
//! Accuracy is scored against derived (argmax-of-prior) labels, never against
//! ground truth, so the estimate is itself noisy.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::rng::substream;

pub const DEFAULT_FOLDS: usize = 5;

/// `[lo, 2 lo, 4 lo, ...]` up to the last value not above `hi` (relative slack 1e-9).
pub fn make_doubling_grid(lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(
            "grid bounds must satisfy 0 < lo < hi",
        ));
    }
    let cap = hi * (1.0 + 1e-9);
    let mut grid = Vec::new();
    let mut v = lo;
    while v <= cap {
        grid.push(v);
        v *= 2.0;
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvRule {
    /// Highest mean accuracy, smallest C on ties.
    Best,
    /// Smallest C whose accuracy is at least `(1 − δ/100)` times the best.
    WithinRelative(f64),
    /// Smallest C whose accuracy is at least the best minus `δ/100`.
    WithinAbsolute(f64),
}

impl CvRule {
    fn validate(self) -> Result<()> {
        match self {
            CvRule::Best => Ok(()),
            CvRule::WithinRelative(d) | CvRule::WithinAbsolute(d) => {
                if d > 0.0 && d <= 50.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "CV slack must lie in (0, 50] percent",
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub folds: usize,
    /// Strictly ascending positive values.
    pub grid: Vec<f64>,
    pub rule: CvRule,
    pub seed: u64,
}

impl CvPlan {
    pub fn new(grid: Vec<f64>, rule: CvRule, seed: u64) -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            grid,
            rule,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter("need at least two folds"));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("CV grid is empty"));
        }
        if self.grid.iter().any(|&c| !(c > 0.0) || !c.is_finite())
            || self.grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter(
                "CV grid must be positive and strictly ascending",
            ));
        }
        self.rule.validate()
    }
}

/// Index of the chosen grid value for a mean-accuracy curve.
pub fn choose_from_curve(curve: &[f64], rule: CvRule) -> Result<usize> {
    rule.validate()?;
    if curve.is_empty() {
        return Err(Error::InvalidParameter("CV grid is empty"));
    }
    let best = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = match rule {
        CvRule::Best => best,
        CvRule::WithinRelative(d) => (1.0 - d / 100.0) * best,
        CvRule::WithinAbsolute(d) => best - d / 100.0,
    };
    Ok(curve.iter().position(|&a| a >= threshold).unwrap())
}

/// Splits `nodes` into `k` disjoint folds whose sizes differ by at most one.
///
/// When every class present has at least `k` members the folds are
/// stratified by `labels`; otherwise the split ignores labels.
pub fn make_folds(
    nodes: &[usize],
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter("need at least two folds"));
    }
    if nodes.len() < k {
        return Err(Error::EmptyEvalSet);
    }
    let mut order = nodes.to_vec();
    order.shuffle(&mut substream(seed, 0));
    let classes = nodes.iter().map(|&i| labels[i]).max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &i in nodes {
        counts[labels[i]] += 1;
    }
    if counts.iter().all(|&c| c == 0 || c >= k) {
        // stable sort keeps the shuffled order within each class
        order.sort_by_key(|&i| labels[i]);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub chosen_index: usize,
    pub chosen: f64,
    pub grid: Vec<f64>,
    /// Mean held-out accuracy per grid value.
    pub curve: Vec<f64>,
    /// Held-out accuracy per grid value and fold.
    pub fold_accuracy: Vec<Vec<f64>>,
}

/// Scores every grid value on every fold and applies the plan's rule.
///
/// `runner(c, held_out)` must solve the problem with the held-out nodes
/// treated as unlabeled and return per-node scores; their argmax is compared
/// with `derived_labels` on the held-out nodes.
pub fn cv_select<F>(
    plan: &CvPlan,
    eval_nodes: &[usize],
    derived_labels: &[usize],
    mut runner: F,
) -> Result<CvResult>
where
    F: FnMut(f64, &[usize]) -> Result<Matrix>,
{
    plan.validate()?;
    let folds = make_folds(eval_nodes, derived_labels, plan.folds, plan.seed)?;
    let mut fold_accuracy = Vec::with_capacity(plan.grid.len());
    for &c in &plan.grid {
        let mut per_fold = Vec::with_capacity(folds.len());
        for held in &folds {
            let scores = runner(c, held)?;
            let hits = held
                .iter()
                .filter(|&&i| argmax(scores.row(i)) == derived_labels[i])
                .count();
            per_fold.push(hits as f64 / held.len() as f64);
        }
        fold_accuracy.push(per_fold);
    }
    let curve: Vec<f64> = fold_accuracy
        .iter()
        .map(|f| f.iter().sum::<f64>() / f.len() as f64)
        .collect();
    let chosen_index = choose_from_curve(&curve, plan.rule)?;
    Ok(CvResult {
        chosen_index,
        chosen: plan.grid[chosen_index],
        grid: plan.grid.clone(),
        curve,
        fold_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn doubling_grids() {
        let g = make_doubling_grid(0.078, 10.0).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g[7] - 9.984).abs() < 1e-12);
        assert_eq!(make_doubling_grid(1.0, 1.5).unwrap(), vec![1.0]);
        // 0.00153 · 2^15 = 50.1 and 2^16 overshoots 100
        let g = make_doubling_grid(0.00153, 100.0).unwrap();
        assert_eq!(g.len(), 16);
        assert!(*g.last().unwrap() <= 100.0);
        assert_eq!(make_doubling_grid(0.0625, 312.5).unwrap().len(), 13);
        assert!(make_doubling_grid(2.0, 1.0).is_err());
        assert!(make_doubling_grid(0.0, 1.0).is_err());
    }

    #[test]
    fn rules_on_reference_curves() {
        assert_eq!(
            choose_from_curve(&[0.80, 0.90, 0.90, 0.85], CvRule::Best).unwrap(),
            1
        );
        assert_eq!(
            choose_from_curve(&[0.86, 0.90, 0.88], CvRule::WithinRelative(5.0)).unwrap(),
            0
        );
        let flat = [0.7; 5];
        assert_eq!(choose_from_curve(&flat, CvRule::Best).unwrap(), 0);
        assert_eq!(
            choose_from_curve(&flat, CvRule::WithinRelative(5.0)).unwrap(),
            0
        );
        assert_eq!(
            choose_from_curve(&[0.5, 0.9], CvRule::WithinAbsolute(5.0)).unwrap(),
            1
        );
        assert!(choose_from_curve(&[], CvRule::Best).is_err());
        assert!(choose_from_curve(&[0.5], CvRule::WithinRelative(0.0)).is_err());
    }

    #[test]
    fn folds_are_stratified_when_possible() {
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 30)).collect();
        let nodes: Vec<usize> = (0..40).collect();
        let folds = make_folds(&nodes, &labels, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 8);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
    }

    #[test]
    fn too_few_nodes_for_folds() {
        assert_eq!(
            make_folds(&[0, 1, 2], &[0, 1, 0], 5, 0),
            Err(Error::EmptyEvalSet)
        );
    }

    #[test]
    fn cv_select_picks_from_runner_curve() {
        // runner that is right on the held-out nodes only for C >= 2
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let nodes: Vec<usize> = (0..20).collect();
        let plan = CvPlan::new(vec![1.0, 2.0, 4.0], CvRule::Best, 9);
        let res = cv_select(&plan, &nodes, &labels, |c, _| {
            let predicted: Vec<usize> = labels
                .iter()
                .map(|&l| if c >= 2.0 { l } else { 1 - l })
                .collect();
            Ok(Matrix::one_hot(&predicted, 2).unwrap())
        })
        .unwrap();
        assert_eq!(res.chosen, 2.0);
        assert_eq!(res.curve, vec![0.0, 1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn folds_partition(n in 5usize..80, k in 2usize..6, seed in any::<u64>(), classes in 1usize..4) {
            prop_assume!(n >= k);
            let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % classes).collect();
            let nodes: Vec<usize> = (0..n).collect();
            let folds = make_folds(&nodes, &labels, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, nodes);
            let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(&folds, &make_folds(&(0..n).collect::<Vec<_>>(), &labels, k, seed).unwrap());
        }

        #[test]
        fn within_rule_never_exceeds_best(curve in proptest::collection::vec(0.0f64..1.0, 1..20), d in 0.1f64..50.0) {
            let best = choose_from_curve(&curve, CvRule::Best).unwrap();
            prop_assert!(choose_from_curve(&curve, CvRule::WithinRelative(d)).unwrap() <= best);
            prop_assert!(choose_from_curve(&curve, CvRule::WithinAbsolute(d)).unwrap() <= best);
        }
    }
}
