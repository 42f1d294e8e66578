//! The eight methods behind one interface, plus the per-cell pipeline used by
//! the experiment harness: build the problem from priors, tune the fitting
//! strength by cross-validation where the method has one, then solve.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cv::{cv_select, make_doubling_grid, CvPlan, CvResult, CvRule, DEFAULT_FOLDS};
use crate::error::{Error, Result};
use crate::graph::SparseWeightedGraph;
use crate::matrix::{DistributionMatrix, Matrix};
use crate::quadratic::{self, build_node_regularization};
use crate::region::{run_region_method, RegionMethod, RegionMethodConfig, TraceRow};
use crate::selection::{
    lambda_from_scheme, rank_by_score, select_subset, top_count, Scheme, SelectionMode,
    SelectionResult, Setting,
};
use crate::wvrn::{wvrn, WvrnConfig, WvrnVariant, DEFAULT_NU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gfhf,
    Lgc,
    Wvrn,
    WvrnV1,
    WvrnV2,
    Ir,
    Dir,
    Lsr,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Gfhf,
        Method::Lgc,
        Method::Wvrn,
        Method::WvrnV1,
        Method::WvrnV2,
        Method::Ir,
        Method::Dir,
        Method::Lsr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gfhf => "GFHF",
            Method::Lgc => "LGC",
            Method::Wvrn => "WvRN",
            Method::WvrnV1 => "WvRN-V1",
            Method::WvrnV2 => "WvRN-V2",
            Method::Ir => "IR",
            Method::Dir => "DIR",
            Method::Lsr => "LSR",
        }
    }

    pub fn supports(self, setting: Setting) -> bool {
        match self {
            Method::Wvrn => setting == Setting::One,
            Method::WvrnV1 | Method::WvrnV2 => setting == Setting::Two,
            _ => true,
        }
    }

    pub fn check(self, setting: Setting) -> Result<()> {
        if self.supports(setting) {
            Ok(())
        } else {
            Err(Error::UnsupportedCombination {
                method: self.name(),
                setting: setting.number(),
            })
        }
    }

    /// C range searched by cross-validation, if the method is tuned in `setting`.
    pub fn default_grid_bounds(self, setting: Setting) -> Option<(f64, f64)> {
        match (self, setting) {
            (Method::Lgc, _) | (Method::WvrnV2, Setting::Two) => Some((0.00153, 100.0)),
            (Method::Ir, Setting::Two) => Some((0.0625, 312.5)),
            (Method::Dir | Method::Lsr, Setting::Two) => Some((0.078, 10.0)),
            _ => None,
        }
    }

    /// Parameter used when no tuning happens (GFHF's C, WvRN-V1's ν).
    pub fn fixed_parameter(self) -> Option<f64> {
        match self {
            Method::Gfhf => Some(1.0),
            Method::WvrnV1 => Some(DEFAULT_NU),
            _ => None,
        }
    }

    fn region(self) -> Option<RegionMethod> {
        match self {
            Method::Ir => Some(RegionMethod::Ir),
            Method::Dir => Some(RegionMethod::Dir),
            Method::Lsr => Some(RegionMethod::Lsr),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(Error::InvalidParameter("unknown method"))
    }
}

/// Everything a method sees of one experimental cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<'g> {
    pub graph: &'g SparseWeightedGraph,
    pub priors: DistributionMatrix,
    pub setting: Setting,
    pub scheme: Scheme,
    /// Label degree per node.
    pub lambda: Vec<f64>,
    /// Clamped subset (setting 1 only).
    pub selection: Option<SelectionResult>,
    /// Derived labels of the original priors, used as CV targets.
    pub derived_labels: Vec<usize>,
}

impl<'g> Problem<'g> {
    /// Setting 1 clamps the top `subset_pct` percent by `scheme` (with class
    /// coverage); setting 2 weighs every node by its score.
    pub fn new(
        graph: &'g SparseWeightedGraph,
        priors: DistributionMatrix,
        setting: Setting,
        scheme: Scheme,
        subset_pct: f64,
    ) -> Result<Self> {
        if priors.n() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: priors.n(),
            });
        }
        let selection = match setting {
            Setting::One => Some(select_subset(
                &scheme.score(&priors),
                SelectionMode::TopPercent(subset_pct),
                &priors,
                setting.default_coverage(),
            )?),
            Setting::Two => None,
        };
        let lambda = lambda_from_scheme(&priors, scheme, setting, selection.as_ref())?;
        let derived_labels = priors.derived_labels();
        Ok(Self {
            graph,
            priors,
            setting,
            scheme,
            lambda,
            selection,
            derived_labels,
        })
    }

    /// Nodes scored during cross-validation: the clamped subset in setting 1,
    /// the top `subset_pct` percent by score in setting 2.
    pub fn cv_eval_nodes(&self, subset_pct: f64) -> Vec<usize> {
        match &self.selection {
            Some(s) => s.nodes.clone(),
            None => {
                let scores = self.scheme.score(&self.priors);
                let mut top: Vec<usize> =
                    rank_by_score(&scores.values)[..top_count(subset_pct, self.graph.n())].to_vec();
                top.sort_unstable();
                top
            }
        }
    }

    /// Copy in which `held_out` carries no label information: zero label
    /// degree, no clamp, and (setting 2) the prior row replaced by the class
    /// distribution of the remaining nodes' derived labels.
    pub fn holding_out(&self, held_out: &[usize]) -> Result<Self> {
        let n = self.graph.n();
        let mut held = vec![false; n];
        for &i in held_out {
            if i >= n {
                return Err(Error::NodeOutOfRange { index: i, n });
            }
            held[i] = true;
        }
        let mut out = self.clone();
        for &i in held_out {
            out.lambda[i] = 0.0;
        }
        match &mut out.selection {
            Some(s) => {
                let keep: Vec<(usize, usize)> = s
                    .nodes
                    .iter()
                    .zip(&s.derived_labels)
                    .filter(|(i, _)| !held[**i])
                    .map(|(&i, &c)| (i, c))
                    .collect();
                if keep.is_empty() {
                    return Err(Error::EmptySelection);
                }
                s.nodes = keep.iter().map(|p| p.0).collect();
                s.derived_labels = keep.iter().map(|p| p.1).collect();
                s.forced.retain(|&i| !held[i]);
            }
            None => {
                let k = self.priors.k();
                let mut prior = vec![0.0; k];
                let mut count = 0usize;
                for i in (0..n).filter(|&i| !held[i]) {
                    prior[self.derived_labels[i]] += 1.0;
                    count += 1;
                }
                if count == 0 {
                    return Err(Error::EmptySelection);
                }
                prior.iter_mut().for_each(|p| *p /= count as f64);
                let mut m = self.priors.matrix().clone();
                for &i in held_out {
                    m.row_mut(i).copy_from_slice(&prior);
                }
                out.priors = DistributionMatrix::with_tolerance(m, 1e-9)?;
            }
        }
        Ok(out)
    }

    /// Fitting labels for the quadratic methods: one-hot derived labels in
    /// setting 1, the prior distributions in setting 2.
    fn quadratic_labels(&self) -> Matrix {
        match self.setting {
            Setting::One => Matrix::one_hot(&self.derived_labels, self.priors.k())
                .expect("derived labels are in range"),
            Setting::Two => self.priors.matrix().clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveOptions {
    pub node_regularization: bool,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    /// Score or distribution per node; predictions are row argmaxes.
    pub scores: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// Region methods only, when tracing was requested.
    pub trace: Vec<TraceRow>,
}

/// Solves `problem` with `method`.
///
/// `c` is the fitting strength for LGC and the region methods and maps to
/// `ν = 1/(1 + c)` for WvRN-V2; GFHF, WvRN and WvRN-V1 ignore it, as do the
/// region methods in setting 1.
pub fn run_method(
    method: Method,
    problem: &Problem<'_>,
    c: f64,
    opts: &SolveOptions,
) -> Result<MethodOutput> {
    method.check(problem.setting)?;
    let g = problem.graph;
    let done = |scores: Matrix, iterations, converged| MethodOutput {
        scores,
        iterations,
        converged,
        trace: Vec::new(),
    };
    match method {
        Method::Gfhf | Method::Lgc => {
            let y = problem.quadratic_labels();
            let data = build_node_regularization(g, &problem.lambda, &y, opts.node_regularization)?;
            let sol = if method == Method::Gfhf {
                quadratic::solve_gfhf(
                    g,
                    &problem.lambda,
                    &data.z,
                    quadratic::DEFAULT_TOL,
                    quadratic::DEFAULT_MAX_ITER,
                )?
            } else {
                quadratic::solve_lgc(
                    g,
                    &problem.lambda,
                    &data.z,
                    c,
                    quadratic::DEFAULT_TOL,
                    quadratic::DEFAULT_MAX_ITER,
                )?
            };
            Ok(done(sol.scores, sol.iterations, sol.converged))
        }
        Method::Wvrn | Method::WvrnV1 | Method::WvrnV2 => {
            let (variant, cfg) = match method {
                Method::Wvrn => (WvrnVariant::Base, WvrnConfig::default()),
                Method::WvrnV1 => (WvrnVariant::V1, WvrnConfig::default()),
                _ => (WvrnVariant::V2, WvrnConfig::with_nu(1.0 / (1.0 + c))),
            };
            let out = wvrn(
                g,
                &problem.priors,
                problem.selection.as_ref(),
                variant,
                Some(&problem.lambda),
                &cfg,
            )?;
            Ok(done(
                out.estimates.into_matrix(),
                out.iterations,
                out.converged,
            ))
        }
        Method::Ir | Method::Dir | Method::Lsr => {
            let region = method.region().unwrap();
            let mut cfg =
                RegionMethodConfig::new(region, problem.setting, c, problem.lambda.clone());
            cfg.trace = opts.trace;
            let out = run_region_method(g, &cfg, &problem.priors, problem.selection.as_ref())?;
            Ok(MethodOutput {
                scores: out.estimates.into_matrix(),
                iterations: out.iterations,
                converged: out.converged,
                trace: out.trace,
            })
        }
    }
}

/// Default selection rule: best accuracy in setting 1, smallest C within 5 %
/// of the best in setting 2.
pub fn default_rule(setting: Setting) -> CvRule {
    match setting {
        Setting::One => CvRule::Best,
        Setting::Two => CvRule::WithinRelative(5.0),
    }
}

/// How the fitting strength of one cell is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningPlan {
    /// Fold count; `None` disables CV and solves at the grid's smallest value.
    pub folds: Option<usize>,
    pub rule: Option<CvRule>,
    /// Overrides the method's default grid bounds.
    pub grid_bounds: Option<(f64, f64)>,
    /// Percent of top-scored nodes scored by CV in setting 2.
    pub eval_pct: f64,
    pub seed: u64,
}

impl Default for TuningPlan {
    fn default() -> Self {
        Self {
            folds: Some(DEFAULT_FOLDS),
            rule: None,
            grid_bounds: None,
            eval_pct: 30.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub output: MethodOutput,
    /// Tuned (or fixed) parameter; `None` when the method has none in this setting.
    pub c: Option<f64>,
    pub cv: Option<CvResult>,
}

/// Tunes (where applicable) and solves one method on one problem.
pub fn solve_cell(
    method: Method,
    problem: &Problem<'_>,
    plan: &TuningPlan,
    opts: &SolveOptions,
) -> Result<CellResult> {
    method.check(problem.setting)?;
    let Some((lo, hi)) = plan
        .grid_bounds
        .or(method.default_grid_bounds(problem.setting))
    else {
        let c = method.fixed_parameter();
        let output = run_method(method, problem, c.unwrap_or(1.0), opts)?;
        // only GFHF's C is a fitting strength worth reporting
        return Ok(CellResult {
            output,
            c: c.filter(|_| method == Method::Gfhf),
            cv: None,
        });
    };
    let grid = make_doubling_grid(lo, hi)?;
    let Some(folds) = plan.folds else {
        let output = run_method(method, problem, grid[0], opts)?;
        return Ok(CellResult {
            output,
            c: Some(grid[0]),
            cv: None,
        });
    };
    let eval = problem.cv_eval_nodes(plan.eval_pct);
    if eval.len() < 2 {
        let output = run_method(method, problem, grid[0], opts)?;
        return Ok(CellResult {
            output,
            c: Some(grid[0]),
            cv: None,
        });
    }
    let cv_plan = CvPlan {
        // small subsets get leave-one-out style folds rather than empty ones
        folds: folds.min(eval.len()),
        grid,
        rule: plan.rule.unwrap_or(default_rule(problem.setting)),
        seed: plan.seed,
    };
    let quiet = SolveOptions {
        trace: false,
        ..*opts
    };
    let cv = cv_select(&cv_plan, &eval, &problem.derived_labels, |c, held| {
        Ok(run_method(method, &problem.holding_out(held)?, c, &quiet)?.scores)
    })?;
    let output = run_method(method, problem, cv.chosen, opts)?;
    Ok(CellResult {
        output,
        c: Some(cv.chosen),
        cv: Some(cv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{accuracy, generate_noisy_priors, NoiseSpec};

    fn two_blocks() -> (SparseWeightedGraph, Vec<usize>) {
        let mut edges = Vec::new();
        for b in 0..2 {
            for i in 0..10 {
                for j in i + 1..10 {
                    if (i + j) % 3 != 0 {
                        edges.push((b * 10 + i, b * 10 + j, 1.0));
                    }
                }
            }
        }
        edges.push((0, 10, 1.0));
        let truth = (0..20).map(|i| i / 10).collect();
        (SparseWeightedGraph::build(20, &edges).unwrap(), truth)
    }

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("wvrn-v2".parse::<Method>().is_ok());
        assert!("foo".parse::<Method>().is_err());
    }

    #[test]
    fn unsupported_combinations() {
        let (g, truth) = two_blocks();
        let p = DistributionMatrix::one_hot(&truth, 2).unwrap();
        let prob = Problem::new(&g, p.clone(), Setting::One, Scheme::Mps, 50.0).unwrap();
        for m in [Method::WvrnV1, Method::WvrnV2] {
            assert_eq!(
                run_method(m, &prob, 1.0, &SolveOptions::default()).unwrap_err(),
                Error::UnsupportedCombination {
                    method: m.name(),
                    setting: 1
                }
            );
        }
        let prob = Problem::new(&g, p, Setting::Two, Scheme::Mps, 50.0).unwrap();
        assert!(run_method(Method::Wvrn, &prob, 1.0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn full_clamp_reproduces_prior_labels() {
        let (g, truth) = two_blocks();
        let p = generate_noisy_priors(&truth, 2, &NoiseSpec::new(0.3, 0.9, 4).unwrap()).unwrap();
        let prob = Problem::new(&g, p.clone(), Setting::One, Scheme::Ebs, 100.0).unwrap();
        let all: Vec<usize> = (0..20).collect();
        let initial = accuracy(p.matrix(), &truth, &all).unwrap();
        let out = run_method(Method::Gfhf, &prob, 1.0, &SolveOptions::default()).unwrap();
        assert_eq!(accuracy(&out.scores, &truth, &all).unwrap(), initial);
    }

    #[test]
    fn every_method_solves_a_cell() {
        let (g, truth) = two_blocks();
        let p = generate_noisy_priors(&truth, 2, &NoiseSpec::new(0.4, 0.99, 2).unwrap()).unwrap();
        for setting in [Setting::One, Setting::Two] {
            let prob = Problem::new(&g, p.clone(), setting, Scheme::Ebs, 30.0).unwrap();
            for m in Method::ALL.into_iter().filter(|m| m.supports(setting)) {
                let res =
                    solve_cell(m, &prob, &TuningPlan::default(), &SolveOptions::default()).unwrap();
                assert_eq!(res.output.scores.rows(), 20, "{m}");
                if let (Some(c), Some((lo, hi))) = (res.c, m.default_grid_bounds(setting)) {
                    assert!(make_doubling_grid(lo, hi).unwrap().contains(&c));
                }
            }
        }
    }

    #[test]
    fn holding_out_removes_information() {
        let (g, truth) = two_blocks();
        let p = generate_noisy_priors(&truth, 2, &NoiseSpec::new(0.4, 0.99, 2).unwrap()).unwrap();
        let prob = Problem::new(&g, p.clone(), Setting::Two, Scheme::Mps, 30.0).unwrap();
        let h = prob.holding_out(&[3, 15]).unwrap();
        assert_eq!(h.lambda[3], 0.0);
        assert_eq!(h.lambda[15], 0.0);
        assert_eq!(h.priors.row(3), h.priors.row(15));
        assert_eq!(h.priors.row(4), p.row(4));
        let prob = Problem::new(&g, p, Setting::One, Scheme::Mps, 30.0).unwrap();
        let s = prob.selection.as_ref().unwrap();
        let held = [s.nodes[0]];
        let h = prob.holding_out(&held).unwrap();
        assert!(!h.selection.unwrap().nodes.contains(&held[0]));
        assert_eq!(h.lambda[held[0]], 0.0);
    }
}
