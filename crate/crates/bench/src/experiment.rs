//! Trial orchestration: prior draws, per-cell tuning and solving, scoring.

use std::time::Instant;

use rayon::prelude::*;

use priorprop_core::method::{solve_cell, Method, Problem, SolveOptions, TuningPlan};
use priorprop_core::priors::{accuracy, generate_noisy_priors, NoiseSpec};
use priorprop_core::rng::derive_seed;
use priorprop_core::selection::{Scheme, Setting};
use priorprop_core::{DistributionMatrix, Matrix, SparseWeightedGraph};

use crate::error::{BenchError, Result};
use crate::io::{read_edge_list, read_labels, read_priors, TruthLabels};
use crate::spec::{EvalScope, ExperimentSpec, GraphSource, PriorSource};
use crate::synth::generate_block_graph;

/// One solved cell of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub trial: usize,
    pub method: Method,
    pub setting: Setting,
    pub scheme: Scheme,
    pub subset_pct: f64,
    pub c_chosen: Option<f64>,
    pub trial_seed: u64,
    pub accuracy: f64,
    pub initial_accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds spent tuning and solving; kept out of `records.csv`.
    pub wall_time: f64,
}

/// Identifies a cell in the optional diagnostic outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub trial: usize,
    pub method: Method,
    pub setting: Setting,
    pub scheme: Scheme,
    pub subset_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvTraceRow {
    pub cell: CellKey,
    pub c: f64,
    /// `None` marks the per-C mean row.
    pub fold: Option<usize>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTraceRow {
    pub cell: CellKey,
    pub iter: usize,
    pub after_region: f64,
    pub after_node: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub cv_trace: bool,
    pub trace: bool,
    pub dump_scores: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub cv_trace: Vec<CvTraceRow>,
    pub trace: Vec<ObjectiveTraceRow>,
    pub scores: Vec<(CellKey, Matrix)>,
}

impl RunOutput {
    fn append(&mut self, other: RunOutput) {
        self.records.extend(other.records);
        self.cv_trace.extend(other.cv_trace);
        self.trace.extend(other.trace);
        self.scores.extend(other.scores);
    }
}

/// Graph, truth and (if read from disk) fixed priors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseWeightedGraph,
    pub truth: TruthLabels,
    pub priors: Option<DistributionMatrix>,
    pub self_loops_dropped: usize,
}

pub fn load_dataset(spec: &ExperimentSpec) -> Result<Dataset> {
    let (graph, truth, self_loops_dropped) = match &spec.graph {
        GraphSource::Synthetic(sy) => {
            let (g, truth) = generate_block_graph(sy)?;
            (g, TruthLabels::complete(&truth), 0)
        }
        GraphSource::File { path, nodes } => {
            let (g, report) = read_edge_list(path, *nodes)?;
            let labels = spec
                .labels
                .as_deref()
                .ok_or_else(|| BenchError::Spec("`labels` is required".into()))?;
            let truth = read_labels(labels)?.resized(g.n())?;
            (g, truth, report.self_loops_dropped)
        }
    };
    let priors = match &spec.priors {
        PriorSource::File(path) => {
            let p = read_priors(path)?;
            if p.n() != graph.n() {
                return Err(BenchError::Spec(format!(
                    "priors cover {} nodes, graph has {}",
                    p.n(),
                    graph.n()
                )));
            }
            Some(p)
        }
        PriorSource::Noise { .. } => None,
    };
    Ok(Dataset {
        graph,
        truth,
        priors,
        self_loops_dropped,
    })
}

fn eval_nodes(spec: &ExperimentSpec, truth: &TruthLabels) -> Result<Vec<usize>> {
    match spec.eval_scope {
        EvalScope::AllNodes => {
            truth.require_all()?;
            Ok((0..truth.labels.len()).collect())
        }
        EvalScope::LabeledSubset => Ok(truth.labeled_nodes()),
    }
}

fn trial_priors(
    spec: &ExperimentSpec,
    data: &Dataset,
    trial_seed: u64,
) -> Result<DistributionMatrix> {
    match (&data.priors, &spec.priors) {
        (Some(p), _) => Ok(p.clone()),
        (None, PriorSource::Noise { p_min, p_max }) => {
            let labels = data.truth.require_all()?;
            let k = data.truth.classes.max(2);
            Ok(generate_noisy_priors(
                &labels,
                k,
                &NoiseSpec::new(*p_min, *p_max, trial_seed)?,
            )?)
        }
        (None, PriorSource::File(_)) => unreachable!("file priors are loaded with the dataset"),
    }
}

fn run_trial(
    spec: &ExperimentSpec,
    data: &Dataset,
    trial: usize,
    opts: RunOptions,
) -> Result<RunOutput> {
    let trial_seed = derive_seed(spec.seed, trial as u64);
    let g = &data.graph;
    let priors = trial_priors(spec, data, trial_seed)?;
    let eval = eval_nodes(spec, &data.truth)?;
    let truth = data.truth.filled();
    let initial_accuracy = accuracy(priors.matrix(), &truth, &eval)?;
    let cells: Vec<(Method, Setting)> = spec
        .cells()?
        .into_iter()
        .filter(|&(m, _)| trial < spec.trials_for(m))
        .collect();
    let solve_opts = SolveOptions {
        node_regularization: spec.node_regularization,
        trace: opts.trace,
    };
    let mut out = RunOutput::default();
    for &scheme in &spec.schemes {
        for &setting in &spec.settings {
            for &pct in &spec.subset_pcts {
                let methods: Vec<Method> = cells
                    .iter()
                    .filter(|c| c.1 == setting)
                    .map(|c| c.0)
                    .collect();
                if methods.is_empty() {
                    continue;
                }
                let problem = Problem::new(g, priors.clone(), setting, scheme, pct)?;
                for method in methods {
                    let plan = TuningPlan {
                        folds: (spec.cv_folds > 0).then_some(spec.cv_folds),
                        rule: spec.cv_rule,
                        grid_bounds: method
                            .default_grid_bounds(setting)
                            .and(spec.grid_for(method)),
                        eval_pct: pct,
                        seed: derive_seed(trial_seed, 1),
                    };
                    let start = Instant::now();
                    let res = solve_cell(method, &problem, &plan, &solve_opts)?;
                    let wall_time = start.elapsed().as_secs_f64();
                    let cell = CellKey {
                        trial,
                        method,
                        setting,
                        scheme,
                        subset_pct: pct,
                    };
                    out.records.push(RunRecord {
                        trial,
                        method,
                        setting,
                        scheme,
                        subset_pct: pct,
                        c_chosen: res.c,
                        trial_seed,
                        accuracy: accuracy(&res.output.scores, &truth, &eval)?,
                        initial_accuracy,
                        iterations: res.output.iterations,
                        converged: res.output.converged,
                        wall_time,
                    });
                    if let (true, Some(cv)) = (opts.cv_trace, &res.cv) {
                        for (gi, per_fold) in cv.fold_accuracy.iter().enumerate() {
                            let c = cv.grid[gi];
                            for (f, &a) in per_fold.iter().enumerate() {
                                out.cv_trace.push(CvTraceRow {
                                    cell: cell.clone(),
                                    c,
                                    fold: Some(f),
                                    accuracy: a,
                                });
                            }
                            out.cv_trace.push(CvTraceRow {
                                cell: cell.clone(),
                                c,
                                fold: None,
                                accuracy: cv.curve[gi],
                            });
                        }
                    }
                    for t in &res.output.trace {
                        out.trace.push(ObjectiveTraceRow {
                            cell: cell.clone(),
                            iter: t.iter,
                            after_region: t.after_region,
                            after_node: t.after_node,
                            delta: t.delta,
                        });
                    }
                    if opts.dump_scores {
                        out.scores.push((cell, res.output.scores));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs every trial (in parallel) and concatenates the results in trial order.
pub fn run_experiment(
    spec: &ExperimentSpec,
    data: &Dataset,
    opts: RunOptions,
) -> Result<RunOutput> {
    let per_trial: Vec<RunOutput> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, data, t, opts))
        .collect::<Result<_>>()?;
    let mut out = RunOutput::default();
    for t in per_trial {
        out.append(t);
    }
    Ok(out)
}

/// Mean and population standard deviation of accuracy per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub setting: Setting,
    pub scheme: Scheme,
    pub subset_pct: f64,
    pub count: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_initial_accuracy: f64,
}

pub fn aggregate(records: &[RunRecord]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    // positive floats order like their bit patterns
    let mut groups: BTreeMap<(Setting, Scheme, Method, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.setting, r.scheme, r.method, r.subset_pct.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let n = rs.len() as f64;
            let mean = rs.iter().map(|r| r.accuracy).sum::<f64>() / n;
            let var = rs.iter().map(|r| (r.accuracy - mean).powi(2)).sum::<f64>() / n;
            let first = rs[0];
            SummaryRow {
                method: first.method,
                setting: first.setting,
                scheme: first.scheme,
                subset_pct: first.subset_pct,
                count: rs.len(),
                mean_accuracy: mean,
                sd_accuracy: var.sqrt(),
                mean_initial_accuracy: rs.iter().map(|r| r.initial_accuracy).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Human-friendly scores file name for a cell.
pub fn score_file_name(cell: &CellKey) -> String {
    format!(
        "{}_s{}_{}_{}_t{}.csv",
        cell.method.name(),
        cell.setting.number(),
        cell.scheme.name(),
        cell.subset_pct,
        cell.trial
    )
}
