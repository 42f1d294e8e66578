//! Experiment specification: a flat `key = value` text file, with list values
//! comma-separated. Command-line flags are applied as further assignments, so
//! they override the file.

use std::path::{Path, PathBuf};

use priorprop_core::cv::CvRule;
use priorprop_core::method::Method;
use priorprop_core::selection::{Scheme, Setting};

use crate::error::{BenchError, Result};
use crate::synth::SyntheticBlockSpec;

/// Every accepted key with a one-line description (shown by `run --help`).
pub const KEYS: &[(&str, &str)] = &[
    ("graph", "edge-list file (u<TAB>v<TAB>w); omit to use the synthetic.* keys"),
    ("nodes", "node count override for the edge list"),
    ("labels", "truth labels file (node<TAB>class); required with `graph`"),
    ("priors", "priors CSV (node,p_0,...); omit to simulate priors from pmin/pmax"),
    ("pmin", "lower bound of the simulated true-class probability [0.4]"),
    ("pmax", "upper bound of the simulated true-class probability [0.99]"),
    ("synthetic.blocks", "nodes per block, e.g. 100,100 [100,100]"),
    ("synthetic.p_within", "edge probability inside a block [0.1]"),
    ("synthetic.p_across", "edge probability across blocks [0.005]"),
    ("synthetic.weight", "weight of every synthetic edge [1]"),
    ("synthetic.seed", "seed of the synthetic graph [0]"),
    ("methods", "GFHF,LGC,WvRN,WvRN-V1,WvRN-V2,IR,DIR,LSR or `all` (every method defined in a requested setting) [all]"),
    ("setting", "1, 2 or 1,2 [2]"),
    ("scheme", "MPS, EBS or MPS,EBS [EBS]"),
    ("subset_pcts", "subset sizes in percent [10,20,...,90]"),
    ("trials", "prior draws per cell [100]"),
    ("ir_trials", "trial count for IR only [trials]"),
    ("seed", "master seed [0]"),
    ("cv_folds", "cross-validation folds, 0 disables CV [5]"),
    ("cv_rule", "best, within or default (best in setting 1, within in setting 2) [default]"),
    ("cv_slack", "slack of the `within` rule in percent [5]"),
    ("cv_slack_mode", "relative or absolute [relative]"),
    ("grid.<METHOD>", "C grid bounds lo,hi for one method, doubling from lo"),
    ("eval_scope", "all_nodes or labeled_subset (nodes present in the labels file) [all_nodes]"),
    ("node_regularization", "true/false, class-normalized fitting targets for GFHF/LGC [false]"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File { path: PathBuf, nodes: Option<usize> },
    Synthetic(SyntheticBlockSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSource {
    File(PathBuf),
    Noise { p_min: f64, p_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalScope {
    AllNodes,
    LabeledSubset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub labels: Option<PathBuf>,
    pub priors: PriorSource,
    pub methods: Vec<Method>,
    pub settings: Vec<Setting>,
    pub schemes: Vec<Scheme>,
    pub subset_pcts: Vec<f64>,
    pub trials: usize,
    pub ir_trials: Option<usize>,
    pub seed: u64,
    pub cv_folds: usize,
    /// `None` picks the per-setting default.
    pub cv_rule: Option<CvRule>,
    pub grids: Vec<(Method, f64, f64)>,
    pub eval_scope: EvalScope,
    pub node_regularization: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            graph: GraphSource::Synthetic(SyntheticBlockSpec {
                blocks: vec![100, 100],
                p_within: 0.1,
                p_across: 0.005,
                weight: 1.0,
                seed: 0,
            }),
            labels: None,
            priors: PriorSource::Noise {
                p_min: 0.4,
                p_max: 0.99,
            },
            methods: Method::ALL
                .into_iter()
                .filter(|m| m.supports(Setting::Two))
                .collect(),
            settings: vec![Setting::Two],
            schemes: vec![Scheme::Ebs],
            subset_pcts: (1..=9).map(|i| f64::from(i) * 10.0).collect(),
            trials: 100,
            ir_trials: None,
            seed: 0,
            cv_folds: 5,
            cv_rule: None,
            grids: Vec::new(),
            eval_scope: EvalScope::AllNodes,
            node_regularization: false,
        }
    }
}

impl ExperimentSpec {
    /// Trial count for `method`.
    pub fn trials_for(&self, method: Method) -> usize {
        match (method, self.ir_trials) {
            (Method::Ir, Some(t)) => t.min(self.trials),
            _ => self.trials,
        }
    }

    pub fn grid_for(&self, method: Method) -> Option<(f64, f64)> {
        self.grids
            .iter()
            .find(|g| g.0 == method)
            .map(|g| (g.1, g.2))
    }

    /// (method, setting) pairs to run. Pairs a method does not support are
    /// skipped when another requested setting supports it; a method supported
    /// by none of the requested settings is an error.
    pub fn cells(&self) -> Result<Vec<(Method, Setting)>> {
        let mut out = Vec::new();
        for &m in &self.methods {
            let ok: Vec<Setting> = self
                .settings
                .iter()
                .copied()
                .filter(|&s| m.supports(s))
                .collect();
            if ok.is_empty() {
                let s = self.settings[0];
                return Err(priorprop_core::Error::UnsupportedCombination {
                    method: m.name(),
                    setting: s.number(),
                }
                .into());
            }
            out.extend(ok.into_iter().map(|s| (m, s)));
        }
        Ok(out)
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    let items: Option<Vec<T>> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect();
    items.filter(|v| !v.is_empty())
}

fn parse_setting(s: &str) -> Option<Setting> {
    match s {
        "1" => Some(Setting::One),
        "2" => Some(Setting::Two),
        _ => None,
    }
}

pub fn parse_scheme(s: &str) -> Option<Scheme> {
    match s.to_ascii_uppercase().as_str() {
        "MPS" => Some(Scheme::Mps),
        "EBS" => Some(Scheme::Ebs),
        _ => None,
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// Accumulates assignments; [`SpecBuilder::finish`] validates the result.
#[derive(Debug, Clone, Default)]
pub struct SpecBuilder {
    spec: ExperimentSpec,
    graph: Option<PathBuf>,
    nodes: Option<usize>,
    priors: Option<PathBuf>,
    p_min: Option<f64>,
    p_max: Option<f64>,
    cv_rule: Option<String>,
    cv_slack: Option<f64>,
    cv_absolute: bool,
    all_methods: bool,
}

impl SpecBuilder {
    pub fn new() -> Self {
        Self {
            all_methods: true,
            ..Self::default()
        }
    }

    /// Reads `key = value` lines; `#` starts a comment line.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::parse(path, idx as u64 + 1, "expected `key = value`"))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                BenchError::Spec(msg) => BenchError::parse(path, idx as u64 + 1, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || BenchError::Spec(format!("invalid value `{value}` for `{key}`"));
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<u64>().map_err(|_| bad());
        let s = &mut self.spec;
        match key {
            "graph" => self.graph = Some(PathBuf::from(value)),
            "nodes" => self.nodes = Some(int()? as usize),
            "labels" => s.labels = Some(PathBuf::from(value)),
            "priors" => self.priors = Some(PathBuf::from(value)),
            "pmin" => self.p_min = Some(num()?),
            "pmax" => self.p_max = Some(num()?),
            "synthetic.blocks" | "synthetic.p_within" | "synthetic.p_across"
            | "synthetic.weight" | "synthetic.seed" => {
                let mut sy = match &self.spec.graph {
                    GraphSource::Synthetic(sy) => sy.clone(),
                    GraphSource::File { .. } => ExperimentSpec::default_synthetic(),
                };
                match key {
                    "synthetic.blocks" => {
                        sy.blocks = parse_list(value, |v| v.parse().ok()).ok_or_else(bad)?
                    }
                    "synthetic.p_within" => sy.p_within = num()?,
                    "synthetic.p_across" => sy.p_across = num()?,
                    "synthetic.weight" => sy.weight = num()?,
                    _ => sy.seed = int()?,
                }
                self.spec.graph = GraphSource::Synthetic(sy);
            }
            "methods" => {
                self.all_methods = value.eq_ignore_ascii_case("all");
                if !self.all_methods {
                    s.methods = parse_list(value, |v| v.parse().ok()).ok_or_else(bad)?;
                }
            }
            "setting" => s.settings = parse_list(value, parse_setting).ok_or_else(bad)?,
            "scheme" => s.schemes = parse_list(value, parse_scheme).ok_or_else(bad)?,
            "subset_pcts" => {
                s.subset_pcts = parse_list(value, |v| v.parse().ok()).ok_or_else(bad)?
            }
            "trials" => s.trials = int()? as usize,
            "ir_trials" => s.ir_trials = Some(int()? as usize),
            "seed" => s.seed = int()?,
            "cv_folds" => s.cv_folds = int()? as usize,
            "cv_rule" => self.cv_rule = Some(value.to_ascii_lowercase()),
            "cv_slack" => self.cv_slack = Some(num()?),
            "cv_slack_mode" => {
                self.cv_absolute = match value {
                    "relative" => false,
                    "absolute" => true,
                    _ => return Err(bad()),
                }
            }
            "eval_scope" => {
                s.eval_scope = match value {
                    "all_nodes" => EvalScope::AllNodes,
                    "labeled_subset" => EvalScope::LabeledSubset,
                    _ => return Err(bad()),
                }
            }
            "node_regularization" => s.node_regularization = parse_bool(value).ok_or_else(bad)?,
            _ => {
                let Some(name) = key.strip_prefix("grid.") else {
                    return Err(BenchError::Spec(format!("unknown key `{key}`")));
                };
                let m: Method = name
                    .parse()
                    .map_err(|_| BenchError::Spec(format!("unknown method in `{key}`")))?;
                let b: Vec<f64> = parse_list(value, |v| v.parse().ok())
                    .filter(|b| b.len() == 2)
                    .ok_or_else(bad)?;
                s.grids.retain(|g| g.0 != m);
                s.grids.push((m, b[0], b[1]));
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<ExperimentSpec> {
        if let Some(path) = self.graph {
            self.spec.graph = GraphSource::File {
                path,
                nodes: self.nodes,
            };
            if self.spec.labels.is_none() {
                return Err(BenchError::Spec("`labels` is required with `graph`".into()));
            }
        } else if self.nodes.is_some() {
            return Err(BenchError::Spec(
                "`nodes` only applies to an edge-list graph".into(),
            ));
        }
        match (self.priors, self.p_min.is_some() || self.p_max.is_some()) {
            (Some(_), true) => {
                return Err(BenchError::Spec(
                    "give either `priors` or pmin/pmax, not both".into(),
                ))
            }
            (Some(p), false) => self.spec.priors = PriorSource::File(p),
            (None, _) => {
                self.spec.priors = PriorSource::Noise {
                    p_min: self.p_min.unwrap_or(0.4),
                    p_max: self.p_max.unwrap_or(0.99),
                }
            }
        }
        if self.all_methods {
            let settings = &self.spec.settings;
            self.spec.methods = Method::ALL
                .into_iter()
                .filter(|m| settings.iter().any(|&s| m.supports(s)))
                .collect();
        }
        let slack = self.cv_slack.unwrap_or(5.0);
        self.spec.cv_rule = match self.cv_rule.as_deref() {
            None | Some("default") => None,
            Some("best") => Some(CvRule::Best),
            Some("within") if self.cv_absolute => Some(CvRule::WithinAbsolute(slack)),
            Some("within") => Some(CvRule::WithinRelative(slack)),
            Some(other) => {
                return Err(BenchError::Spec(format!(
                    "invalid value `{other}` for `cv_rule`"
                )))
            }
        };
        if !(slack > 0.0 && slack <= 50.0) {
            return Err(BenchError::Spec("`cv_slack` must lie in (0, 50]".into()));
        }
        let s = &self.spec;
        if s.trials == 0 || s.ir_trials == Some(0) {
            return Err(BenchError::Spec("trial counts must be at least 1".into()));
        }
        if s.subset_pcts.iter().any(|&p| !(p > 0.0 && p <= 100.0)) {
            return Err(BenchError::Spec(
                "subset percents must lie in (0, 100]".into(),
            ));
        }
        if s.cv_folds == 1 {
            return Err(BenchError::Spec(
                "`cv_folds` must be 0 or at least 2".into(),
            ));
        }
        if let GraphSource::Synthetic(sy) = &s.graph {
            sy.validate()?;
        }
        s.cells()?;
        Ok(self.spec)
    }
}

impl ExperimentSpec {
    fn default_synthetic() -> SyntheticBlockSpec {
        match ExperimentSpec::default().graph {
            GraphSource::Synthetic(s) => s,
            GraphSource::File { .. } => unreachable!(),
        }
    }
}
