//! Plain-text file formats: tab-separated edge lists and truth labels, CSV
//! priors and score dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use priorprop_core::graph::BuildReport;
use priorprop_core::{DistributionMatrix, Matrix, SparseWeightedGraph};

use crate::error::{BenchError, Result};

/// Tolerance for priors read from disk before exact renormalization.
pub const PRIOR_TOL: f64 = 1e-6;

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    let line = e.position().map_or(0, |p| p.line());
    BenchError::parse(path, line, e.to_string())
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    rec: &csv::StringRecord,
    i: usize,
    what: &str,
) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| BenchError::parse(path, line, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| BenchError::parse(path, line, format!("bad {what} `{raw}`")))
}

/// Reads `u<TAB>v<TAB>w` lines; `#` lines are comments. The node count is one
/// more than the largest id unless `nodes` asks for more.
pub fn read_edge_list(
    path: &Path,
    nodes: Option<usize>,
) -> Result<(SparseWeightedGraph, BuildReport)> {
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for rec in tsv_reader(path)?.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(BenchError::parse(
                path,
                line,
                format!("expected 3 fields, found {}", rec.len()),
            ));
        }
        let u: usize = field(path, line, &rec, 0, "node id")?;
        let v: usize = field(path, line, &rec, 1, "node id")?;
        let w: f64 = field(path, line, &rec, 2, "weight")?;
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let needed = max_id.map_or(0, |m| m + 1);
    let n = match nodes {
        Some(n) if n < needed => {
            return Err(BenchError::Spec(format!(
                "--nodes {n} is smaller than the largest node id + 1 ({needed})"
            )))
        }
        Some(n) => n,
        None => needed,
    };
    Ok(SparseWeightedGraph::from_edges(n, &edges)?)
}

/// Writes every undirected edge once, lower id first.
pub fn write_edge_list(path: &Path, g: &SparseWeightedGraph) -> Result<()> {
    let mut out = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(out, "# nodes={} edges={}", g.n(), g.edge_count())?;
        for (u, v, w) in g.edges() {
            writeln!(out, "{u}\t{v}\t{w}")?;
        }
        out.flush()
    };
    emit().map_err(|e| BenchError::io(path, e))
}

/// Ground-truth classes; nodes absent from the file are unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthLabels {
    pub labels: Vec<Option<usize>>,
    pub classes: usize,
}

impl TruthLabels {
    pub fn complete(labels: &[usize]) -> Self {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels: labels.iter().map(|&c| Some(c)).collect(),
            classes,
        }
    }

    /// Pads (never truncates) to `n` nodes.
    pub fn resized(mut self, n: usize) -> Result<Self> {
        if self.labels.len() > n {
            return Err(BenchError::Spec(format!(
                "labels mention node {} but the graph has {n} nodes",
                self.labels.len() - 1
            )));
        }
        self.labels.resize(n, None);
        Ok(self)
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    /// All labels, or an error naming the first unlabeled node.
    pub fn require_all(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| BenchError::Spec(format!("node {i} has no truth label"))))
            .collect()
    }

    /// Labels with unlabeled nodes mapped to class 0; only meaningful on labeled nodes.
    pub fn filled(&self) -> Vec<usize> {
        self.labels.iter().map(|c| c.unwrap_or(0)).collect()
    }
}

/// Reads `node<TAB>class` lines.
pub fn read_labels(path: &Path) -> Result<TruthLabels> {
    let mut labels: Vec<Option<usize>> = Vec::new();
    for rec in tsv_reader(path)?.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(BenchError::parse(
                path,
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let node: usize = field(path, line, &rec, 0, "node id")?;
        let class: usize = field(path, line, &rec, 1, "class")?;
        if labels.len() <= node {
            labels.resize(node + 1, None);
        }
        if labels[node].replace(class).is_some() {
            return Err(BenchError::parse(
                path,
                line,
                format!("node {node} labeled twice"),
            ));
        }
    }
    let classes = labels.iter().flatten().max().map_or(0, |m| m + 1);
    Ok(TruthLabels { labels, classes })
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        for (i, c) in labels.iter().enumerate() {
            writeln!(out, "{i}\t{c}")?;
        }
        out.flush()
    };
    emit().map_err(|e| BenchError::io(path, e))
}

fn write_matrix(path: &Path, prefix: &str, m: &Matrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["node".to_string()];
    header.extend((0..m.cols()).map(|k| format!("{prefix}_{k}")));
    let write = |w: &mut csv::Writer<_>| -> csv::Result<()> {
        w.write_record(&header)?;
        for i in 0..m.rows() {
            let mut rec = vec![i.to_string()];
            rec.extend(m.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| BenchError::io(path, e.into()))
}

/// Priors CSV: header `node,p_0,...,p_{K-1}`, one row per node.
pub fn write_priors(path: &Path, p: &DistributionMatrix) -> Result<()> {
    write_matrix(path, "p", p.matrix())
}

/// Raw score matrix, header `node,f_0,...`.
pub fn write_scores(path: &Path, f: &Matrix) -> Result<()> {
    write_matrix(path, "f", f)
}

/// Reads a priors CSV. Rows may come in any order but must cover nodes
/// `0..n` exactly once; each row must be a distribution within
/// [`PRIOR_TOL`] and is then renormalized exactly.
pub fn read_priors(path: &Path) -> Result<DistributionMatrix> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let k = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("node".to_string())
        .chain((0..k).map(|c| format!("p_{c}")))
        .collect();
    if k < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(BenchError::parse(
            path,
            1,
            "header must be `node,p_0,...,p_{K-1}` with K >= 2",
        ));
    }
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let node: usize = field(path, line, &rec, 0, "node id")?;
        let row = (1..=k)
            .map(|c| field(path, line, &rec, c, "probability"))
            .collect::<Result<Vec<f64>>>()?;
        if rows.len() <= node {
            rows.resize(node + 1, None);
        }
        if rows[node].replace(row).is_some() {
            return Err(BenchError::parse(
                path,
                line,
                format!("node {node} listed twice"),
            ));
        }
    }
    let n = rows.len();
    let mut m = Matrix::zeros(n, k);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| BenchError::parse(path, 0, format!("node {i} missing")))?;
        m.row_mut(i).copy_from_slice(&row);
    }
    DistributionMatrix::renormalized(m, PRIOR_TOL).map_err(|e| match e {
        priorprop_core::Error::NotStochastic { row, sum } => BenchError::parse(
            path,
            0,
            format!("row for node {row} is not a distribution (sum {sum})"),
        ),
        other => other.into(),
    })
}
