//! CSV and gnuplot writers for experiment output, and the records reader.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use priorprop_core::method::Method;
use priorprop_core::selection::{Scheme, Setting};

use crate::error::{BenchError, Result};
use crate::experiment::{CellKey, CvTraceRow, ObjectiveTraceRow, RunRecord, SummaryRow};
use crate::spec::parse_scheme;

pub const RECORDS_HEADER: [&str; 11] = [
    "trial",
    "method",
    "setting",
    "scheme",
    "subset_pct",
    "c_chosen",
    "trial_seed",
    "accuracy",
    "initial_accuracy",
    "iterations",
    "converged",
];

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BenchError::io(path, io),
        other => BenchError::parse(path, 0, format!("{other:?}")),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn cell_fields(c: &CellKey) -> [String; 5] {
    [
        c.trial.to_string(),
        c.method.name().to_string(),
        c.setting.number().to_string(),
        c.scheme.name().to_string(),
        c.subset_pct.to_string(),
    ]
}

fn record_cell(r: &RunRecord) -> CellKey {
    CellKey {
        trial: r.trial,
        method: r.method,
        setting: r.setting,
        scheme: r.scheme,
        subset_pct: r.subset_pct,
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    write_rows(
        path,
        &RECORDS_HEADER,
        records.iter().map(|r| {
            let mut row = cell_fields(&record_cell(r)).to_vec();
            row.extend([
                r.c_chosen.map(|c| c.to_string()).unwrap_or_default(),
                r.trial_seed.to_string(),
                r.accuracy.to_string(),
                r.initial_accuracy.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
            ]);
            row
        }),
    )
}

/// Wall-clock times live apart from `records.csv` so that file stays reproducible.
pub fn write_timings(path: &Path, records: &[RunRecord]) -> Result<()> {
    write_rows(
        path,
        &[
            "trial",
            "method",
            "setting",
            "scheme",
            "subset_pct",
            "wall_time",
        ],
        records.iter().map(|r| {
            let mut row = cell_fields(&record_cell(r)).to_vec();
            row.push(format!("{:.6}", r.wall_time));
            row
        }),
    )
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(
        path,
        &[
            "method",
            "setting",
            "scheme",
            "subset_pct",
            "trials",
            "mean_accuracy",
            "sd_accuracy",
            "mean_initial_accuracy",
        ],
        rows.iter().map(|s| {
            [
                s.method.name().to_string(),
                s.setting.number().to_string(),
                s.scheme.name().to_string(),
                s.subset_pct.to_string(),
                s.count.to_string(),
                s.mean_accuracy.to_string(),
                s.sd_accuracy.to_string(),
                s.mean_initial_accuracy.to_string(),
            ]
        }),
    )
}

/// `fold` is empty on the per-C mean rows.
pub fn write_cv_trace(path: &Path, rows: &[CvTraceRow]) -> Result<()> {
    write_rows(
        path,
        &[
            "trial",
            "method",
            "setting",
            "scheme",
            "subset_pct",
            "C",
            "fold",
            "accuracy",
        ],
        rows.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.c.to_string(),
                r.fold.map(|f| f.to_string()).unwrap_or_default(),
                r.accuracy.to_string(),
            ]);
            row
        }),
    )
}

pub fn write_trace(path: &Path, rows: &[ObjectiveTraceRow]) -> Result<()> {
    write_rows(
        path,
        &[
            "trial",
            "method",
            "setting",
            "scheme",
            "subset_pct",
            "iter",
            "after_region",
            "after_node",
            "delta",
        ],
        rows.iter().map(|r| {
            let mut row = cell_fields(&r.cell).to_vec();
            row.extend([
                r.iter.to_string(),
                r.after_region.to_string(),
                r.after_node.to_string(),
                r.delta.to_string(),
            ]);
            row
        }),
    )
}

/// One gnuplot data block per (setting, scheme) panel, separated by two blank
/// lines so `index` can address them. Columns: subset_pct, then mean and sd
/// per method, then the mean initial accuracy. Missing cells are `NaN`.
pub fn write_curves(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut panels: Vec<(Setting, Scheme)> = rows.iter().map(|r| (r.setting, r.scheme)).collect();
    panels.sort();
    panels.dedup();
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for (idx, &(setting, scheme)) in panels.iter().enumerate() {
            if idx > 0 {
                writeln!(w, "\n")?;
            }
            let panel: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.setting == setting && r.scheme == scheme)
                .collect();
            let mut methods: Vec<Method> = panel.iter().map(|r| r.method).collect();
            methods.sort();
            methods.dedup();
            let mut pcts: Vec<f64> = panel.iter().map(|r| r.subset_pct).collect();
            pcts.sort_by(f64::total_cmp);
            pcts.dedup();
            writeln!(w, "# setting {} scheme {}", setting.number(), scheme.name())?;
            write!(w, "# subset_pct")?;
            for m in &methods {
                write!(w, " {0}_mean {0}_sd", m.name())?;
            }
            writeln!(w, " initial")?;
            for &pct in &pcts {
                write!(w, "{pct}")?;
                let at_pct: Vec<&&SummaryRow> =
                    panel.iter().filter(|r| r.subset_pct == pct).collect();
                for m in &methods {
                    match at_pct.iter().find(|r| r.method == *m) {
                        Some(r) => write!(w, " {} {}", r.mean_accuracy, r.sd_accuracy)?,
                        None => write!(w, " NaN NaN")?,
                    }
                }
                let init = at_pct.first().map_or(f64::NAN, |r| r.mean_initial_accuracy);
                writeln!(w, " {init}")?;
            }
        }
        w.flush()
    };
    write(&mut w).map_err(|e| BenchError::io(path, e))
}

fn parse_setting(s: &str) -> Option<Setting> {
    match s {
        "1" => Some(Setting::One),
        "2" => Some(Setting::Two),
        _ => None,
    }
}

/// Reads a `records.csv` written by [`write_records`]. Wall times are not
/// stored there and come back as zero.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(RECORDS_HEADER) {
        return Err(BenchError::parse(
            path,
            1,
            "not a records file (unexpected header)",
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| BenchError::parse(path, line, format!("invalid {what}"));
        let get = |i: usize| rec.get(i).unwrap_or("");
        let c_chosen = match get(5) {
            "" => None,
            v => Some(v.parse().map_err(|_| bad("c_chosen"))?),
        };
        out.push(RunRecord {
            trial: get(0).parse().map_err(|_| bad("trial"))?,
            method: get(1).parse().map_err(|_| bad("method"))?,
            setting: parse_setting(get(2)).ok_or_else(|| bad("setting"))?,
            scheme: parse_scheme(get(3)).ok_or_else(|| bad("scheme"))?,
            subset_pct: get(4).parse().map_err(|_| bad("subset_pct"))?,
            c_chosen,
            trial_seed: get(6).parse().map_err(|_| bad("trial_seed"))?,
            accuracy: get(7).parse().map_err(|_| bad("accuracy"))?,
            initial_accuracy: get(8).parse().map_err(|_| bad("initial_accuracy"))?,
            iterations: get(9).parse().map_err(|_| bad("iterations"))?,
            converged: get(10).parse().map_err(|_| bad("converged"))?,
            wall_time: 0.0,
        });
    }
    Ok(out)
}
