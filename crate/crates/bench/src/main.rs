use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use priorprop::error::{BenchError, Result};
use priorprop::experiment::{aggregate, load_dataset, run_experiment, score_file_name, RunOptions};
use priorprop::io::{
    read_labels, read_priors, write_edge_list, write_labels, write_priors, write_scores,
};
use priorprop::report::{
    read_records, write_curves, write_cv_trace, write_records, write_summary, write_timings,
    write_trace,
};
use priorprop::spec::{parse_scheme, SpecBuilder, KEYS};
use priorprop::synth::{generate_block_graph, SyntheticBlockSpec};
use priorprop_core::priors::{generate_noisy_priors, NoiseSpec};
use priorprop_core::selection::{select_subset, SelectionMode, Setting};

#[derive(Parser)]
#[command(
    name = "priorprop",
    version,
    about = "Collective classification with noisy class priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Write a synthetic block graph (graph.tsv) and its truth (labels.tsv).
    Generate(GenerateArgs),
    /// Simulate noisy priors (priors.csv) from truth labels.
    Noise(NoiseArgs),
    /// Score nodes by MPS/EBS and write the selected subset (selection.csv).
    Select(SelectArgs),
    /// Run a full experiment.
    Run(RunArgs),
    /// Aggregate an existing records.csv into summary.csv and curves.dat.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Nodes per block, comma-separated.
    #[arg(long, default_value = "100,100", value_delimiter = ',')]
    blocks: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    p_within: f64,
    #[arg(long, default_value_t = 0.005)]
    p_across: f64,
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    /// Truth labels (node<TAB>class); every node must be labeled.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    pmin: f64,
    #[arg(long, default_value_t = 0.99)]
    pmax: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class count; defaults to the largest label plus one (at least 2).
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    priors: PathBuf,
    #[arg(long, default_value = "EBS")]
    scheme: String,
    /// Percent of top-scored nodes to select.
    #[arg(long, default_value_t = 30.0, conflicts_with = "threshold")]
    subset_pct: f64,
    /// Select every node whose score is at least this value instead.
    #[arg(long)]
    threshold: Option<f64>,
    /// Coverage default of this setting (1 forces every class into the subset).
    #[arg(long, default_value_t = 1)]
    setting: u8,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Spec file of `key = value` lines; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Further `key=value` assignments, applied after the flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    priors: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    subset_pcts: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    ir_trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    pmin: Option<String>,
    #[arg(long)]
    pmax: Option<String>,
    #[arg(long)]
    cv_folds: Option<String>,
    #[arg(long)]
    cv_rule: Option<String>,
    #[arg(long)]
    eval_scope: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write cv_trace.csv.
    #[arg(long)]
    cv_trace: bool,
    /// Also write trace.csv with per-iteration objectives of the region methods.
    #[arg(long)]
    trace: bool,
    /// Also write every final score matrix under scores/.
    #[arg(long)]
    dump_scores: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Records file; defaults to <out-dir>/records.csv.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = SyntheticBlockSpec {
        blocks: a.blocks,
        p_within: a.p_within,
        p_across: a.p_across,
        weight: a.weight,
        seed: a.seed,
    };
    let (g, truth) = generate_block_graph(&spec)?;
    ensure_dir(&a.out_dir)?;
    write_edge_list(&a.out_dir.join("graph.tsv"), &g)?;
    write_labels(&a.out_dir.join("labels.tsv"), &truth)?;
    println!("{} nodes, {} edges", g.n(), g.edge_count());
    Ok(())
}

fn noise(a: NoiseArgs) -> Result<()> {
    let truth = read_labels(&a.labels)?;
    let labels = truth.require_all()?;
    let k = a.classes.unwrap_or(truth.classes.max(2));
    let p = generate_noisy_priors(&labels, k, &NoiseSpec::new(a.pmin, a.pmax, a.seed)?)?;
    ensure_dir(&a.out_dir)?;
    write_priors(&a.out_dir.join("priors.csv"), &p)
}

fn select(a: SelectArgs) -> Result<()> {
    let p = read_priors(&a.priors)?;
    let scheme = parse_scheme(&a.scheme)
        .ok_or_else(|| BenchError::Spec(format!("unknown scheme `{}`", a.scheme)))?;
    let setting = match a.setting {
        1 => Setting::One,
        2 => Setting::Two,
        other => return Err(BenchError::Spec(format!("unknown setting `{other}`"))),
    };
    let mode = match a.threshold {
        Some(t) => SelectionMode::Threshold(t),
        None => SelectionMode::TopPercent(a.subset_pct),
    };
    let scores = scheme.score(&p);
    let sel = select_subset(&scores, mode, &p, setting.default_coverage())?;
    let mask = sel.mask(p.n());
    let labels = p.derived_labels();
    ensure_dir(&a.out_dir)?;
    let path = a.out_dir.join("selection.csv");
    let mut w = csv::Writer::from_path(&path)
        .map_err(|e| BenchError::io(&path, std::io::Error::other(e)))?;
    let mut write = || -> csv::Result<()> {
        w.write_record(["node", "score", "derived_label", "selected", "forced"])?;
        for i in 0..p.n() {
            w.write_record([
                i.to_string(),
                scores.values[i].to_string(),
                labels[i].to_string(),
                mask[i].to_string(),
                sel.forced.contains(&i).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| BenchError::io(&path, std::io::Error::other(e)))?;
    println!(
        "selected {} of {} nodes ({} forced)",
        sel.len(),
        p.n(),
        sel.forced.len()
    );
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut b = SpecBuilder::new();
    if let Some(path) = &a.spec {
        b.load_file(path)?;
    }
    let flags = [
        ("graph", &a.graph),
        ("nodes", &a.nodes),
        ("labels", &a.labels),
        ("priors", &a.priors),
        ("methods", &a.methods),
        ("setting", &a.setting),
        ("scheme", &a.scheme),
        ("subset_pcts", &a.subset_pcts),
        ("trials", &a.trials),
        ("ir_trials", &a.ir_trials),
        ("seed", &a.seed),
        ("pmin", &a.pmin),
        ("pmax", &a.pmax),
        ("cv_folds", &a.cv_folds),
        ("cv_rule", &a.cv_rule),
        ("eval_scope", &a.eval_scope),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            b.set(key, v)?;
        }
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| BenchError::Spec(format!("`--set {kv}`: expected KEY=VALUE")))?;
        b.set(k.trim(), v.trim())?;
    }
    let spec = b.finish()?;
    let data = load_dataset(&spec)?;
    if data.self_loops_dropped > 0 {
        eprintln!("warning: dropped {} self-loops", data.self_loops_dropped);
    }
    let opts = RunOptions {
        cv_trace: a.cv_trace,
        trace: a.trace,
        dump_scores: a.dump_scores,
    };
    let out = run_experiment(&spec, &data, opts)?;
    let dir = &a.out_dir;
    ensure_dir(dir)?;
    write_records(&dir.join("records.csv"), &out.records)?;
    write_timings(&dir.join("timings.csv"), &out.records)?;
    let summary = aggregate(&out.records);
    write_summary(&dir.join("summary.csv"), &summary)?;
    write_curves(&dir.join("curves.dat"), &summary)?;
    if a.cv_trace {
        write_cv_trace(&dir.join("cv_trace.csv"), &out.cv_trace)?;
    }
    if a.trace {
        write_trace(&dir.join("trace.csv"), &out.trace)?;
    }
    if a.dump_scores {
        let scores_dir = dir.join("scores");
        ensure_dir(&scores_dir)?;
        for (cell, m) in &out.scores {
            write_scores(&scores_dir.join(score_file_name(cell)), m)?;
        }
    }
    println!("{} records written to {}", out.records.len(), dir.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let path = a.records.unwrap_or_else(|| a.out_dir.join("records.csv"));
    let records = read_records(&path)?;
    if records.is_empty() {
        return Err(BenchError::Spec(format!(
            "{} holds no records",
            path.display()
        )));
    }
    let summary = aggregate(&records);
    ensure_dir(&a.out_dir)?;
    write_summary(&a.out_dir.join("summary.csv"), &summary)?;
    write_curves(&a.out_dir.join("curves.dat"), &summary)
}

fn keys_help() -> String {
    let width = KEYS.iter().map(|k| k.0.len()).max().unwrap_or(0);
    let mut s = String::from("Spec keys (file lines `key = value`, or `--set key=value`):\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {k:width$}  {d}\n"));
    }
    s
}

fn main() -> ExitCode {
    let cmd = Cli::command().mut_subcommand("run", |c| c.after_help(keys_help()));
    let cli = match cmd
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "error[usage]: {}",
                msg.lines()
                    .next()
                    .unwrap_or("")
                    .trim_start_matches("error: ")
            );
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Noise(a) => noise(a),
        Command::Select(a) => select(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error[{}]: {}",
                e.category(),
                e.to_string().replace('\n', " ")
            );
            ExitCode::FAILURE
        }
    }
}
