//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! data, parse, ordering, domain and I/O errors.

pub mod config;
pub mod formats;

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::datagen::{generate_corpus, GenerationSpec};
use crate::error::{Error, Result};
use crate::evaluation::{run_sweep, MetricsReport, Normalization};
use crate::inference::{fit, ClusteringResult, FitConfig};
use crate::language_model::Vocabulary;

use config::RunConfig;
use formats::ClustersFile;

#[derive(Debug, Parser)]
#[command(
    name = "pdhp",
    version,
    about = "Online clustering of timestamped text"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Prior exponent.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub particles: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled corpus.
    Generate,
    /// Cluster a corpus.
    Fit {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Score assignments against labels.
    Evaluate {
        #[arg(long)]
        assignments: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Generate, fit and score over a parameter grid.
    Sweep,
    /// Evaluate fitted intensities on a time grid.
    ExportIntensity {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        end: Option<f64>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.r {
        cfg.r = r;
    }
    if let Some(p) = common.particles {
        cfg.particles = p;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::config(format!("missing --{what} (or `{what}` in the config file)")))
}

pub fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Fit { corpus } => {
            if corpus.is_some() {
                cfg.corpus = corpus.clone();
            }
            cmd_fit(&cfg)
        }
        Command::Evaluate {
            assignments,
            labels,
        } => {
            if assignments.is_some() {
                cfg.assignments = assignments.clone();
            }
            if labels.is_some() {
                cfg.labels = labels.clone();
            }
            cmd_evaluate(&cfg)
        }
        Command::Sweep => cmd_sweep(&cfg),
        Command::ExportIntensity {
            clusters,
            step,
            start,
            end,
        } => {
            let out = required(&cfg.out, "out")?;
            let step = step.unwrap_or(cfg.intensity_step);
            cmd_export_intensity(clusters, &out, step, *start, *end)
        }
    }
}

#[derive(Serialize)]
struct GenerationRecord<'a> {
    spec: &'a GenerationSpec<f64>,
    documents: usize,
    measured_intensity_overlap: Option<f64>,
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let spec = cfg.generation_spec()?;
    let data = generate_corpus(&spec)?;
    formats::write_corpus(&out.join("corpus.tsv"), &data)?;
    formats::write_labels(&out.join("labels.tsv"), &data)?;
    formats::write_json(
        &out.join("generation.json"),
        &GenerationRecord {
            spec: &spec,
            documents: data.len(),
            measured_intensity_overlap: data.measured_intensity_overlap,
        },
    )
}

#[derive(Serialize)]
struct FitMetadata<'a> {
    config: &'a FitConfig<f64>,
    config_hash: &'a str,
    seed: u64,
    documents: usize,
    vocabulary: usize,
    clusters: usize,
    resample_count: usize,
    best_particle: usize,
    particle_log_weights: &'a [f64],
}

#[derive(Serialize)]
struct TopWordRow<'a> {
    cluster: u64,
    rank: usize,
    word: &'a str,
    count: u64,
}

fn top_word_rows<'a>(
    result: &ClusteringResult<f64>,
    vocab: &'a Vocabulary,
    k: usize,
) -> Vec<TopWordRow<'a>> {
    let mut rows = Vec::new();
    for (&id, state) in &result.clusters {
        for (rank, (w, count)) in state.words.top_words(k).into_iter().enumerate() {
            rows.push(TopWordRow {
                cluster: id,
                rank: rank + 1,
                word: vocab.word(w).unwrap_or(""),
                count,
            });
        }
    }
    rows
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let corpus_path = required(&cfg.corpus, "corpus")?;
    let fit_cfg = cfg.fit_config()?;
    let corpus = formats::read_corpus(&corpus_path)?;
    let result = fit(&corpus, &fit_cfg)?;

    let ids: Vec<u64> = corpus.documents.iter().map(|d| d.id).collect();
    formats::write_text(
        &out.join("assignments.tsv"),
        &formats::format_assignments(&ids, &result.assignments),
    )?;

    let clusters = ClustersFile::from_result(&result, &fit_cfg.basis);
    formats::write_json(&out.join("clusters.json"), &clusters)?;

    let (start, end) = match (corpus.documents.first(), corpus.documents.last()) {
        (Some(a), Some(b)) => (a.timestamp, b.timestamp),
        _ => (0.0, -1.0),
    };
    let grid = formats::time_grid(start, end, cfg.intensity_step)?;
    formats::write_text(
        &out.join("intensity.csv"),
        &formats::format_intensity(&clusters, &grid)?,
    )?;

    formats::write_csv(
        &out.join("top_words.csv"),
        &["cluster", "rank", "word", "count"],
        &top_word_rows(&result, &corpus.vocabulary, cfg.top_words),
    )?;

    formats::write_json(
        &out.join("metadata.json"),
        &FitMetadata {
            config: &fit_cfg,
            config_hash: &result.config_hash,
            seed: result.seed,
            documents: corpus.len(),
            vocabulary: corpus.vocabulary.len(),
            clusters: result.cluster_count(),
            resample_count: result.resample_count,
            best_particle: result.best_particle,
            particle_log_weights: &result.particle_log_weights,
        },
    )
}

/// Replaces arbitrary label strings with dense indices in order of appearance.
fn index_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<usize> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    labels
        .map(|l| {
            let next = seen.len();
            *seen.entry(l).or_insert(next)
        })
        .collect()
}

pub fn evaluate_files(
    assignments: &Path,
    labels: &Path,
    norm: Normalization,
) -> Result<MetricsReport> {
    let assigned = formats::read_assignments(assignments)?;
    let labels = formats::read_labels(labels)?;
    if assigned.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} assignments but {} labels",
            assigned.len(),
            labels.len()
        )));
    }
    let mut by_id = HashMap::with_capacity(labels.len());
    for l in &labels {
        if by_id.insert(l.id, l).is_some() {
            return Err(Error::Data(format!(
                "duplicate label for document {}",
                l.id
            )));
        }
    }
    let mut aligned = Vec::with_capacity(assigned.len());
    for (id, _) in &assigned {
        let l = by_id
            .get(id)
            .ok_or_else(|| Error::Data(format!("no label for document {id}")))?;
        aligned.push(*l);
    }
    let textual = index_labels(aligned.iter().map(|l| l.textual.as_str()));
    let temporal = index_labels(aligned.iter().map(|l| l.temporal.as_str()));
    let clusters: Vec<u64> = assigned.iter().map(|&(_, c)| c).collect();
    MetricsReport::score(&clusters, &textual, &temporal, norm)
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let assignments = required(&cfg.assignments, "assignments")?;
    let labels = required(&cfg.labels, "labels")?;
    let report = evaluate_files(&assignments, &labels, cfg.normalization)?;
    formats::write_json(&out, &report)
}

const RUN_COLUMNS: &[&str] = &[
    "r",
    "textual_overlap",
    "intensity_overlap",
    "decorrelation",
    "seed",
    "documents",
    "clusters_found",
    "measured_intensity_overlap",
    "nmi_textual",
    "nmi_temporal",
    "nmi_diff",
    "error",
];

const AGGREGATE_COLUMNS: &[&str] = &[
    "r",
    "textual_overlap",
    "intensity_overlap",
    "decorrelation",
    "runs",
    "failed",
    "mean_nmi_textual",
    "mean_nmi_temporal",
    "mean_nmi_diff",
    "mean_clusters_found",
    "mean_measured_intensity_overlap",
];

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let grid = cfg.sweep_grid()?;
    let spec = cfg.generation_spec()?;
    let fit_cfg = cfg.fit_config()?;
    let result = run_sweep(&grid, &spec, &fit_cfg, cfg.normalization)?;
    formats::write_csv(&out.join("runs.csv"), RUN_COLUMNS, &result.rows)?;
    formats::write_csv(
        &out.join("aggregate.csv"),
        AGGREGATE_COLUMNS,
        &result.aggregates,
    )
}

pub fn cmd_export_intensity(
    clusters: &Path,
    out: &Path,
    step: f64,
    start: Option<f64>,
    end: Option<f64>,
) -> Result<()> {
    let file = ClustersFile::read(clusters)?;
    let times = file
        .clusters
        .iter()
        .flat_map(|c| c.event_times.iter().copied());
    let lo = times.clone().fold(f64::INFINITY, f64::min);
    let hi = times.fold(f64::NEG_INFINITY, f64::max);
    let start = start.unwrap_or(if lo.is_finite() { lo } else { 0.0 });
    let end = end.unwrap_or(if hi.is_finite() { hi } else { start });
    let grid = formats::time_grid(start, end, step)?;
    formats::write_text(out, &formats::format_intensity(&file, &grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["pdhp"]), 1);
        assert_eq!(run(["pdhp", "bogus"]), 1);
        assert_eq!(run(["pdhp", "fit", "--particles", "x"]), 1);
        assert_eq!(run(["pdhp", "--help"]), 0);
    }

    #[test]
    fn missing_paths_are_config_errors() {
        assert_eq!(run(["pdhp", "generate"]), 1);
        assert_eq!(run(["pdhp", "fit", "--out", "/nonexistent/x"]), 1);
    }

    #[test]
    fn labels_are_densified() {
        assert_eq!(
            index_labels(["b", "a", "b", "c"].into_iter()),
            vec![0, 1, 0, 2]
        );
    }
}
