//! Plain-text corpus, label and assignment files.
//!
//! * corpus: `id<TAB>timestamp<TAB>space-separated tokens`, one document per line
//! * labels: `id<TAB>textual label<TAB>temporal label`
//! * assignments: `id<TAB>cluster id`
//!
//! Timestamps are decimal text and are written with the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::datagen::{word_token, LabeledCorpus};
use crate::error::{Error, Result};
use crate::inference::ClusteringResult;
use crate::language_model::tokenize;
use crate::point_process::KernelBasis;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        out.push((i + 1, trimmed.to_owned()));
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub fn format_corpus(data: &LabeledCorpus<f64>) -> String {
    let mut s = String::new();
    for (i, d) in data.documents.iter().enumerate() {
        let tokens: Vec<String> = d.words.iter().map(|&w| word_token(w)).collect();
        let _ = writeln!(s, "{i}\t{}\t{}", d.timestamp, tokens.join(" "));
    }
    s
}

pub fn format_labels(data: &LabeledCorpus<f64>) -> String {
    let mut s = String::new();
    for (i, (x, t)) in data
        .textual_labels
        .iter()
        .zip(&data.temporal_labels)
        .enumerate()
    {
        let _ = writeln!(s, "{i}\t{x}\t{t}");
    }
    s
}

pub fn write_corpus(path: &Path, data: &LabeledCorpus<f64>) -> Result<()> {
    write_file(path, &format_corpus(data))
}

pub fn write_labels(path: &Path, data: &LabeledCorpus<f64>) -> Result<()> {
    write_file(path, &format_labels(data))
}

/// Parses a corpus file; tokens go through [`tokenize`].
pub fn read_corpus(path: &Path) -> Result<Corpus<f64>> {
    let mut corpus = Corpus::new();
    for (line, text) in read_lines(path)? {
        let mut fields = text.splitn(3, '\t');
        let id = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse::<u64>()
            .map_err(|e| parse_err(path, line, format!("bad document id: {e}")))?;
        let ts_text = fields
            .next()
            .ok_or_else(|| parse_err(path, line, "missing timestamp field"))?
            .trim();
        let timestamp: f64 = ts_text
            .parse()
            .map_err(|e| parse_err(path, line, format!("bad timestamp {ts_text:?}: {e}")))?;
        if !timestamp.is_finite() {
            return Err(parse_err(path, line, "timestamp must be finite"));
        }
        let tokens = tokenize(fields.next().unwrap_or(""));
        corpus.push_tokens(id, timestamp, &tokens);
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub id: u64,
    pub textual: String,
    pub temporal: String,
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 3 {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected 3 fields, found {}", f.len()),
                ));
            }
            let id = f[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(path, line, format!("bad document id: {e}")))?;
            Ok(LabelRow {
                id,
                textual: f[1].trim().to_owned(),
                temporal: f[2].trim().to_owned(),
            })
        })
        .collect()
}

pub fn format_assignments(ids: &[u64], clusters: &[u64]) -> String {
    let mut s = String::new();
    for (id, c) in ids.iter().zip(clusters) {
        let _ = writeln!(s, "{id}\t{c}");
    }
    s
}

pub fn read_assignments(path: &Path) -> Result<Vec<(u64, u64)>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 2 {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected 2 fields, found {}", f.len()),
                ));
            }
            let id = f[0]
                .trim()
                .parse()
                .map_err(|e| parse_err(path, line, format!("bad document id: {e}")))?;
            let c = f[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(path, line, format!("bad cluster id: {e}")))?;
            Ok((id, c))
        })
        .collect()
}

/// Snapshot of the fitted cluster dynamics, enough to re-evaluate intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub id: u64,
    pub documents: usize,
    pub words: u64,
    pub active_weights: Vec<f64>,
    pub event_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub basis: KernelBasis<f64>,
    pub clusters: Vec<ClusterSnapshot>,
}

impl ClustersFile {
    pub fn from_result(result: &ClusteringResult<f64>, basis: &KernelBasis<f64>) -> Self {
        Self {
            basis: basis.clone(),
            clusters: result
                .clusters
                .iter()
                .map(|(&id, s)| ClusterSnapshot {
                    id,
                    documents: s.dynamics.len(),
                    words: s.words.total(),
                    active_weights: s.dynamics.active_weights().to_vec(),
                    event_times: s.dynamics.event_times().to_vec(),
                })
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
    }
}

/// Regular grid `start, start + step, ...` up to and including `end`.
pub fn time_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::config("intensity grid step must be positive"));
    }
    if !(end >= start) {
        return Ok(Vec::new());
    }
    let n = ((end - start) / step).floor() as u64;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

/// Long-format CSV `time,cluster,intensity` of every cluster on `grid`.
pub fn format_intensity(clusters: &ClustersFile, grid: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "cluster", "intensity"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for c in &clusters.clusters {
        for &t in grid {
            let lambda = crate::point_process::history_intensity(
                &c.event_times,
                &clusters.basis,
                &c.active_weights,
                t,
            );
            w.write_record([t.to_string(), c.id.to_string(), lambda.to_string()])
                .map_err(|e| Error::Data(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `rows` under an explicit header, so an empty table still has one.
pub fn write_csv<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| Error::Data(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    write_file(path, &String::from_utf8(bytes).expect("utf-8"))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    write_file(path, &s)
}
