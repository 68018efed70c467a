//! Normalized mutual information and the parameter-sweep driver.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_corpus, GenerationSpec};
use crate::error::{Error, Result};
use crate::inference::{fit, FitConfig};
use crate::scalar::Real;

/// How mutual information is normalized by the two entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `sqrt(H(A) H(B))`
    #[default]
    Geometric,
    /// `(H(A) + H(B)) / 2`
    Arithmetic,
    Max,
    Min,
}

fn dense<L: Hash + Eq>(labels: &[L]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<&L, usize> = HashMap::new();
    let idx = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (idx, ids.len())
}

fn entropy<T: Real>(counts: &[u64], n: T) -> T {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = T::from_count(c) / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI with geometric-mean normalization.
pub fn nmi<T: Real, A: Hash + Eq, B: Hash + Eq>(labels_a: &[A], labels_b: &[B]) -> Result<T> {
    nmi_with(labels_a, labels_b, Normalization::Geometric)
}

/// NMI with natural-log plug-in entropies.
///
/// If exactly one labeling is constant the score is 0; if both are, the
/// partitions coincide and the score is 1.
pub fn nmi_with<T: Real, A: Hash + Eq, B: Hash + Eq>(
    labels_a: &[A],
    labels_b: &[B],
    norm: Normalization,
) -> Result<T> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::domain(format!(
            "labelings differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::domain("NMI of empty labelings is undefined"));
    }
    let (a, ka) = dense(labels_a);
    let (b, kb) = dense(labels_b);
    if ka == 1 && kb == 1 {
        return Ok(T::one());
    }
    if ka == 1 || kb == 1 {
        return Ok(T::zero());
    }
    // first-appearance indices coincide exactly when the partitions do
    if a == b {
        return Ok(T::one());
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ca = vec![0u64; ka];
    let mut cb = vec![0u64; kb];
    for (&i, &j) in a.iter().zip(&b) {
        *joint.entry((i, j)).or_default() += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let n = T::from_count(a.len() as u64);
    let mut terms: Vec<T> = joint
        .into_iter()
        .map(|((i, j), c)| {
            let c = T::from_count(c);
            (c / n) * (n * c / (T::from_count(ca[i]) * T::from_count(cb[j]))).ln()
        })
        .collect();
    // summation order must not depend on argument order, so nmi(a, b) == nmi(b, a) bitwise
    terms.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite MI terms"));
    let mi: T = terms.into_iter().sum();
    let (ha, hb) = (entropy(&ca, n), entropy(&cb, n));
    let denom = match norm {
        Normalization::Geometric => (ha * hb).sqrt(),
        Normalization::Arithmetic => (ha + hb) / T::lit(2.0),
        Normalization::Max => ha.max(hb),
        Normalization::Min => ha.min(hb),
    };
    Ok((mi / denom).max(T::zero()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub documents: usize,
    pub clusters_found: usize,
    pub nmi_textual: f64,
    pub nmi_temporal: f64,
    /// `nmi_temporal − nmi_textual`
    pub nmi_diff: f64,
    pub normalization: Normalization,
}

impl MetricsReport {
    pub fn score(
        assignments: &[u64],
        textual: &[usize],
        temporal: &[usize],
        norm: Normalization,
    ) -> Result<Self> {
        let nmi_textual: f64 = nmi_with(assignments, textual, norm)?;
        let nmi_temporal: f64 = nmi_with(assignments, temporal, norm)?;
        let mut found: Vec<u64> = assignments.to_vec();
        found.sort_unstable();
        found.dedup();
        Ok(Self {
            documents: assignments.len(),
            clusters_found: found.len(),
            nmi_textual,
            nmi_temporal,
            nmi_diff: nmi_temporal - nmi_textual,
            normalization: norm,
        })
    }
}

/// Axes of a sweep; every combination is run for `seeds` seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub r: Vec<f64>,
    pub textual_overlap: Vec<f64>,
    pub intensity_overlap: Vec<f64>,
    pub decorrelation: Vec<f64>,
    pub seeds: usize,
    /// Seed of the first dataset at each grid point; later ones count up.
    pub base_seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let axis = vec![0.0, 0.3, 0.5, 0.7, 0.9];
        Self {
            r: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            textual_overlap: axis.clone(),
            intensity_overlap: axis,
            decorrelation: vec![0.0],
            seeds: 10,
            base_seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.r.is_empty()
            || self.textual_overlap.is_empty()
            || self.intensity_overlap.is_empty()
            || self.decorrelation.is_empty()
        {
            return Err(Error::config("every sweep axis needs at least one value"));
        }
        if self.seeds == 0 {
            return Err(Error::config("sweep needs at least one seed"));
        }
        Ok(())
    }
}

/// One (grid point, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub textual_overlap: f64,
    pub intensity_overlap: f64,
    pub decorrelation: f64,
    pub seed: u64,
    pub documents: usize,
    pub clusters_found: usize,
    pub measured_intensity_overlap: Option<f64>,
    pub nmi_textual: Option<f64>,
    pub nmi_temporal: Option<f64>,
    pub nmi_diff: Option<f64>,
    pub error: Option<String>,
}

/// Means over the successful runs of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub r: f64,
    pub textual_overlap: f64,
    pub intensity_overlap: f64,
    pub decorrelation: f64,
    pub runs: usize,
    pub failed: usize,
    pub mean_nmi_textual: Option<f64>,
    pub mean_nmi_temporal: Option<f64>,
    pub mean_nmi_diff: Option<f64>,
    pub mean_clusters_found: Option<f64>,
    pub mean_measured_intensity_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

/// Generates, fits and scores every grid point and seed.
///
/// Each dataset is generated once and fitted for every `r`; the dataset seed
/// is also the fit seed. Runs execute in parallel, rows come back in grid
/// order (textual, intensity, decorrelation, seed, r). Failures are kept as
/// rows with `error` set.
pub fn run_sweep(
    grid: &SweepGrid,
    generation: &GenerationSpec<f64>,
    fit_config: &FitConfig<f64>,
    norm: Normalization,
) -> Result<SweepResult> {
    grid.validate()?;
    let mut jobs = Vec::new();
    for &to in &grid.textual_overlap {
        for &io in &grid.intensity_overlap {
            for &rho in &grid.decorrelation {
                for s in 0..grid.seeds as u64 {
                    jobs.push((to, io, rho, grid.base_seed + s));
                }
            }
        }
    }
    let per_job: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(to, io, rho, seed)| {
            let spec = GenerationSpec {
                textual_overlap: to,
                intensity_overlap: io,
                decorrelation: rho,
                seed,
                ..generation.clone()
            };
            let blank = |r: f64| SweepRow {
                r,
                textual_overlap: to,
                intensity_overlap: io,
                decorrelation: rho,
                seed,
                documents: 0,
                clusters_found: 0,
                measured_intensity_overlap: None,
                nmi_textual: None,
                nmi_temporal: None,
                nmi_diff: None,
                error: None,
            };
            let data = match generate_corpus(&spec) {
                Ok(d) => d,
                Err(e) => {
                    return grid
                        .r
                        .iter()
                        .map(|&r| SweepRow {
                            error: Some(e.to_string()),
                            ..blank(r)
                        })
                        .collect();
                }
            };
            let corpus = data.to_corpus();
            grid.r
                .iter()
                .map(|&r| {
                    let mut cfg = fit_config.clone();
                    cfg.prior.r = r;
                    cfg.seed = seed;
                    let mut row = SweepRow {
                        documents: corpus.len(),
                        measured_intensity_overlap: data.measured_intensity_overlap,
                        ..blank(r)
                    };
                    let scored = fit(&corpus, &cfg).and_then(|res| {
                        MetricsReport::score(
                            &res.assignments,
                            &data.textual_labels,
                            &data.temporal_labels,
                            norm,
                        )
                    });
                    match scored {
                        Ok(m) => {
                            row.clusters_found = m.clusters_found;
                            row.nmi_textual = Some(m.nmi_textual);
                            row.nmi_temporal = Some(m.nmi_temporal);
                            row.nmi_diff = Some(m.nmi_diff);
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row
                })
                .collect()
        })
        .collect();
    let rows: Vec<SweepRow> = per_job.into_iter().flatten().collect();
    let aggregates = aggregate(&rows);
    Ok(SweepResult { rows, aggregates })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Groups rows by grid point, in order of first appearance.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepAggregate> {
    let key = |r: &SweepRow| {
        [r.r, r.textual_overlap, r.intensity_overlap, r.decorrelation].map(f64::to_bits)
    };
    let mut order: Vec<[u64; 4]> = Vec::new();
    let mut groups: HashMap<[u64; 4], Vec<&SweepRow>> = HashMap::new();
    for row in rows {
        let k = key(row);
        groups
            .entry(k)
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|k| {
            let g = &groups[&k];
            let ok: Vec<&&SweepRow> = g.iter().filter(|r| r.error.is_none()).collect();
            SweepAggregate {
                r: g[0].r,
                textual_overlap: g[0].textual_overlap,
                intensity_overlap: g[0].intensity_overlap,
                decorrelation: g[0].decorrelation,
                runs: g.len(),
                failed: g.len() - ok.len(),
                mean_nmi_textual: mean(ok.iter().filter_map(|r| r.nmi_textual)),
                mean_nmi_temporal: mean(ok.iter().filter_map(|r| r.nmi_temporal)),
                mean_nmi_diff: mean(ok.iter().filter_map(|r| r.nmi_diff)),
                mean_clusters_found: mean(ok.iter().map(|r| r.clusters_found as f64)),
                mean_measured_intensity_overlap: mean(
                    ok.iter().filter_map(|r| r.measured_intensity_overlap),
                ),
            }
        })
        .collect()
}
