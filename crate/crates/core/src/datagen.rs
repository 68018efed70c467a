//! Synthetic labelled corpora.
//!
//! Every cluster emits documents at the event times of its own Hawkes
//! process. Clusters draw words from vocabularies that share a chosen
//! fraction of their entries, and their activity windows are shifted apart
//! so that their intensities overlap by a chosen amount. A decorrelation
//! rate re-draws the textual cluster of some documents independently of the
//! cluster that generated their timestamp, which yields two ground truths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::point_process::{history_intensity, KernelBasis};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec<T> {
    pub clusters: usize,
    pub vocab_per_cluster: usize,
    pub words_per_doc: usize,
    pub textual_overlap: T,
    pub intensity_overlap: T,
    /// Probability that a document's words are re-drawn from a random cluster.
    pub decorrelation: T,
    /// Length of each cluster's activity window.
    pub window: T,
    /// Background (immigrant) rate of each cluster's Hawkes process.
    pub base_rate: T,
    /// Branching ratio used when `kernel_weights` is not given.
    pub branching: T,
    /// Explicit per-cluster kernel weights; overrides `branching`.
    pub kernel_weights: Option<Vec<Vec<T>>>,
    pub basis: KernelBasis<T>,
    pub seed: u64,
}

impl Default for GenerationSpec<f64> {
    fn default() -> Self {
        Self {
            clusters: 2,
            vocab_per_cluster: 1000,
            words_per_doc: 20,
            textual_overlap: 0.0,
            intensity_overlap: 0.0,
            decorrelation: 0.0,
            window: 500.0,
            base_rate: 0.2,
            branching: 0.8,
            kernel_weights: None,
            basis: KernelBasis::default_basis(),
            seed: 0,
        }
    }
}

impl<T: Real> GenerationSpec<T> {
    /// Kernel weights of cluster `k`: explicit, or `branching` split evenly in mass.
    pub fn weights_for(&self, k: usize) -> Vec<T> {
        match &self.kernel_weights {
            Some(w) => w[k].clone(),
            None => {
                let l = self.basis.len();
                let share = self.branching / T::from_count(l as u64);
                (0..l).map(|i| share / self.basis.mass(i)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: T| {
            if x >= T::zero() && x <= T::one() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        unit("textual_overlap", self.textual_overlap)?;
        unit("intensity_overlap", self.intensity_overlap)?;
        unit("decorrelation", self.decorrelation)?;
        if self.clusters == 0 {
            return Err(Error::config("at least one cluster is required"));
        }
        if self.vocab_per_cluster == 0 {
            return Err(Error::config("vocab_per_cluster must be positive"));
        }
        if !(self.window > T::zero()) || !self.window.is_finite() {
            return Err(Error::config("window must be positive"));
        }
        if !(self.base_rate >= T::zero()) || !self.base_rate.is_finite() {
            return Err(Error::config("base_rate must be nonnegative"));
        }
        if let Some(w) = &self.kernel_weights {
            if w.len() != self.clusters {
                return Err(Error::config("kernel_weights needs one vector per cluster"));
            }
            if w.iter().any(|v| v.len() != self.basis.len()) {
                return Err(Error::config(
                    "kernel_weights vectors must match the basis length",
                ));
            }
        }
        for k in 0..self.clusters {
            let w = self.weights_for(k);
            if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
                return Err(Error::config(
                    "kernel weights must be finite and nonnegative",
                ));
            }
            let n = self.basis.branching_ratio(&w);
            if !(n < T::one()) {
                return Err(Error::config(format!(
                    "cluster {k} has branching ratio {n} >= 1 (unstable)"
                )));
            }
        }
        Ok(())
    }

    /// Offset between consecutive clusters' activity windows.
    ///
    /// The support of a cluster's intensity has length `window + horizon`;
    /// shifting two equal-rate supports of length `S` by `d` gives an
    /// overlap coefficient of roughly `(S − d) / (S + d)`.
    pub fn window_shift(&self) -> T {
        let support = self.window + self.basis.horizon();
        let o = self.intensity_overlap;
        support * (T::one() - o) / (T::one() + o)
    }
}

/// Exact simulation on `[0, end]` by Ogata thinning.
///
/// The bound `μ + (events within horizon) · sup w·κ` dominates the intensity
/// until the next accepted event, since history only drops out.
pub fn simulate_hawkes<T: Real, R: Rng + ?Sized>(
    base_rate: T,
    weights: &[T],
    basis: &KernelBasis<T>,
    end: T,
    rng: &mut R,
) -> Result<Vec<T>> {
    if weights.len() != basis.len() {
        return Err(Error::config("weights must match the basis length"));
    }
    if weights.iter().any(|w| !(*w >= T::zero())) {
        return Err(Error::config("kernel weights must be nonnegative"));
    }
    let n = basis.branching_ratio(weights);
    if !(n < T::one()) {
        return Err(Error::config(format!(
            "branching ratio {n} >= 1 (unstable)"
        )));
    }
    if !(base_rate >= T::zero()) {
        return Err(Error::config("base rate must be nonnegative"));
    }
    let mut events: Vec<T> = Vec::new();
    if base_rate == T::zero() {
        return Ok(events);
    }
    let jump = basis.weighted_kernel_bound(weights);
    let mut t = T::zero();
    loop {
        let live = events.len() - events.partition_point(|&e| e < t - basis.horizon());
        let bound = base_rate + jump * T::from_count(live as u64);
        let wait = T::lit(rng.sample::<f64, _>(Exp1)) / bound;
        t = t + wait;
        if t > end {
            break;
        }
        let lambda = base_rate + history_intensity(&events, basis, weights, t);
        let u = T::lit(rng.random::<f64>());
        if u * bound <= lambda {
            events.push(t);
        }
    }
    Ok(events)
}

/// Per-cluster vocabularies of `size` word indices sharing `round(overlap · size)` entries.
///
/// Shared words take indices `0..shared`; cluster `k`'s own words follow in
/// consecutive blocks.
pub fn build_vocabularies<T: Real>(
    size: usize,
    overlap: T,
    clusters: usize,
) -> Result<Vec<Vec<usize>>> {
    if !(overlap >= T::zero() && overlap <= T::one()) {
        return Err(Error::config(format!(
            "overlap must lie in [0, 1], got {overlap}"
        )));
    }
    let shared = (overlap * T::from_count(size as u64))
        .round()
        .to_usize()
        .unwrap_or(0)
        .min(size);
    let own = size - shared;
    Ok((0..clusters)
        .map(|k| {
            (0..shared)
                .chain(shared + k * own..shared + (k + 1) * own)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDoc<T> {
    pub timestamp: T,
    /// Word indices in draw order.
    pub words: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus<T> {
    pub documents: Vec<GeneratedDoc<T>>,
    pub temporal_labels: Vec<usize>,
    pub textual_labels: Vec<usize>,
    /// Overlap coefficient between the first two clusters' intensities.
    pub measured_intensity_overlap: Option<T>,
}

pub fn word_token(index: usize) -> String {
    format!("w{index}")
}

impl<T: Real> LabeledCorpus<T> {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Corpus with doc ids `0..n` and tokens `w<index>`, interned in order of appearance.
    pub fn to_corpus(&self) -> Corpus<T> {
        let mut corpus = Corpus::new();
        for (i, d) in self.documents.iter().enumerate() {
            let tokens: Vec<String> = d.words.iter().map(|&w| word_token(w)).collect();
            corpus.push_tokens(i as u64, d.timestamp, &tokens);
        }
        corpus
    }
}

/// Runs the full generative protocol for `spec` under its own seed.
pub fn generate_corpus<T: Real>(spec: &GenerationSpec<T>) -> Result<LabeledCorpus<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate_corpus_with(spec, &mut rng)
}

pub fn generate_corpus_with<T: Real, R: Rng + ?Sized>(
    spec: &GenerationSpec<T>,
    rng: &mut R,
) -> Result<LabeledCorpus<T>> {
    spec.validate()?;
    let vocabs = build_vocabularies(spec.vocab_per_cluster, spec.textual_overlap, spec.clusters)?;
    let shift = spec.window_shift();
    let mut streams = Vec::with_capacity(spec.clusters);
    for k in 0..spec.clusters {
        let w = spec.weights_for(k);
        let offset = shift * T::from_count(k as u64);
        let times: Vec<T> = simulate_hawkes(spec.base_rate, &w, &spec.basis, spec.window, rng)?
            .into_iter()
            .map(|t| t + offset)
            .collect();
        streams.push(times);
    }

    let mut rows: Vec<(T, usize, usize, Vec<usize>)> = Vec::new();
    for (k, times) in streams.iter().enumerate() {
        for &t in times {
            let textual = if rng.random::<f64>() < spec.decorrelation.as_f64() {
                rng.random_range(0..spec.clusters)
            } else {
                k
            };
            let vocab = &vocabs[textual];
            let words = (0..spec.words_per_doc)
                .map(|_| vocab[rng.random_range(0..vocab.len())])
                .collect();
            rows.push((t, k, textual, words));
        }
    }
    // stable: equal timestamps keep cluster order
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite timestamps"));

    let measured = if spec.clusters >= 2 {
        let step = spec
            .basis
            .bandwidths()
            .iter()
            .copied()
            .fold(T::infinity(), T::min)
            / T::lit(4.0);
        measured_intensity_overlap(
            &streams[0],
            &streams[1],
            &spec.basis,
            &spec.weights_for(0),
            &spec.weights_for(1),
            step,
        )
        .ok()
    } else {
        None
    };

    let mut out = LabeledCorpus {
        documents: Vec::with_capacity(rows.len()),
        temporal_labels: Vec::with_capacity(rows.len()),
        textual_labels: Vec::with_capacity(rows.len()),
        measured_intensity_overlap: measured,
    };
    for (t, temporal, textual, words) in rows {
        out.documents.push(GeneratedDoc {
            timestamp: t,
            words,
        });
        out.temporal_labels.push(temporal);
        out.textual_labels.push(textual);
    }
    Ok(out)
}

/// Overlap coefficient `Σ min(λ_a, λ_b) / Σ max(λ_a, λ_b)` of two excitation
/// intensities on a regular grid covering both supports.
pub fn measured_intensity_overlap<T: Real>(
    events_a: &[T],
    events_b: &[T],
    basis: &KernelBasis<T>,
    weights_a: &[T],
    weights_b: &[T],
    step: T,
) -> Result<T> {
    if !(step > T::zero()) || !step.is_finite() {
        return Err(Error::domain("grid step must be positive"));
    }
    let first = events_a
        .first()
        .into_iter()
        .chain(events_b.first())
        .copied()
        .fold(T::infinity(), T::min);
    let last = events_a
        .last()
        .into_iter()
        .chain(events_b.last())
        .copied()
        .fold(T::neg_infinity(), T::max);
    if !first.is_finite() {
        return Err(Error::domain(
            "overlap undefined: both intensities are identically zero",
        ));
    }
    let end = last + basis.horizon();
    let (mut lo, mut hi) = (T::zero(), T::zero());
    let mut i = 0u64;
    loop {
        let t = first + step * T::from_count(i);
        if t > end {
            break;
        }
        let a = history_intensity(events_a, basis, weights_a, t);
        let b = history_intensity(events_b, basis, weights_b, t);
        lo = lo + a.min(b);
        hi = hi + a.max(b);
        i += 1;
    }
    if hi <= T::zero() {
        return Err(Error::domain(
            "overlap undefined: both intensities are identically zero",
        ));
    }
    Ok(lo / hi)
}
