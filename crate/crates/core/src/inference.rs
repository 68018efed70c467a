//! Sequential Monte Carlo clustering of a document stream.
//!
//! Each particle holds one hypothesis of how the documents seen so far are
//! split into clusters. For every incoming document and every particle:
//!
//! 1. a cluster is drawn from the posterior combining the word likelihood
//!    with the powered Hawkes prior (or a brand-new cluster);
//! 2. the chosen cluster's event history and weight candidates are updated;
//! 3. the particle's weight is multiplied by the document's marginal
//!    likelihood under that particle.
//!
//! Particles are then resampled when the effective sample size drops below
//! `ess_threshold · P`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::language_model::{dm_log_predictive, ClusterWordCounts, DmParams};
use crate::point_process::{sample_candidates, ClusterDynamics, KernelBasis};
use crate::prior::{log_pdhp_prior, PriorParams};
use crate::scalar::{log_sum_exp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Draw each allocation from the posterior.
    #[default]
    Sample,
    /// Take the most probable allocation; lowest cluster wins ties.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig<T> {
    pub prior: PriorParams<T>,
    /// Symmetric per-word Dirichlet concentration.
    pub theta_word: T,
    pub basis: KernelBasis<T>,
    pub particles: usize,
    /// Resample when ESS falls below this fraction of the particle count.
    pub ess_threshold: T,
    /// Kernel-weight candidates drawn per new cluster.
    pub candidates: usize,
    pub candidate_scale: (T, T),
    pub seed: u64,
    pub mode: Mode,
}

impl Default for FitConfig<f64> {
    fn default() -> Self {
        Self {
            prior: PriorParams {
                r: 1.0,
                alpha0: 1.0,
                lambda0: 1e-30,
            },
            theta_word: 0.01,
            basis: KernelBasis::default_basis(),
            particles: 8,
            ess_threshold: 0.5,
            candidates: 8,
            candidate_scale: (0.1, 2.0),
            seed: 0,
            mode: Mode::Sample,
        }
    }
}

impl<T: Real> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        DmParams::new(self.theta_word, 0)?;
        if self.particles == 0 {
            return Err(Error::config("particle count must be at least 1"));
        }
        if !(self.ess_threshold > T::zero() && self.ess_threshold <= T::one()) {
            return Err(Error::config("ess_threshold must lie in (0, 1]"));
        }
        if self.candidates == 0 {
            return Err(Error::config("candidate count must be at least 1"));
        }
        let (lo, hi) = self.candidate_scale;
        if !(lo > T::zero()) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::config(
                "candidate scale range must satisfy 0 < lo <= hi",
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState<T> {
    pub dynamics: ClusterDynamics<T>,
    pub words: ClusterWordCounts,
}

/// One allocation hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle<T> {
    assignments: Vec<u64>,
    clusters: BTreeMap<u64, ClusterState<T>>,
    next_id: u64,
    log_weight: T,
    last_time: Option<T>,
}

impl<T: Real> Default for Particle<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Particle<T> {
    pub fn new() -> Self {
        Self {
            assignments: Vec::new(),
            clusters: BTreeMap::new(),
            next_id: 1,
            log_weight: T::zero(),
            last_time: None,
        }
    }

    pub fn assignments(&self) -> &[u64] {
        &self.assignments
    }

    pub fn clusters(&self) -> &BTreeMap<u64, ClusterState<T>> {
        &self.clusters
    }

    pub fn cluster(&self, id: u64) -> Option<&ClusterState<T>> {
        self.clusters.get(&id)
    }

    pub fn log_weight(&self) -> T {
        self.log_weight
    }

    pub fn set_log_weight(&mut self, w: T) {
        self.log_weight = w;
    }

    /// Id the next new cluster will receive.
    pub fn next_cluster_id(&self) -> u64 {
        self.next_id
    }

    /// Inserts a prebuilt cluster, e.g. for hand-constructed states.
    pub fn insert_cluster(&mut self, state: ClusterState<T>) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        if let Some(t) = state.dynamics.last_time() {
            self.last_time = Some(self.last_time.map_or(t, |l| l.max(t)));
        }
        self.clusters.insert(id, state);
        id
    }
}

/// Normalized log-posterior over the existing clusters (ascending id) and a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPosterior<T> {
    pub cluster_ids: Vec<u64>,
    pub new_cluster_id: u64,
    /// `cluster_ids.len() + 1` entries; the last is the new cluster.
    pub log_probs: Vec<T>,
    /// Log marginal likelihood of the document under the particle.
    pub log_evidence: T,
}

impl<T: Real> ClusterPosterior<T> {
    pub fn id_at(&self, index: usize) -> u64 {
        self.cluster_ids
            .get(index)
            .copied()
            .unwrap_or(self.new_cluster_id)
    }
}

/// A fit configuration bound to a vocabulary size.
#[derive(Debug, Clone)]
pub struct Model<T> {
    config: FitConfig<T>,
    dm: DmParams<T>,
}

impl<T: Real> Model<T> {
    pub fn new(config: FitConfig<T>, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        let dm = DmParams::new(config.theta_word, vocab_size)?;
        Ok(Self { config, dm })
    }

    pub fn config(&self) -> &FitConfig<T> {
        &self.config
    }

    pub fn dm_params(&self) -> &DmParams<T> {
        &self.dm
    }

    pub fn posterior_over_clusters(
        &self,
        particle: &Particle<T>,
        doc: &Document<T>,
    ) -> Result<ClusterPosterior<T>> {
        if let Some(prev) = particle.last_time {
            if doc.timestamp < prev || doc.timestamp.is_nan() {
                return Err(Error::Ordering {
                    index: particle.assignments.len(),
                    timestamp: doc.timestamp.as_f64(),
                    previous: prev.as_f64(),
                });
            }
        }
        let basis = &self.config.basis;
        let k = particle.clusters.len();
        let mut ids = Vec::with_capacity(k);
        let mut intensities = Vec::with_capacity(k);
        let mut log_post = Vec::with_capacity(k + 1);
        for (&id, state) in &particle.clusters {
            ids.push(id);
            intensities.push(state.dynamics.intensity(basis, doc.timestamp));
            log_post.push(dm_log_predictive(&state.words, &doc.counts, &self.dm)?);
        }
        log_post.push(dm_log_predictive(
            &ClusterWordCounts::new(),
            &doc.counts,
            &self.dm,
        )?);
        let prior = log_pdhp_prior(&intensities, &self.config.prior)?;
        for (lp, pr) in log_post.iter_mut().zip(prior) {
            *lp = *lp + pr;
        }
        let evidence = log_sum_exp(&log_post);
        if !evidence.is_finite() {
            return Err(Error::Data(format!(
                "document {} has zero probability under every cluster",
                doc.id
            )));
        }
        log_post.iter_mut().for_each(|x| *x = *x - evidence);
        Ok(ClusterPosterior {
            cluster_ids: ids,
            new_cluster_id: particle.next_id,
            log_probs: log_post,
            log_evidence: evidence,
        })
    }

    /// Allocates `doc` within `particle` and updates its state and weight.
    /// Returns the chosen cluster id.
    pub fn step<R: Rng + ?Sized>(
        &self,
        particle: &mut Particle<T>,
        doc: &Document<T>,
        rng: &mut R,
    ) -> Result<u64> {
        let post = self.posterior_over_clusters(particle, doc)?;
        let index = match self.config.mode {
            Mode::Greedy => argmax_lowest(&post.log_probs),
            Mode::Sample => sample_index(&post.log_probs, rng),
        };
        let id = post.id_at(index);
        if id == particle.next_id {
            let candidates = sample_candidates(
                self.config.candidate_scale,
                self.config.candidates,
                self.config.basis.len(),
                rng,
            )?;
            particle.clusters.insert(
                id,
                ClusterState {
                    dynamics: ClusterDynamics::new(candidates)?,
                    words: ClusterWordCounts::new(),
                },
            );
            particle.next_id += 1;
        }
        let state = particle
            .clusters
            .get_mut(&id)
            .expect("chosen cluster exists");
        state.dynamics.update(&self.config.basis, doc.timestamp)?;
        state.words.add(&doc.counts);
        particle.assignments.push(id);
        particle.log_weight = particle.log_weight + post.log_evidence;
        particle.last_time = Some(doc.timestamp);
        Ok(id)
    }
}

fn argmax_lowest<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from normalized log-probabilities.
fn sample_index<T: Real, R: Rng + ?Sized>(log_probs: &[T], rng: &mut R) -> usize {
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    let mut last_positive = 0;
    for (i, &lp) in log_probs.iter().enumerate() {
        let p = lp.exp();
        if p > T::zero() {
            last_positive = i;
        }
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// `(Σw)² / Σw²` of the normalized weights.
pub fn effective_sample_size<T: Real>(log_weights: &[T]) -> Result<T> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|w| !w.is_nan())
        .fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::domain("no finite particle weight"));
    }
    let w: Vec<T> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let s: T = w.iter().copied().sum();
    let s2: T = w.iter().map(|&x| x * x).sum();
    Ok(s * s / s2)
}

/// Systematic resampling: indices of the particles to copy, one per slot.
pub fn systematic_indices<T: Real, R: Rng + ?Sized>(log_weights: &[T], rng: &mut R) -> Vec<usize> {
    let n = log_weights.len();
    if n == 0 {
        return Vec::new();
    }
    let max = log_weights.iter().copied().fold(T::neg_infinity(), T::max);
    let w: Vec<T> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let total: T = w.iter().copied().sum();
    let nf = T::from_count(n as u64);
    let u0 = T::lit(rng.random::<f64>()) / nf;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    let mut cum = w[0] / total;
    for i in 0..n {
        let pos = u0 + T::from_count(i as u64) / nf;
        while pos >= cum && j + 1 < n {
            j += 1;
            cum = cum + w[j] / total;
        }
        out.push(j);
    }
    out
}

/// Replaces the population by systematic resampling on the particles'
/// weights; every returned particle carries log-weight 0.
pub fn resample<T: Real, R: Rng + ?Sized>(
    particles: &[Particle<T>],
    rng: &mut R,
) -> Vec<Particle<T>> {
    if particles.len() <= 1 {
        return particles
            .iter()
            .cloned()
            .map(|mut p| {
                p.log_weight = T::zero();
                p
            })
            .collect();
    }
    let lw: Vec<T> = particles.iter().map(|p| p.log_weight).collect();
    systematic_indices(&lw, rng)
        .into_iter()
        .map(|j| {
            let mut p = particles[j].clone();
            p.log_weight = T::zero();
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult<T> {
    /// Cluster id per document, from the highest-weight particle.
    pub assignments: Vec<u64>,
    pub clusters: BTreeMap<u64, ClusterState<T>>,
    /// Final log-weights of all particles, shifted so the largest is 0.
    pub particle_log_weights: Vec<T>,
    pub best_particle: usize,
    pub resample_count: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl<T: Real> ClusteringResult<T> {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }
}

/// RNG for particle slot `slot`; stream 0 is reserved for resampling.
fn slot_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the particle filter over a time-ordered corpus in one pass.
pub fn fit<T: Real>(corpus: &Corpus<T>, config: &FitConfig<T>) -> Result<ClusteringResult<T>> {
    corpus.check_sorted()?;
    let model = Model::new(config.clone(), corpus.vocabulary.len())?;
    let p = config.particles;
    let mut particles: Vec<Particle<T>> = vec![Particle::new(); p];
    let mut rngs: Vec<ChaCha8Rng> = (0..p)
        .map(|i| slot_rng(config.seed, i as u64 + 1))
        .collect();
    let mut resample_rng = slot_rng(config.seed, 0);
    let threshold = config.ess_threshold * T::from_count(p as u64);
    let mut resample_count = 0;

    for doc in &corpus.documents {
        if p == 1 {
            model.step(&mut particles[0], doc, &mut rngs[0])?;
        } else {
            particles
                .par_iter_mut()
                .zip(rngs.par_iter_mut())
                .try_for_each(|(particle, rng)| model.step(particle, doc, rng).map(|_| ()))?;
        }
        let max = particles
            .iter()
            .map(|p| p.log_weight)
            .fold(T::neg_infinity(), T::max);
        particles
            .iter_mut()
            .for_each(|p| p.log_weight = p.log_weight - max);
        let lw: Vec<T> = particles.iter().map(|p| p.log_weight).collect();
        if p > 1 && effective_sample_size(&lw)? < threshold {
            particles = resample(&particles, &mut resample_rng);
            resample_count += 1;
        }
    }

    let weights: Vec<T> = particles.iter().map(|p| p.log_weight).collect();
    let best = argmax_lowest(&weights);
    let winner = particles.swap_remove(best);
    Ok(ClusteringResult {
        assignments: winner.assignments,
        clusters: winner.clusters,
        particle_log_weights: weights,
        best_particle: best,
        resample_count,
        seed: config.seed,
        config_hash: config.hash(),
    })
}
