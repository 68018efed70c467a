//! Collapsed Dirichlet-Multinomial word model.
//!
//! With a symmetric Dirichlet(`theta_word`) prior over each cluster's word
//! distribution integrated out, the probability of a document's token
//! multiset given the words already in the cluster is a ratio of gamma
//! functions of the counts:
//!
//! ```text
//! Γ(N_c + θ0) / Γ(N_c + n_i + θ0) · Π_v Γ(N_cv + n_iv + θ_v) / Γ(N_cv + θ_v)
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ln_rising, Real};

/// Dense token ↔ index map, grown in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn word(&self, idx: usize) -> Option<&str> {
        self.words.get(idx).map(String::as_str)
    }

    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.words.len();
        self.words.push(token.to_owned());
        self.index.insert(token.to_owned(), i);
        i
    }
}

/// Lowercases, strips punctuation from both ends of each
/// whitespace-separated token, and drops tokens left empty.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Word counts of one document, sorted by word index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocCounts {
    total: u64,
    per_word: Vec<(usize, u64)>,
}

impl DocCounts {
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut idx: Vec<usize> = indices.into_iter().collect();
        idx.sort_unstable();
        let mut per_word: Vec<(usize, u64)> = Vec::new();
        for i in idx {
            match per_word.last_mut() {
                Some((w, c)) if *w == i => *c += 1,
                _ => per_word.push((i, 1)),
            }
        }
        let total = per_word.iter().map(|(_, c)| c).sum();
        Self { total, per_word }
    }

    /// From `(word, count)` pairs; zero counts are dropped, repeats merged.
    pub fn from_counts<I: IntoIterator<Item = (usize, u64)>>(pairs: I) -> Self {
        let mut map: std::collections::BTreeMap<usize, u64> = Default::default();
        for (w, c) in pairs {
            if c > 0 {
                *map.entry(w).or_default() += c;
            }
        }
        let per_word: Vec<_> = map.into_iter().collect();
        let total = per_word.iter().map(|(_, c)| c).sum();
        Self { total, per_word }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.per_word.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Each word index repeated by its count, ascending.
    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_word
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
    }
}

/// Sufficient statistics of the words allocated to one cluster.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterWordCounts {
    total: u64,
    per_word: HashMap<usize, u64>,
}

impl ClusterWordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, word: usize) -> u64 {
        self.per_word.get(&word).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.per_word.len()
    }

    pub fn add(&mut self, doc: &DocCounts) {
        for (w, c) in doc.iter() {
            *self.per_word.entry(w).or_default() += c;
        }
        self.total += doc.total();
    }

    /// Words by decreasing count, ties by index.
    pub fn top_words(&self, k: usize) -> Vec<(usize, u64)> {
        let mut v: Vec<(usize, u64)> = self.per_word.iter().map(|(&w, &c)| (w, c)).collect();
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

/// Symmetric Dirichlet concentration over a vocabulary of `vocab_size` words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmParams<T> {
    theta_word: T,
    vocab_size: usize,
}

impl<T: Real> DmParams<T> {
    pub fn new(theta_word: T, vocab_size: usize) -> Result<Self> {
        if !(theta_word > T::zero()) || !theta_word.is_finite() {
            return Err(Error::config(format!(
                "theta_word must be > 0, got {theta_word}"
            )));
        }
        Ok(Self {
            theta_word,
            vocab_size,
        })
    }

    pub fn theta_word(&self) -> T {
        self.theta_word
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Total concentration `θ0 = V · θ_v`.
    pub fn theta0(&self) -> T {
        T::from_count(self.vocab_size as u64) * self.theta_word
    }
}

/// Log predictive probability of `doc` given the words already in `cluster`.
pub fn dm_log_predictive<T: Real>(
    cluster: &ClusterWordCounts,
    doc: &DocCounts,
    params: &DmParams<T>,
) -> Result<T> {
    let mut acc = T::zero();
    for (w, c) in doc.iter() {
        if w >= params.vocab_size {
            return Err(Error::domain(format!(
                "word index {w} outside vocabulary of size {}",
                params.vocab_size
            )));
        }
        let prior = T::from_count(cluster.count(w)) + params.theta_word;
        acc = acc + ln_rising(prior, c);
    }
    let base = T::from_count(cluster.total) + params.theta0();
    Ok(acc - ln_rising(base, doc.total))
}

pub fn update_counts(cluster: &mut ClusterWordCounts, doc: &DocCounts) {
    cluster.add(doc);
}
