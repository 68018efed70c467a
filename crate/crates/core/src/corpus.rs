//! Timestamped bag-of-words documents.

use crate::error::{Error, Result};
use crate::language_model::{DocCounts, Vocabulary};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Document<T> {
    pub id: u64,
    pub timestamp: T,
    pub counts: DocCounts,
}

/// Documents in stream order plus the vocabulary their word indices refer to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus<T> {
    pub documents: Vec<Document<T>>,
    pub vocabulary: Vocabulary,
}

impl<T: Real> Corpus<T> {
    pub fn new() -> Self {
        Self {
            documents: Vec::new(),
            vocabulary: Vocabulary::new(),
        }
    }

    /// Appends a document given as already-tokenized words.
    pub fn push_tokens<S: AsRef<str>>(&mut self, id: u64, timestamp: T, tokens: &[S]) {
        let vocab = &mut self.vocabulary;
        let counts = DocCounts::from_indices(tokens.iter().map(|t| vocab.intern(t.as_ref())));
        self.documents.push(Document {
            id,
            timestamp,
            counts,
        });
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Fails on the first document whose timestamp precedes its predecessor's.
    pub fn check_sorted(&self) -> Result<()> {
        for (i, pair) in self.documents.windows(2).enumerate() {
            if pair[1].timestamp < pair[0].timestamp || pair[1].timestamp.is_nan() {
                return Err(Error::Ordering {
                    index: i + 1,
                    timestamp: pair[1].timestamp.as_f64(),
                    previous: pair[0].timestamp.as_f64(),
                });
            }
        }
        Ok(())
    }
}
