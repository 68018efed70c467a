//! Online clustering of timestamped documents with the powered
//! Dirichlet-Hawkes process.
//!
//! Each cluster carries a Hawkes intensity over a truncated-Gaussian kernel
//! basis. A new document joins cluster `c` with prior mass proportional to
//! `λ_c(t)^r` (or opens a new cluster with mass `λ0`), multiplied by a
//! collapsed Dirichlet-Multinomial likelihood of its words. A particle
//! filter tracks several allocation hypotheses over the stream. The power
//! `r` trades textual against temporal evidence: `r = 0` ignores dynamics,
//! `r = 1` is the Dirichlet-Hawkes process, larger `r` lets timing dominate.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// Negated comparisons such as `!(x > 0.0)` are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod language_model;
pub mod point_process;
pub mod prior;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type KernelBasis = point_process::KernelBasis<f64>;
pub type ClusterDynamics = point_process::ClusterDynamics<f64>;
pub type PriorParams = prior::PriorParams<f64>;
pub type DmParams = language_model::DmParams<f64>;
pub type Document = corpus::Document<f64>;
pub type Corpus = corpus::Corpus<f64>;
pub type FitConfig = inference::FitConfig<f64>;
pub type Particle = inference::Particle<f64>;
pub type Model = inference::Model<f64>;
pub type ClusteringResult = inference::ClusteringResult<f64>;
pub type GenerationSpec = datagen::GenerationSpec<f64>;
pub type LabeledCorpus = datagen::LabeledCorpus<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type KernelBasis = crate::point_process::KernelBasis<f32>;
    pub type ClusterDynamics = crate::point_process::ClusterDynamics<f32>;
    pub type PriorParams = crate::prior::PriorParams<f32>;
    pub type Corpus = crate::corpus::Corpus<f32>;
    pub type FitConfig = crate::inference::FitConfig<f32>;
    pub type ClusteringResult = crate::inference::ClusteringResult<f32>;
}
