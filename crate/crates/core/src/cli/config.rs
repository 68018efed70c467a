//! Flat key-value run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::GenerationSpec;
use crate::error::{Error, Result};
use crate::evaluation::{Normalization, SweepGrid};
use crate::inference::{FitConfig, Mode};
use crate::point_process::KernelBasis;
use crate::prior::PriorParams;

/// Every knob of every command. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // generation
    pub clusters: usize,
    pub vocab_per_cluster: usize,
    pub words_per_doc: usize,
    pub textual_overlap: f64,
    pub intensity_overlap: f64,
    pub decorrelation: f64,
    pub window: f64,
    pub base_rate: f64,
    pub branching: f64,

    // kernel basis, shared by generation and fitting
    pub kernel_means: Vec<f64>,
    pub kernel_bandwidths: Vec<f64>,
    /// Defaults to max(mean) + 5 max(bandwidth).
    pub kernel_horizon: Option<f64>,

    // fitting
    pub r: f64,
    pub alpha0: f64,
    pub lambda0: f64,
    pub theta_word: f64,
    pub particles: usize,
    pub ess_threshold: f64,
    pub candidates: usize,
    pub candidate_scale_min: f64,
    pub candidate_scale_max: f64,
    pub mode: Mode,
    pub seed: u64,

    // evaluation and sweeps
    pub normalization: Normalization,
    pub sweep_r: Vec<f64>,
    pub sweep_textual_overlap: Vec<f64>,
    pub sweep_intensity_overlap: Vec<f64>,
    pub sweep_decorrelation: Vec<f64>,
    pub sweep_seeds: usize,

    // exports
    /// Spacing of the exported intensity grid.
    pub intensity_step: f64,
    pub top_words: usize,

    // paths, overridden by command-line flags
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub assignments: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let gen = GenerationSpec::default();
        let fit = FitConfig::default();
        let grid = SweepGrid::default();
        Self {
            clusters: gen.clusters,
            vocab_per_cluster: gen.vocab_per_cluster,
            words_per_doc: gen.words_per_doc,
            textual_overlap: gen.textual_overlap,
            intensity_overlap: gen.intensity_overlap,
            decorrelation: gen.decorrelation,
            window: gen.window,
            base_rate: gen.base_rate,
            branching: gen.branching,
            kernel_means: fit.basis.means().to_vec(),
            kernel_bandwidths: fit.basis.bandwidths().to_vec(),
            kernel_horizon: None,
            r: fit.prior.r,
            alpha0: fit.prior.alpha0,
            lambda0: fit.prior.lambda0,
            theta_word: fit.theta_word,
            particles: fit.particles,
            ess_threshold: fit.ess_threshold,
            candidates: fit.candidates,
            candidate_scale_min: fit.candidate_scale.0,
            candidate_scale_max: fit.candidate_scale.1,
            mode: fit.mode,
            seed: fit.seed,
            normalization: Normalization::default(),
            sweep_r: grid.r,
            sweep_textual_overlap: grid.textual_overlap,
            sweep_intensity_overlap: grid.intensity_overlap,
            sweep_decorrelation: grid.decorrelation,
            sweep_seeds: grid.seeds,
            intensity_step: 1.0,
            top_words: 10,
            corpus: None,
            labels: None,
            assignments: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn basis(&self) -> Result<KernelBasis<f64>> {
        let means = self.kernel_means.clone();
        let bws = self.kernel_bandwidths.clone();
        match self.kernel_horizon {
            Some(h) => KernelBasis::new(means, bws, h),
            None => KernelBasis::with_min_horizon(means, bws),
        }
    }

    pub fn fit_config(&self) -> Result<FitConfig<f64>> {
        let cfg = FitConfig {
            prior: PriorParams::new(self.r, self.alpha0, self.lambda0)?,
            theta_word: self.theta_word,
            basis: self.basis()?,
            particles: self.particles,
            ess_threshold: self.ess_threshold,
            candidates: self.candidates,
            candidate_scale: (self.candidate_scale_min, self.candidate_scale_max),
            seed: self.seed,
            mode: self.mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn generation_spec(&self) -> Result<GenerationSpec<f64>> {
        let spec = GenerationSpec {
            clusters: self.clusters,
            vocab_per_cluster: self.vocab_per_cluster,
            words_per_doc: self.words_per_doc,
            textual_overlap: self.textual_overlap,
            intensity_overlap: self.intensity_overlap,
            decorrelation: self.decorrelation,
            window: self.window,
            base_rate: self.base_rate,
            branching: self.branching,
            kernel_weights: None,
            basis: self.basis()?,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        let grid = SweepGrid {
            r: self.sweep_r.clone(),
            textual_overlap: self.sweep_textual_overlap.clone(),
            intensity_overlap: self.sweep_intensity_overlap.clone(),
            decorrelation: self.sweep_decorrelation.clone(),
            seeds: self.sweep_seeds,
            base_seed: self.seed,
        };
        grid.validate()?;
        Ok(grid)
    }
}
