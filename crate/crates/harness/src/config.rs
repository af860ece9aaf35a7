//! JSON experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shufflesgd::{Preset, PresetArgs, ShuffleKind};

use crate::error::{HarnessError, Result};

fn default_lambda() -> f64 {
    shufflesgd::problems::DEFAULT_LAMBDA
}
fn default_max_rows() -> Option<usize> {
    Some(5_000)
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_true() -> bool {
    true
}
fn default_beta() -> f64 {
    1.0
}
fn default_strategies() -> Vec<ShuffleKind> {
    vec![ShuffleKind::RandomReshuffle, ShuffleKind::ShuffleOnce, ShuffleKind::IncrementalGradient]
}

/// Source of the finite-sum objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Logistic loss on a LIBSVM file (optionally gzip-compressed).
    Libsvm {
        path: PathBuf,
        /// Companion test file; without one a seeded split of the training rows is held out.
        #[serde(default)]
        test_path: Option<PathBuf>,
        #[serde(default = "default_lambda")]
        lambda: f64,
        /// Seeded subsample size of the training rows; `null` keeps all rows.
        #[serde(default = "default_max_rows")]
        max_rows: Option<usize>,
        #[serde(default)]
        subsample_seed: u64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        split_seed: u64,
        /// Min-max scale features to `[0, 1]` using training statistics.
        #[serde(default = "default_true")]
        scale: bool,
    },
    /// Logistic loss on sparse binary features with planted labels.
    SyntheticLogistic {
        n: usize,
        d: usize,
        density: f64,
        #[serde(default)]
        label_noise: f64,
        seed: u64,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    /// Separable quadratics with diagonal scale matrices.
    Quadratic { n: usize, d: usize, curvature: (f64, f64), spread: f64, seed: u64 },
}

/// Learning-rate grid. `alpha = 0` in a grid denotes the constant rate `eta_t = gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleGrid {
    /// Cartesian product of `alphas` and `gamma_over_n`, `eta_t = n * gamma_over_n / (t + beta)^alpha`.
    Grid {
        alphas: Vec<f64>,
        gamma_over_n: Vec<f64>,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// One named schedule built from the problem constants.
    Preset {
        preset: Preset,
        #[serde(default)]
        args: PresetArgs<f64>,
    },
}

/// Starting point shared by every run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zero,
    /// Coordinates uniform on `[-radius, radius]`.
    Uniform { radius: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<ShuffleKind>,
    pub schedules: ScheduleGrid,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub init: InitSpec,
    /// Run the per-epoch audits and report them in the manifest.
    #[serde(default)]
    pub audit: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be a non-empty file stem");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.strategies.is_empty() {
            return bad("strategy grid is empty");
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty");
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        if let ScheduleGrid::Grid { alphas, gamma_over_n, beta } = &self.schedules {
            if alphas.is_empty() || gamma_over_n.is_empty() {
                return bad("schedule grid is empty");
            }
            if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return bad("alpha must lie in [0, 1]");
            }
            if gamma_over_n.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                return bad("gamma_over_n must be positive");
            }
            if !(*beta >= 0.0 && beta.is_finite()) {
                return bad("beta must be nonnegative");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
