//! Experiment configuration, loadable from TOML or JSON.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BadacError, Result};

pub const DESK_SCALE: usize = 2000;
pub const PAPER_SCALE: usize = 15000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Table-1 classes with uncorrelated Gaussian noise.
    Gaussian,
    /// Inliers as in `Gaussian`; outliers are class-0 sines with a narrow bump.
    Compact,
    /// Table-1 classes; 20% of points get noise five times wider than reported.
    NonGaussian,
    /// Table-1 classes; class 0 noise is drawn from a wedding-cake covariance.
    Correlated,
}

impl ExperimentKind {
    pub fn default_anomaly_prior(self) -> AnomalyPriorMode {
        match self {
            ExperimentKind::Gaussian | ExperimentKind::Compact => AnomalyPriorMode::TophatRange,
            ExperimentKind::NonGaussian | ExperimentKind::Correlated => AnomalyPriorMode::ContaminationCalibrated,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Gaussian => "gaussian",
            ExperimentKind::Compact => "compact",
            ExperimentKind::NonGaussian => "non_gaussian",
            ExperimentKind::Correlated => "correlated",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyPriorMode {
    /// Top-hat over twice the observed data range.
    TophatRange,
    /// Top-hat height set so the configured outlier fraction is flagged.
    ContaminationCalibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Badac,
    BadacTemplate,
    Knn,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Badac => "badac",
            Algorithm::BadacTemplate => "badac_template",
            Algorithm::Knn => "knn",
        }
    }
}

impl FromStr for Algorithm {
    type Err = BadacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "badac" => Ok(Algorithm::Badac),
            "badac_template" | "template" => Ok(Algorithm::BadacTemplate),
            "knn" => Ok(Algorithm::Knn),
            other => Err(BadacError::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn instances(self) -> usize {
        match self {
            Scale::Desk => DESK_SCALE,
            Scale::Paper => PAPER_SCALE,
        }
    }
}

impl FromStr for Scale {
    type Err = BadacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(BadacError::Config(format!("unknown scale `{other}`"))),
        }
    }
}

fn default_fraction() -> f64 {
    0.01
}
fn default_grid_points() -> usize {
    50
}
fn default_x_max() -> f64 {
    1.0
}
fn default_count() -> usize {
    DESK_SCALE
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Badac, Algorithm::Knn]
}
fn default_knn_k() -> usize {
    10
}
fn default_bins() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_count")]
    pub n_train: usize,
    #[serde(default = "default_count")]
    pub n_test: usize,
    #[serde(default = "default_fraction")]
    pub outlier_fraction: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Curves are sampled uniformly on `[0, x_max]`.
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub seed: u64,
    /// Defaults per experiment kind when absent.
    #[serde(default)]
    pub anomaly_prior: Option<AnomalyPriorMode>,
    /// Defaults to the number of outliers in the test set.
    #[serde(default)]
    pub rws_n: Option<usize>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default = "default_bins")]
    pub calibration_bins: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n_train: DESK_SCALE,
            n_test: DESK_SCALE,
            outlier_fraction: default_fraction(),
            grid_points: default_grid_points(),
            x_max: default_x_max(),
            seed: 0,
            anomaly_prior: None,
            rws_n: None,
            algorithms: default_algorithms(),
            knn_k: default_knn_k(),
            calibration_bins: default_bins(),
        }
    }

    pub fn with_counts(mut self, n_train: usize, n_test: usize) -> Self {
        self.n_train = n_train;
        self.n_test = n_test;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scale(self, scale: Scale) -> Self {
        let n = scale.instances();
        self.with_counts(n, n)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BadacError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| BadacError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| BadacError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train < 2 {
            return Err(BadacError::Config("n_train must be at least 2 (one per inlier class)".into()));
        }
        if self.n_test < 1 {
            return Err(BadacError::Config("n_test must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(BadacError::InvalidFraction(self.outlier_fraction));
        }
        if self.grid_points < 1 {
            return Err(BadacError::Config("grid_points must be at least 1".into()));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(BadacError::Config(format!("x_max must be positive, got {}", self.x_max)));
        }
        if self.kind == ExperimentKind::Correlated && self.grid_points < 5 {
            return Err(BadacError::Config("correlated experiments need at least 5 grid points".into()));
        }
        if self.knn_k < 1 || self.knn_k > self.n_train {
            return Err(BadacError::InvalidK {
                k: self.knn_k,
                n: self.n_train,
            });
        }
        if self.calibration_bins < 1 {
            return Err(BadacError::Config("calibration_bins must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BadacError::Config("no algorithms selected".into()));
        }
        Ok(())
    }

    pub fn anomaly_prior_mode(&self) -> AnomalyPriorMode {
        self.anomaly_prior.unwrap_or_else(|| self.kind.default_anomaly_prior())
    }

    /// Number of outliers placed in the test set.
    pub fn n_outliers(&self) -> usize {
        (self.outlier_fraction * self.n_test as f64).round() as usize
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
