//! Bayesian anomaly detection and classification for vector instances that
//! carry per-point measurement uncertainties.
//!
//! Every class is represented by its training instances. A test instance is
//! scored against each training instance with the latent true values
//! integrated out, and the class evidences together with a top-hat anomaly
//! hypothesis give calibrated class posteriors and an anomaly ranking.

pub mod baselines;
pub mod config;
pub mod covariance;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod simulators;

pub use config::{Algorithm, AnomalyPriorMode, ExperimentConfig, ExperimentKind, Scale};
pub use covariance::CovarianceModel;
pub use engine::{
    class_log_evidence, compress_to_template, posterior, rank_anomalies, AnomalyHypothesis, AnomalyLikelihood,
    Hypothesis, PosteriorReport, TopHatPrior,
};
pub use error::{BadacError, Result};
pub use model::{ClassId, ClassModel, Dataset, Grid, Instance, TemplateModel};
