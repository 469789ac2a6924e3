use serde::{Deserialize, Serialize};

use super::{run_experiment, RunOptions};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::Result;

/// Wall-clock seconds of one algorithm. BADAC has no separate training
/// phase, so only its total is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub fit_seconds: Option<f64>,
    pub score_seconds: Option<f64>,
    pub total_seconds: f64,
}

impl PhaseTiming {
    pub fn combined(total: f64) -> Self {
        PhaseTiming {
            fit_seconds: None,
            score_seconds: None,
            total_seconds: total,
        }
    }

    pub fn phased(fit: f64, score: f64) -> Self {
        PhaseTiming {
            fit_seconds: Some(fit),
            score_seconds: Some(score),
            total_seconds: fit + score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmTiming {
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub timing: PhaseTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_train: usize,
    pub n_test: usize,
    /// The quantity scoring time is expected to grow linearly with.
    pub n_train_x_n_test: usize,
    pub grid_points: usize,
    pub threads: usize,
    pub hardware: String,
    pub algorithms: Vec<AlgorithmTiming>,
}

/// CPU model (when the OS exposes it), architecture and core count.
pub fn hardware_note() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{cpu}; {} {}; {cores} logical cores", std::env::consts::OS, std::env::consts::ARCH)
}

/// Runs the configured algorithms once and reports their wall-clock times.
/// Simulation is excluded.
pub fn timing_report(config: &ExperimentConfig, options: RunOptions) -> Result<TimingReport> {
    let run = run_experiment(config, options)?;
    Ok(TimingReport {
        n_train: config.n_train,
        n_test: config.n_test,
        n_train_x_n_test: config.n_train * config.n_test,
        grid_points: config.grid_points,
        threads: run.report.threads,
        hardware: hardware_note(),
        algorithms: run
            .report
            .results
            .iter()
            .map(|r| AlgorithmTiming {
                algorithm: r.algorithm,
                timing: r.timing,
            })
            .collect(),
    })
}
