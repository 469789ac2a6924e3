//! End-to-end experiments: simulate, score with BADAC and the baselines,
//! evaluate, and write report artifacts.

mod io;
mod plots;
mod table;
mod timing;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{load_dataset, load_metadata, read_dataset, save_dataset, save_metadata, write_dataset, DATASET_HEADER};
pub use plots::{emit_calibration_data, emit_roc_data, emit_scatter_data};
pub use table::{InstanceRow, InstanceTable};
pub use timing::{hardware_note, timing_report, PhaseTiming, TimingReport};

use crate::baselines::{knn_predict, NeighborModel};
use crate::config::{Algorithm, AnomalyPriorMode, ExperimentConfig, ExperimentKind};
use crate::engine::{
    calibrate_tophat_by_contamination, class_log_evidence, compress_to_template, log_sum_exp, template_log_likelihood,
    tophat_from_values, AnomalyHypothesis, AnomalyLikelihood, PosteriorReport,
};
use crate::error::{BadacError, Result};
use crate::metrics::{accuracy, calibration_curve, roc_curve, auc, rws, CalibrationCurve, Confusion, RocPoint};
use crate::model::{ClassModel, Dataset};
use crate::simulators::{generate_dataset, Provenance, SimulatedData};

pub const REPORT_FILE: &str = "report.json";

/// Execution settings that do not change results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for scoring; 0 uses every available core.
    pub threads: usize,
}

/// Summary metrics of one algorithm, all derivable from its instance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmMetrics {
    /// `None` when the test set holds a single kind (e.g. no outliers).
    pub auc: Option<f64>,
    /// `None` (skipped) when there are no outliers to rank.
    pub rws: Option<f64>,
    pub rws_n: Option<usize>,
    pub mcc: f64,
    pub confusion: Confusion,
    /// Pooled accuracy over inlier test instances; the headline figure.
    pub accuracy: Option<f64>,
    /// Mean of the per-class accuracies over inlier classes.
    pub accuracy_macro: Option<f64>,
    pub roc: Option<Vec<RocPoint>>,
    /// Probability of the second class (class 1 in the built-in
    /// experiments) against membership in it, over inlier test instances.
    pub calibration: CalibrationCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub metrics: AlgorithmMetrics,
    pub timing: PhaseTiming,
    /// Name of the per-instance table file next to the report.
    pub table_file: String,
    #[serde(skip)]
    pub table: Option<InstanceTable>,
}

/// A published number for side-by-side display; never computed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperReference {
    pub experiment: ExperimentKind,
    pub algorithm: String,
    pub metric: String,
    pub value: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub provenance: Provenance,
    pub anomaly_prior: AnomalyPriorMode,
    pub n_test: usize,
    pub n_outliers: usize,
    pub threads: usize,
    pub results: Vec<AlgorithmReport>,
    pub reference_from_paper: Vec<PaperReference>,
}

impl MetricsReport {
    pub fn result(&self, algorithm: Algorithm) -> Option<&AlgorithmReport> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn table(&self, algorithm: Algorithm) -> Option<&InstanceTable> {
        self.result(algorithm).and_then(|r| r.table.as_ref())
    }

    /// Writes the JSON report, every instance table and the plot-data files.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join(REPORT_FILE), json)?;
        for r in &self.results {
            if let Some(t) = &r.table {
                let f = std::fs::File::create(dir.join(&r.table_file))?;
                t.write_csv(std::io::BufWriter::new(f))?;
            }
            let cal = std::fs::File::create(dir.join(format!("calibration_{}.csv", r.algorithm.as_str())))?;
            emit_calibration_data(self, r.algorithm, cal)?;
            if r.metrics.roc.is_some() {
                let roc = std::fs::File::create(dir.join(format!("roc_{}.csv", r.algorithm.as_str())))?;
                emit_roc_data(self, r.algorithm, roc)?;
            }
        }
        if self.table(Algorithm::Badac).is_some() {
            emit_scatter_data(self, std::fs::File::create(dir.join("scatter.csv"))?)?;
        }
        Ok(())
    }

    /// Reads a report and its instance tables from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(REPORT_FILE))?;
        let mut report: MetricsReport = serde_json::from_str(&text)?;
        for r in &mut report.results {
            let f = std::fs::File::open(dir.join(&r.table_file))?;
            r.table = Some(InstanceTable::read_csv(r.algorithm, std::io::BufReader::new(f))?);
        }
        Ok(report)
    }
}

/// A finished experiment: the simulated data and its report.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub data: SimulatedData,
    pub report: MetricsReport,
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BadacError::Config(format!("cannot start {threads} worker threads: {e}")))
}

/// Simulates the configured dataset and evaluates every configured
/// algorithm on it. Results depend only on the config; `options` only
/// affects speed.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentRun> {
    config.validate()?;
    let data = generate_dataset(config)?;
    let report = evaluate(config, &data, options)?;
    Ok(ExperimentRun { data, report })
}

/// Scores an already simulated dataset.
pub fn evaluate(config: &ExperimentConfig, data: &SimulatedData, options: RunOptions) -> Result<MetricsReport> {
    let pool = thread_pool(options.threads)?;
    let threads = pool.current_num_threads();
    let mode = config.anomaly_prior_mode();
    let mut results = Vec::new();
    for &algorithm in &config.algorithms {
        let (table, timing) = match algorithm {
            Algorithm::Badac | Algorithm::BadacTemplate => {
                let start = Instant::now();
                let table = pool.install(|| score_badac(&data.train, &data.test, config, algorithm))?;
                (table, PhaseTiming::combined(start.elapsed().as_secs_f64()))
            }
            Algorithm::Knn => pool.install(|| score_knn(&data.train, &data.test, config))?,
        };
        let metrics = compute_metrics(&table, config.rws_n, config.calibration_bins)?;
        results.push(AlgorithmReport {
            algorithm,
            metrics,
            timing,
            table_file: InstanceTable::file_name(algorithm),
            table: Some(table),
        });
    }
    Ok(MetricsReport {
        config: config.clone(),
        config_hash: config.hash(),
        provenance: data.provenance.clone(),
        anomaly_prior: mode,
        n_test: data.test.len(),
        n_outliers: data.provenance.n_outliers,
        threads,
        results,
        reference_from_paper: paper_reference(config.kind),
    })
}

/// Flat priors over the known classes and the anomaly hypothesis.
pub fn class_models(train: &Dataset) -> Result<Vec<ClassModel>> {
    let classes = train.classes();
    if classes.is_empty() {
        return Err(BadacError::EmptyDataset);
    }
    let prior = 1.0 / (classes.len() + 1) as f64;
    classes
        .iter()
        .map(|&c| ClassModel::new(c, train.of_class(c).cloned().collect(), prior))
        .collect()
}

fn score_badac(train: &Dataset, test: &Dataset, config: &ExperimentConfig, algorithm: Algorithm) -> Result<InstanceTable> {
    let models = class_models(train)?;
    let anomaly_prior = 1.0 / (models.len() + 1) as f64;
    let class_ids: Vec<_> = models.iter().map(ClassModel::class_id).collect();
    let priors: Vec<f64> = models.iter().map(ClassModel::prior).collect();

    let lls: Vec<Vec<f64>> = if algorithm == Algorithm::BadacTemplate {
        let templates = models.iter().map(compress_to_template).collect::<Result<Vec<_>>>()?;
        test.instances()
            .par_iter()
            .map(|t| templates.iter().map(|m| template_log_likelihood(t, m)).collect())
            .collect::<Result<_>>()?
    } else {
        test.instances()
            .par_iter()
            .map(|t| models.iter().map(|m| class_log_evidence(t, m)).collect())
            .collect::<Result<_>>()?
    };

    let anomaly_ll: Box<dyn Fn(usize) -> f64> = match config.anomaly_prior_mode() {
        AnomalyPriorMode::TophatRange => {
            let values = train
                .instances()
                .iter()
                .chain(test.instances())
                .flat_map(|i| i.values().iter().copied());
            let hyp = AnomalyHypothesis {
                likelihood: AnomalyLikelihood::TopHat(tophat_from_values(values)?),
                prior: anomaly_prior,
            };
            Box::new(move |i| hyp.log_likelihood(&test.instances()[i]))
        }
        AnomalyPriorMode::ContaminationCalibrated => {
            let known: Vec<f64> = lls
                .iter()
                .map(|l| log_sum_exp(&l.iter().zip(&priors).map(|(l, p)| l + p.ln()).collect::<Vec<_>>()))
                .collect();
            // Anomaly term (likelihood plus log prior) equals the cut.
            let height = if config.outlier_fraction > 0.0 && !known.is_empty() {
                calibrate_tophat_by_contamination(&known, config.outlier_fraction)? - anomaly_prior.ln()
            } else {
                f64::NEG_INFINITY
            };
            Box::new(move |_| height)
        }
    };

    let rows = lls
        .into_iter()
        .enumerate()
        .map(|(i, ll)| {
            let report = PosteriorReport::from_log_likelihoods(
                class_ids.clone(),
                &priors,
                ll,
                Some((anomaly_ll(i), anomaly_prior)),
            )?;
            let true_class = test.instances()[i].label().unwrap_or(u32::MAX);
            Ok(InstanceRow {
                instance_id: i,
                true_class,
                is_outlier: !class_ids.contains(&true_class),
                predicted_class: report.predicted_class(),
                flagged: report.is_flagged(),
                anomaly_score: report.anomaly_score,
                class_probs: report.classification_probs(),
                log_p: report.class_log_evidence,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InstanceTable {
        algorithm,
        class_ids,
        rows,
    })
}

/// `⌈fraction·n⌉` (0 for a zero fraction), with the same rounding guard as
/// contamination calibration.
fn flag_count(fraction: f64, n: usize) -> usize {
    if fraction <= 0.0 {
        0
    } else {
        ((fraction * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
    }
}

fn score_knn(train: &Dataset, test: &Dataset, config: &ExperimentConfig) -> Result<(InstanceTable, PhaseTiming)> {
    let start = Instant::now();
    let model = NeighborModel::fit(train, config.knn_k)?;
    let fit = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let results = test
        .instances()
        .par_iter()
        .map(|t| model.query(t))
        .collect::<Result<Vec<_>>>()?;
    let class_ids = model.classes().to_vec();
    let mut rows: Vec<InstanceRow> = results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let true_class = test.instances()[i].label().unwrap_or(u32::MAX);
            InstanceRow {
                instance_id: i,
                true_class,
                is_outlier: !class_ids.contains(&true_class),
                predicted_class: knn_predict(&model, &r.probs),
                flagged: false,
                anomaly_score: r.anomaly_score,
                log_p: r.probs.iter().map(|p| p.ln()).collect(),
                class_probs: r.probs,
            }
        })
        .collect();
    let k = flag_count(config.outlier_fraction, rows.len());
    for &i in ranking(&rows).iter().take(k) {
        rows[i].flagged = true;
    }
    let score = start.elapsed().as_secs_f64();
    let table = InstanceTable {
        algorithm: Algorithm::Knn,
        class_ids,
        rows,
    };
    Ok((table, PhaseTiming::phased(fit, score)))
}

/// Row indices from most to least anomalous; ties keep table order.
pub fn ranking(rows: &[InstanceRow]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].anomaly_score.total_cmp(&rows[a].anomaly_score).then(a.cmp(&b)));
    order
}

/// Recomputes every summary metric from an instance table.
pub fn compute_metrics(table: &InstanceTable, rws_n: Option<usize>, bins: usize) -> Result<AlgorithmMetrics> {
    let rows = &table.rows;
    let truth: Vec<bool> = rows.iter().map(|r| r.is_outlier).collect();
    let n_outliers = truth.iter().filter(|&&t| t).count();
    let scores: Vec<f64> = rows.iter().map(|r| r.anomaly_score).collect();

    let roc = if n_outliers > 0 && n_outliers < rows.len() {
        Some(roc_curve(&scores, &truth)?)
    } else {
        None
    };
    let rws_n = rws_n.or((n_outliers > 0).then_some(n_outliers));
    let rws = match rws_n {
        Some(n) => {
            let ranked: Vec<bool> = ranking(rows).into_iter().map(|i| truth[i]).collect();
            Some(rws(&ranked, n)?)
        }
        None => None,
    };
    let flagged: Vec<bool> = rows.iter().map(|r| r.flagged).collect();
    let confusion = Confusion::from_predictions(&flagged, &truth)?;

    let inliers: Vec<&InstanceRow> = rows.iter().filter(|r| !r.is_outlier).collect();
    let (acc, acc_macro) = if inliers.is_empty() {
        (None, None)
    } else {
        let pred: Vec<_> = inliers.iter().map(|r| r.predicted_class).collect();
        let want: Vec<_> = inliers.iter().map(|r| r.true_class).collect();
        let per_class: Vec<f64> = table
            .class_ids
            .iter()
            .filter_map(|&c| {
                let members: Vec<_> = inliers.iter().filter(|r| r.true_class == c).collect();
                (!members.is_empty()).then(|| {
                    members.iter().filter(|r| r.predicted_class == c).count() as f64 / members.len() as f64
                })
            })
            .collect();
        (
            Some(accuracy(&pred, &want)?),
            Some(per_class.iter().sum::<f64>() / per_class.len() as f64),
        )
    };

    let pos = table.class_ids.len().clamp(1, 2) - 1;
    let target = table.class_ids.get(pos).copied();
    let probs: Vec<f64> = inliers.iter().map(|r| r.class_probs[pos].clamp(0.0, 1.0)).collect();
    let is_target: Vec<bool> = inliers.iter().map(|r| Some(r.true_class) == target).collect();
    let calibration = calibration_curve(&probs, &is_target, bins)?;

    Ok(AlgorithmMetrics {
        auc: roc.as_deref().map(auc),
        rws,
        rws_n,
        mcc: confusion.mcc(),
        confusion,
        accuracy: acc,
        accuracy_macro: acc_macro,
        roc,
        calibration,
    })
}

fn paper_reference(kind: ExperimentKind) -> Vec<PaperReference> {
    let rows: &[(&str, &str, f64)] = match kind {
        ExperimentKind::Gaussian => &[
            ("badac", "mcc", 0.95),
            ("badac", "auc", 0.99),
            ("badac", "rws", 0.99),
            ("badac", "accuracy", 0.9902),
            ("isolation_forest", "mcc", 0.00),
            ("isolation_forest", "auc", 0.89),
            ("isolation_forest", "rws", 0.02),
            ("lof", "mcc", 0.83),
            ("lof", "auc", 0.97),
            ("lof", "rws", 0.96),
            ("random_forest", "accuracy", 0.9866),
        ],
        ExperimentKind::Compact => &[
            ("badac", "mcc", 0.41),
            ("badac", "auc", 0.91),
            ("badac", "rws", 0.59),
            ("badac", "accuracy", 0.9551),
            ("isolation_forest", "mcc", 0.11),
            ("isolation_forest", "auc", 0.80),
            ("isolation_forest", "rws", 0.14),
            ("lof", "mcc", 0.44),
            ("lof", "auc", 0.90),
            ("lof", "rws", 0.63),
            ("random_forest", "accuracy", 0.9518),
        ],
        ExperimentKind::NonGaussian => &[
            ("badac", "mcc", 0.84),
            ("badac", "auc", 0.99),
            ("badac", "rws", 0.96),
            ("badac", "accuracy", 0.9771),
            ("isolation_forest", "mcc", 0.06),
            ("isolation_forest", "auc", 0.84),
            ("isolation_forest", "rws", 0.10),
            ("lof", "mcc", 0.16),
            ("lof", "auc", 0.84),
            ("lof", "rws", 0.18),
            ("random_forest", "accuracy", 0.9814),
        ],
        ExperimentKind::Correlated => &[
            ("badac", "mcc", 0.68),
            ("badac", "auc", 0.97),
            ("badac", "rws", 0.84),
            ("badac", "accuracy", 0.6888),
            ("isolation_forest", "mcc", 0.01),
            ("isolation_forest", "auc", 0.70),
            ("isolation_forest", "rws", 0.03),
            ("lof", "mcc", 0.61),
            ("lof", "auc", 0.96),
            ("lof", "rws", 0.76),
            ("random_forest", "accuracy", 0.9672),
        ],
    };
    rows.iter()
        .map(|&(algorithm, metric, value)| PaperReference {
            experiment: kind,
            algorithm: algorithm.into(),
            metric: metric.into(),
            value,
            source: "from paper (15000/15000 curves)".into(),
        })
        .collect()
}
