//! Python bindings: instances, class models, posterior scoring, anomaly
//! ranking, metrics and the experiment harness.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use badac::config::{ExperimentConfig, ExperimentKind};
use badac::engine::{self, AnomalyHypothesis, AnomalyLikelihood, TopHatPrior};
use badac::harness::{self, RunOptions};
use badac::{metrics, simulators, ClassId};

create_exception!(pybadac, BadacError, PyValueError);

fn err(e: badac::BadacError) -> PyErr {
    BadacError::new_err(e.to_string())
}

/// One measured curve: grid positions, values and 1σ uncertainties.
#[pyclass(name = "Instance", module = "pybadac", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyInstance {
    pub inner: badac::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (x, values, sigmas, label=None))]
    fn new(x: Vec<f64>, values: Vec<f64>, sigmas: Vec<f64>, label: Option<ClassId>) -> PyResult<Self> {
        let inner = badac::Instance::from_parts(x, values, sigmas, label).map_err(err)?;
        Ok(PyInstance { inner })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid().points().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn sigmas(&self) -> Vec<f64> {
        self.inner.sigmas().to_vec()
    }

    #[getter]
    fn label(&self) -> Option<ClassId> {
        self.inner.label()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance(points={}, label={:?})", self.inner.len(), self.inner.label())
    }
}

/// Training instances of one class with its prior probability.
#[pyclass(name = "ClassModel", module = "pybadac", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyClassModel {
    pub inner: badac::ClassModel,
}

#[pymethods]
impl PyClassModel {
    /// Instances are placed on the grid of the first one, so they must all
    /// share its x positions.
    #[new]
    fn new(class_id: ClassId, instances: Vec<PyRef<'_, PyInstance>>, prior: f64) -> PyResult<Self> {
        let shared = instances.first().map(|i| i.inner.grid().clone());
        let members = instances
            .iter()
            .map(|i| {
                let grid = shared.as_ref().expect("non-empty when iterating");
                onto(&i.inner, grid).map(|inst| inst.with_label(Some(class_id)))
            })
            .collect::<badac::Result<Vec<_>>>()
            .map_err(err)?;
        let inner = badac::ClassModel::new(class_id, members, prior).map_err(err)?;
        Ok(PyClassModel { inner })
    }

    #[getter]
    fn class_id(&self) -> ClassId {
        self.inner.class_id()
    }

    #[getter]
    fn prior(&self) -> f64 {
        self.inner.prior()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ClassModel(class_id={}, members={}, prior={})",
            self.inner.class_id(),
            self.inner.len(),
            self.inner.prior()
        )
    }
}

/// Rebuilds `inst` on `grid` so grid identity checks pass; the x positions
/// must match exactly.
fn onto(inst: &badac::Instance, grid: &badac::Grid) -> badac::Result<badac::Instance> {
    if inst.grid().same_as(grid) {
        return Ok(inst.clone());
    }
    if inst.grid().points() != grid.points() {
        return Err(badac::BadacError::GridMismatch);
    }
    badac::Instance::new(grid.clone(), inst.values().to_vec(), inst.sigmas().to_vec(), inst.label())
}

fn on_model_grid(test: &badac::Instance, models: &[badac::ClassModel]) -> badac::Result<badac::Instance> {
    let grid = models.first().ok_or(badac::BadacError::NoModels)?.grid();
    onto(test, grid)
}

fn unwrap_models(models: &[PyRef<'_, PyClassModel>]) -> Vec<badac::ClassModel> {
    models.iter().map(|m| m.inner.clone()).collect()
}

#[pyfunction]
pub fn pairwise_log_likelihood(test: &PyInstance, train: &PyInstance) -> PyResult<f64> {
    let test = onto(&test.inner, train.inner.grid()).map_err(err)?;
    engine::pairwise_log_likelihood(&test, &train.inner).map_err(err)
}

/// Log of the mean pair likelihood over the class members, without the prior.
#[pyfunction]
pub fn class_log_evidence(test: &PyInstance, model: &PyClassModel) -> PyResult<f64> {
    let models = [model.inner.clone()];
    let test = on_model_grid(&test.inner, &models).map_err(err)?;
    engine::class_log_evidence(&test, &model.inner).map_err(err)
}

/// Posterior over the classes and, optionally, an anomaly hypothesis given
/// either as a top-hat range or as a fixed log-likelihood.
#[pyfunction]
#[pyo3(signature = (test, models, anomaly_prior=0.0, tophat=None, anomaly_log_likelihood=None))]
pub fn posterior<'py>(
    py: Python<'py>,
    test: &PyInstance,
    models: Vec<PyRef<'py, PyClassModel>>,
    anomaly_prior: f64,
    tophat: Option<(f64, f64)>,
    anomaly_log_likelihood: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let models = unwrap_models(&models);
    let test = on_model_grid(&test.inner, &models).map_err(err)?;
    let likelihood = match (tophat, anomaly_log_likelihood) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give tophat or anomaly_log_likelihood, not both")),
        (Some((a, b)), None) => Some(AnomalyLikelihood::TopHat(TopHatPrior::new(a, b).map_err(err)?)),
        (None, Some(v)) => Some(AnomalyLikelihood::Calibrated(v)),
        (None, None) => None,
    };
    let hyp = likelihood.map(|likelihood| AnomalyHypothesis {
        likelihood,
        prior: anomaly_prior,
    });
    let r = engine::posterior(&test, &models, hyp.as_ref()).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("class_ids", r.class_ids.clone())?;
    out.set_item("class_log_evidence", r.class_log_evidence.clone())?;
    out.set_item("class_probs", r.class_probs.clone())?;
    out.set_item("anomaly_prob", r.anomaly_prob)?;
    out.set_item("anomaly_log_likelihood", r.anomaly_log_likelihood)?;
    out.set_item("anomaly_score", r.anomaly_score)?;
    out.set_item("predicted_class", r.predicted_class())?;
    out.set_item("flagged", r.is_flagged())?;
    Ok(out)
}

/// `(index, anomaly_score)` pairs, most anomalous first.
#[pyfunction]
pub fn rank_anomalies(tests: Vec<PyRef<'_, PyInstance>>, models: Vec<PyRef<'_, PyClassModel>>) -> PyResult<Vec<(usize, f64)>> {
    let models = unwrap_models(&models);
    let tests = tests
        .iter()
        .map(|t| on_model_grid(&t.inner, &models))
        .collect::<badac::Result<Vec<_>>>()
        .map_err(err)?;
    engine::rank_anomalies(&tests, &models).map_err(err)
}

#[pyfunction]
pub fn rws(ranked_truth: Vec<bool>, n: usize) -> PyResult<f64> {
    metrics::rws(&ranked_truth, n).map_err(err)
}

#[pyfunction]
pub fn mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> f64 {
    metrics::mcc(tp, tn, fp, fn_)
}

#[pyfunction]
pub fn roc_auc(scores: Vec<f64>, truth: Vec<bool>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &truth).map_err(err)
}

/// `(mean_predicted, empirical_fraction, count, poisson_error)` per
/// non-empty bin.
#[pyfunction]
#[pyo3(signature = (probs, truth, bins=10))]
pub fn calibration_curve(probs: Vec<f64>, truth: Vec<bool>, bins: usize) -> PyResult<Vec<(f64, f64, usize, f64)>> {
    let curve = metrics::calibration_curve(&probs, &truth, bins).map_err(err)?;
    Ok(curve
        .bins
        .iter()
        .map(|b| (b.mean_predicted, b.empirical_fraction, b.count, b.poisson_error))
        .collect())
}

fn parse_kind(kind: &str) -> PyResult<ExperimentKind> {
    serde_json::from_value(serde_json::Value::String(kind.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown experiment kind `{kind}`")))
}

fn build_config(kind: &str, n_train: usize, n_test: usize, seed: u64) -> PyResult<ExperimentConfig> {
    let cfg = ExperimentConfig::new(parse_kind(kind)?).with_counts(n_train, n_test).with_seed(seed);
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn wrap(ds: badac::Dataset) -> Vec<PyInstance> {
    ds.into_instances().into_iter().map(|inner| PyInstance { inner }).collect()
}

/// Simulated `(train, test)` instance lists for one experiment kind.
#[pyfunction]
#[pyo3(signature = (kind="gaussian", n_train=2000, n_test=2000, seed=0))]
pub fn simulate(kind: &str, n_train: usize, n_test: usize, seed: u64) -> PyResult<(Vec<PyInstance>, Vec<PyInstance>)> {
    let data = simulators::generate_dataset(&build_config(kind, n_train, n_test, seed)?).map_err(err)?;
    Ok((wrap(data.train), wrap(data.test)))
}

/// Class models with flat priors that leave room for an anomaly hypothesis.
#[pyfunction]
pub fn class_models(train: Vec<PyRef<'_, PyInstance>>) -> PyResult<Vec<PyClassModel>> {
    let grid = train.first().map(|t| t.inner.grid().clone());
    let members = train
        .iter()
        .map(|t| onto(&t.inner, grid.as_ref().expect("non-empty when iterating")))
        .collect::<badac::Result<Vec<_>>>()
        .map_err(err)?;
    let ds = badac::Dataset::new(members).map_err(err)?;
    Ok(harness::class_models(&ds)
        .map_err(err)?
        .into_iter()
        .map(|inner| PyClassModel { inner })
        .collect())
}

/// Runs an experiment and returns the report as a dict. `config` is a JSON
/// object with the same fields as the TOML config file; `kind`, `n_train`,
/// `n_test` and `seed` are used when it is absent.
#[pyfunction]
#[pyo3(signature = (kind="gaussian", n_train=2000, n_test=2000, seed=0, config=None, threads=0))]
pub fn run_experiment<'py>(
    py: Python<'py>,
    kind: &str,
    n_train: usize,
    n_test: usize,
    seed: u64,
    config: Option<&str>,
    threads: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match config {
        Some(text) => {
            let cfg: ExperimentConfig =
                serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("bad config: {e}")))?;
            cfg.validate().map_err(err)?;
            cfg
        }
        None => build_config(kind, n_train, n_test, seed)?,
    };
    let run = py
        .detach(|| harness::run_experiment(&cfg, RunOptions { threads }))
        .map_err(err)?;
    let json = serde_json::to_string(&run.report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (json,))
}

#[pymodule]
pub fn pybadac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BadacError", m.py().get_type::<BadacError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyClassModel>()?;
    m.add_function(wrap_pyfunction!(pairwise_log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(class_log_evidence, m)?)?;
    m.add_function(wrap_pyfunction!(posterior, m)?)?;
    m.add_function(wrap_pyfunction!(rank_anomalies, m)?)?;
    m.add_function(wrap_pyfunction!(rws, m)?)?;
    m.add_function(wrap_pyfunction!(mcc, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(calibration_curve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(class_models, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
