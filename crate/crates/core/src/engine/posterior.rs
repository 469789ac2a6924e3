use std::cmp::Ordering;

use super::anomaly::AnomalyHypothesis;
use super::likelihood::class_log_evidence;
use super::log_sum_exp;
use crate::error::{BadacError, Result};
use crate::model::{merge_into_class, ClassId, ClassModel, Instance};

const PRIOR_SUM_TOL: f64 = 1e-9;

/// Default normalized probability needed to absorb an instance into an
/// existing class during online updates.
pub const DEFAULT_ADMISSION_THRESHOLD: f64 = 0.99;

/// A hypothesis an instance can be assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Class(ClassId),
    Anomaly,
}

/// Scores of one test instance against every class and the anomaly model.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorReport {
    /// Class ids in model order.
    pub class_ids: Vec<ClassId>,
    /// `log P(data | τ_k)`.
    pub class_log_likelihood: Vec<f64>,
    /// `log P(data | τ_k) + log P(τ_k)`, unnormalized.
    pub class_log_evidence: Vec<f64>,
    pub anomaly_log_likelihood: Option<f64>,
    /// Anomaly log-likelihood plus the log anomaly prior.
    pub anomaly_log_term: Option<f64>,
    /// `log Σ_k P(data | τ_k) P(τ_k)` over known classes.
    pub known_log_evidence: f64,
    /// Posterior probabilities aligned with `class_ids`.
    pub class_probs: Vec<f64>,
    pub anomaly_prob: Option<f64>,
    /// `-known_log_evidence`; larger means more anomalous.
    pub anomaly_score: f64,
}

impl PosteriorReport {
    /// Builds a report from per-class log-likelihoods and priors.
    ///
    /// `anomaly` is `(log_likelihood, prior)` for the anomaly hypothesis.
    pub fn from_log_likelihoods(
        class_ids: Vec<ClassId>,
        priors: &[f64],
        class_log_likelihood: Vec<f64>,
        anomaly: Option<(f64, f64)>,
    ) -> Result<Self> {
        if class_ids.is_empty() {
            return Err(BadacError::NoModels);
        }
        if priors.len() != class_ids.len() || class_log_likelihood.len() != class_ids.len() {
            return Err(BadacError::LengthMismatch {
                what: "priors",
                expected: class_ids.len(),
                actual: priors.len().min(class_log_likelihood.len()),
            });
        }
        let total: f64 = priors.iter().sum::<f64>() + anomaly.map_or(0.0, |a| a.1);
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(BadacError::PriorSumViolation(total));
        }
        let class_log_evidence: Vec<f64> = class_log_likelihood
            .iter()
            .zip(priors)
            .map(|(l, p)| l + p.ln())
            .collect();
        let known_log_evidence = log_sum_exp(&class_log_evidence);
        let anomaly_log_term = anomaly.map(|(l, p)| l + p.ln());

        let mut all = class_log_evidence.clone();
        all.extend(anomaly_log_term);
        let log_z = log_sum_exp(&all);
        if !log_z.is_finite() {
            return Err(BadacError::Numerical(format!(
                "posterior normalization is {log_z}; every hypothesis has zero or infinite evidence"
            )));
        }
        let class_probs = class_log_evidence.iter().map(|e| (e - log_z).exp()).collect();
        let anomaly_prob = anomaly_log_term.map(|t| (t - log_z).exp());
        Ok(PosteriorReport {
            class_ids,
            class_log_likelihood,
            class_log_evidence,
            anomaly_log_likelihood: anomaly.map(|a| a.0),
            anomaly_log_term,
            known_log_evidence,
            class_probs,
            anomaly_prob,
            anomaly_score: -known_log_evidence,
        })
    }

    pub fn prob_of(&self, class_id: ClassId) -> Option<f64> {
        self.class_ids
            .iter()
            .position(|&c| c == class_id)
            .map(|i| self.class_probs[i])
    }

    /// Most probable hypothesis; ties go to the lowest class index, and the
    /// anomaly wins only when strictly ahead of every class.
    pub fn argmax(&self) -> Hypothesis {
        let (best, best_p) = self.argmax_class();
        match self.anomaly_prob {
            Some(a) if a > best_p => Hypothesis::Anomaly,
            _ => Hypothesis::Class(best),
        }
    }

    fn argmax_class(&self) -> (ClassId, f64) {
        let mut best = 0;
        for i in 1..self.class_probs.len() {
            if self.class_probs[i] > self.class_probs[best] {
                best = i;
            }
        }
        (self.class_ids[best], self.class_probs[best])
    }

    /// Class probabilities normalized over the known classes only.
    pub fn classification_probs(&self) -> Vec<f64> {
        self.class_log_evidence
            .iter()
            .map(|e| (e - self.known_log_evidence).exp())
            .collect()
    }

    /// Most probable known class, ignoring the anomaly hypothesis.
    pub fn predicted_class(&self) -> ClassId {
        let mut best = 0;
        for i in 1..self.class_log_evidence.len() {
            if self.class_log_evidence[i] > self.class_log_evidence[best] {
                best = i;
            }
        }
        self.class_ids[best]
    }

    /// Whether the anomaly term is at least as large as the combined
    /// known-class evidence (anomaly probability ≥ 1/2).
    pub fn is_flagged(&self) -> bool {
        self.anomaly_log_term.is_some_and(|t| t >= self.known_log_evidence)
    }
}

/// Normalized posterior over every class plus the optional anomaly
/// hypothesis. Priors must sum to one.
pub fn posterior(
    test: &Instance,
    models: &[ClassModel],
    anomaly: Option<&AnomalyHypothesis>,
) -> Result<PosteriorReport> {
    let lls = models
        .iter()
        .map(|m| class_log_evidence(test, m))
        .collect::<Result<Vec<_>>>()?;
    let priors: Vec<f64> = models.iter().map(ClassModel::prior).collect();
    PosteriorReport::from_log_likelihoods(
        models.iter().map(ClassModel::class_id).collect(),
        &priors,
        lls,
        anomaly.map(|a| (a.log_likelihood(test), a.prior)),
    )
}

/// Rescales class priors (and the anomaly prior, if any) to sum to one.
pub fn normalize_priors(models: Vec<ClassModel>, anomaly_prior: Option<f64>) -> Result<(Vec<ClassModel>, Option<f64>)> {
    let total: f64 = models.iter().map(ClassModel::prior).sum::<f64>() + anomaly_prior.unwrap_or(0.0);
    if !(total > 0.0 && total.is_finite()) {
        return Err(BadacError::PriorSumViolation(total));
    }
    let models = models
        .into_iter()
        .map(|m| {
            let p = m.prior() / total;
            m.with_prior(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((models, anomaly_prior.map(|p| p / total)))
}

/// Instances ordered from most to least anomalous by
/// `-log Σ_k P(data | τ_k) P(τ_k)`; ties keep ascending index.
pub fn rank_anomalies(tests: &[Instance], models: &[ClassModel]) -> Result<Vec<(usize, f64)>> {
    if tests.is_empty() {
        return Err(BadacError::EmptyInput);
    }
    if models.is_empty() {
        return Err(BadacError::NoModels);
    }
    let mut ranked = tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let terms = models
                .iter()
                .map(|m| class_log_evidence(t, m).map(|l| l + m.prior().ln()))
                .collect::<Result<Vec<_>>>()?;
            Ok((i, -log_sum_exp(&terms)))
        })
        .collect::<Result<Vec<_>>>()?;
    sort_ranking(&mut ranked);
    Ok(ranked)
}

/// Descending score, then ascending index.
pub(crate) fn sort_ranking(ranked: &mut [(usize, f64)]) {
    ranked.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineConfig {
    pub admission_threshold: f64,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            admission_threshold: DEFAULT_ADMISSION_THRESHOLD,
        }
    }
}

/// Grows the model set from one scored instance.
///
/// An instance whose anomaly probability beats every class starts a new
/// class (id one above the current maximum) and the class priors are spread
/// uniformly over the enlarged set, keeping their total. Otherwise the
/// instance joins its most probable class if that probability exceeds the
/// admission threshold.
pub fn online_update(
    models: &[ClassModel],
    test: &Instance,
    report: &PosteriorReport,
    config: &OnlineConfig,
) -> Result<Vec<ClassModel>> {
    let mut models = models.to_vec();
    if models.is_empty() {
        return Ok(models);
    }
    match report.argmax() {
        Hypothesis::Anomaly => {
            let class_mass: f64 = models.iter().map(ClassModel::prior).sum();
            let new_id = models.iter().map(ClassModel::class_id).max().unwrap_or(0) + 1;
            let share = class_mass / (models.len() + 1) as f64;
            let mut grown = models
                .into_iter()
                .map(|m| m.with_prior(share))
                .collect::<Result<Vec<_>>>()?;
            grown.push(ClassModel::new(new_id, vec![test.clone().with_label(Some(new_id))], share)?);
            Ok(grown)
        }
        Hypothesis::Class(id) => {
            let p = report.prob_of(id).unwrap_or(0.0);
            if p > config.admission_threshold {
                if let Some(pos) = models.iter().position(|m| m.class_id() == id) {
                    let m = models.remove(pos);
                    models.insert(pos, merge_into_class(m, test.clone().with_label(Some(id)))?);
                }
            }
            Ok(models)
        }
    }
}
