//! Ranking, detection and calibration metrics.

use serde::{Deserialize, Serialize};

use crate::error::{BadacError, Result};

/// Rank-weighted score of the top `n` ranks: `Σ_{i≤n} (n+1-i)·I_i / S₀`
/// with `S₀ = n(n+1)/2`. `ranked_truth[0]` is the most anomalous instance.
pub fn rws(ranked_truth: &[bool], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(BadacError::ZeroN);
    }
    if n > ranked_truth.len() {
        return Err(BadacError::NExceedsList {
            n,
            len: ranked_truth.len(),
        });
    }
    let s0 = (n * (n + 1)) as f64 / 2.0;
    let hit: usize = ranked_truth[..n]
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| n - i)
        .sum();
    Ok(hit as f64 / s0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(BadacError::LengthMismatch {
                what: "predictions",
                expected: truth.len(),
                actual: predicted.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn mcc(&self) -> f64 {
        mcc(self.tp, self.tn, self.fp, self.fn_)
    }
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> f64 {
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    ((tp * tn - fp * fn_) / denom.sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve from a threshold sweep over descending unique scores, starting
/// at (0,0). Tied scores enter at a single threshold.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != truth.len() {
        return Err(BadacError::LengthMismatch {
            what: "scores",
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(BadacError::NonFiniteValue { index: i });
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(BadacError::SingleClassTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    roc_curve(scores, truth).map(|r| auc(&r))
}

/// Fraction of positions where prediction and truth agree.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(BadacError::LengthMismatch {
            what: "labels",
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(BadacError::EmptyInput);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub empirical_fraction: f64,
    pub count: usize,
    pub poisson_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bins: Vec<CalibrationBin>,
}

/// Equal-width bins on `[0, 1]`; a probability of exactly 1 falls in the
/// last bin. Empty bins are omitted.
///
/// The Poisson error is `√k / n` for `k` positives out of `n` members, with
/// `k` floored at 1 so a bin without positives still carries an error bar.
pub fn calibration_curve(probs: &[f64], truth: &[bool], bin_count: usize) -> Result<CalibrationCurve> {
    if probs.len() != truth.len() {
        return Err(BadacError::LengthMismatch {
            what: "probabilities",
            expected: truth.len(),
            actual: probs.len(),
        });
    }
    if bin_count == 0 {
        return Err(BadacError::Config("calibration needs at least one bin".into()));
    }
    let mut sum_p = vec![0.0; bin_count];
    let mut hits = vec![0usize; bin_count];
    let mut count = vec![0usize; bin_count];
    for (&p, &t) in probs.iter().zip(truth) {
        if !(0.0..=1.0).contains(&p) {
            return Err(BadacError::ProbabilityOutOfRange(p));
        }
        let b = ((p * bin_count as f64) as usize).min(bin_count - 1);
        sum_p[b] += p;
        count[b] += 1;
        hits[b] += usize::from(t);
    }
    let bins = (0..bin_count)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let n = count[b] as f64;
            CalibrationBin {
                mean_predicted: sum_p[b] / n,
                empirical_fraction: hits[b] as f64 / n,
                count: count[b],
                poisson_error: (hits[b].max(1) as f64).sqrt() / n,
            }
        })
        .collect();
    Ok(CalibrationCurve { bins })
}

/// Slope of the weighted least-squares line `y = a + b·x` through the bins,
/// with weights `1/error²`. `None` with fewer than two distinct x values.
pub fn calibration_slope(bins: &[CalibrationBin]) -> Option<f64> {
    let w: Vec<f64> = bins.iter().map(|b| b.poisson_error.powi(-2)).collect();
    let sw: f64 = w.iter().sum();
    let mx = bins.iter().zip(&w).map(|(b, w)| w * b.mean_predicted).sum::<f64>() / sw;
    let my = bins.iter().zip(&w).map(|(b, w)| w * b.empirical_fraction).sum::<f64>() / sw;
    let sxx: f64 = bins.iter().zip(&w).map(|(b, w)| w * (b.mean_predicted - mx).powi(2)).sum();
    let sxy: f64 = bins
        .iter()
        .zip(&w)
        .map(|(b, w)| w * (b.mean_predicted - mx) * (b.empirical_fraction - my))
        .sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
