//! Plot-ready CSV files derived from a report.

use std::io::Write;

use super::MetricsReport;
use crate::config::Algorithm;
use crate::error::{BadacError, Result};

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// `instance_id,logP0,logP1,true_class` from the BADAC table, where `logP`
/// is the unnormalized log class evidence. Outliers keep their own label.
pub fn emit_scatter_data<W: Write>(report: &MetricsReport, out: W) -> Result<()> {
    let table = report
        .table(Algorithm::Badac)
        .ok_or_else(|| BadacError::MissingColumns("no BADAC instance table".into()))?;
    if table.class_ids.len() < 2 {
        return Err(BadacError::MissingColumns("scatter data needs two class columns".into()));
    }
    let (c0, c1) = (table.class_ids[0], table.class_ids[1]);
    let mut w = writer(out);
    w.write_record(["instance_id".to_string(), format!("logP{c0}"), format!("logP{c1}"), "true_class".into()])?;
    for r in &table.rows {
        w.write_record([
            r.instance_id.to_string(),
            r.log_p[0].to_string(),
            r.log_p[1].to_string(),
            r.true_class.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `mean_predicted,empirical_fraction,count,poisson_error`, one row per
/// non-empty bin.
pub fn emit_calibration_data<W: Write>(report: &MetricsReport, algorithm: Algorithm, out: W) -> Result<()> {
    let result = report
        .result(algorithm)
        .ok_or_else(|| BadacError::MissingMetric(format!("no calibration for {}", algorithm.as_str())))?;
    let mut w = writer(out);
    w.write_record(["mean_predicted", "empirical_fraction", "count", "poisson_error"])?;
    for b in &result.metrics.calibration.bins {
        w.write_record([
            b.mean_predicted.to_string(),
            b.empirical_fraction.to_string(),
            b.count.to_string(),
            b.poisson_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `fpr,tpr` points of the ROC curve in threshold order.
pub fn emit_roc_data<W: Write>(report: &MetricsReport, algorithm: Algorithm, out: W) -> Result<()> {
    let roc = report
        .result(algorithm)
        .and_then(|r| r.metrics.roc.as_ref())
        .ok_or_else(|| BadacError::MissingMetric(format!("no ROC curve for {}", algorithm.as_str())))?;
    let mut w = writer(out);
    w.write_record(["fpr", "tpr"])?;
    for p in roc {
        w.write_record([p.fpr.to_string(), p.tpr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
