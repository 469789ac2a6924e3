//! Per-instance score table, one per algorithm.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::error::{BadacError, Result};
use crate::model::ClassId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance_id: usize,
    pub true_class: ClassId,
    pub is_outlier: bool,
    pub predicted_class: ClassId,
    pub flagged: bool,
    /// Larger means more anomalous.
    pub anomaly_score: f64,
    /// Per-class log score aligned with the table's class ids. For BADAC
    /// this is the log class evidence including the prior.
    pub log_p: Vec<f64>,
    /// Class probabilities normalized over the known classes only.
    pub class_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTable {
    pub algorithm: Algorithm,
    pub class_ids: Vec<ClassId>,
    pub rows: Vec<InstanceRow>,
}

impl InstanceTable {
    pub fn file_name(algorithm: Algorithm) -> String {
        format!("instances_{}.csv", algorithm.as_str())
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "instance_id",
            "true_class",
            "is_outlier",
            "predicted_class",
            "flagged",
            "anomaly_score",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.class_ids.iter().map(|c| format!("log_p{c}")));
        h.extend(self.class_ids.iter().map(|c| format!("prob{c}")));
        h
    }

    /// Floats are written in shortest round-trip form, so reading the file
    /// back reproduces every value bit for bit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.instance_id.to_string(),
                r.true_class.to_string(),
                u8::from(r.is_outlier).to_string(),
                r.predicted_class.to_string(),
                u8::from(r.flagged).to_string(),
                r.anomaly_score.to_string(),
            ];
            rec.extend(r.log_p.iter().map(f64::to_string));
            rec.extend(r.class_probs.iter().map(f64::to_string));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(algorithm: Algorithm, input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(input);
        let header = rdr.headers()?.clone();
        let fixed = 6;
        let class_ids = header
            .iter()
            .skip(fixed)
            .filter_map(|h| h.strip_prefix("log_p"))
            .map(|c| c.parse::<ClassId>().map_err(|_| BadacError::Data(format!("bad column log_p{c}"))))
            .collect::<Result<Vec<_>>>()?;
        let k = class_ids.len();
        if header.len() != fixed + 2 * k {
            return Err(BadacError::MissingColumns(format!("expected {} columns, found {}", fixed + 2 * k, header.len())));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let int = |i: usize| field(i).parse::<u64>().map_err(|_| BadacError::Data(format!("bad integer `{}`", field(i))));
            let float = |i: usize| field(i).parse::<f64>().map_err(|_| BadacError::Data(format!("bad number `{}`", field(i))));
            rows.push(InstanceRow {
                instance_id: int(0)? as usize,
                true_class: int(1)? as ClassId,
                is_outlier: int(2)? != 0,
                predicted_class: int(3)? as ClassId,
                flagged: int(4)? != 0,
                anomaly_score: float(5)?,
                log_p: (fixed..fixed + k).map(float).collect::<Result<_>>()?,
                class_probs: (fixed + k..fixed + 2 * k).map(float).collect::<Result<_>>()?,
            });
        }
        Ok(InstanceTable {
            algorithm,
            class_ids,
            rows,
        })
    }
}
