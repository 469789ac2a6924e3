//! k-nearest-neighbour baseline: Euclidean distance in value space,
//! ignoring the reported uncertainties.

use std::cmp::Ordering;

use crate::error::{BadacError, Result};
use crate::model::{ClassId, Dataset, Grid, Instance};

#[derive(Debug, Clone)]
pub struct NeighborModel {
    grid: Grid,
    m: usize,
    /// Row-major `n × m` training values.
    values: Vec<f64>,
    labels: Vec<ClassId>,
    classes: Vec<ClassId>,
    k: usize,
}

/// Class vote fractions and anomaly score of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    /// Aligned with [`NeighborModel::classes`].
    pub probs: Vec<f64>,
    /// Mean distance to the k nearest training instances.
    pub anomaly_score: f64,
}

impl NeighborModel {
    /// Every training instance must be labeled.
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        let grid = train.grid().ok_or(BadacError::EmptyDataset)?.clone();
        if k == 0 || k > train.len() {
            return Err(BadacError::InvalidK { k, n: train.len() });
        }
        let m = grid.len();
        let mut values = Vec::with_capacity(train.len() * m);
        let mut labels = Vec::with_capacity(train.len());
        for inst in train.instances() {
            values.extend_from_slice(inst.values());
            labels.push(inst.label().ok_or_else(|| BadacError::Data("unlabeled training instance".into()))?);
        }
        Ok(NeighborModel {
            grid,
            m,
            values,
            labels,
            classes: train.classes().to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distances to the k nearest training instances with their labels,
    /// nearest first. Equal distances prefer the lower class id, then the
    /// earlier instance.
    fn neighbors(&self, test: &Instance) -> Result<Vec<(f64, ClassId)>> {
        if !test.grid().same_as(&self.grid) {
            return Err(BadacError::GridMismatch);
        }
        let d = test.values();
        let mut all: Vec<(f64, ClassId, usize)> = self
            .values
            .chunks_exact(self.m)
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (row, &label))| {
                let sq: f64 = row.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum();
                (sq.sqrt(), label, i)
            })
            .collect();
        let cmp = |a: &(f64, ClassId, usize), b: &(f64, ClassId, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        if self.k < all.len() {
            all.select_nth_unstable_by(self.k - 1, cmp);
            all.truncate(self.k);
        }
        all.sort_by(cmp);
        Ok(all.into_iter().map(|(d, c, _)| (d, c)).collect())
    }

    pub fn query(&self, test: &Instance) -> Result<KnnResult> {
        let nn = self.neighbors(test)?;
        let mut probs = vec![0.0; self.classes.len()];
        for &(_, c) in &nn {
            let i = self.classes.binary_search(&c).expect("labels come from the class list");
            probs[i] += 1.0;
        }
        let k = nn.len() as f64;
        probs.iter_mut().for_each(|p| *p /= k);
        let anomaly_score = nn.iter().map(|n| n.0).sum::<f64>() / k;
        Ok(KnnResult { probs, anomaly_score })
    }
}

/// Vote fractions among the k nearest neighbours, aligned with
/// [`NeighborModel::classes`].
pub fn knn_classify(model: &NeighborModel, test: &Instance) -> Result<Vec<f64>> {
    model.query(test).map(|r| r.probs)
}

/// Mean Euclidean distance to the k nearest training instances.
pub fn knn_anomaly_score(model: &NeighborModel, test: &Instance) -> Result<f64> {
    model.query(test).map(|r| r.anomaly_score)
}

/// Most voted class; ties go to the lower class id.
pub fn knn_predict(model: &NeighborModel, probs: &[f64]) -> ClassId {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if p.partial_cmp(&probs[best]) == Some(Ordering::Greater) {
            best = i;
        }
    }
    model.classes[best]
}
