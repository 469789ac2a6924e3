//! Shared data model: instances on a common grid, labeled class models and
//! datasets.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared read-only across worker threads.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{BadacError, Result};

/// Class identifier.
pub type ClassId = u32;

/// Strictly increasing sample positions shared by every instance of an
/// experiment. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Grid(Arc<[f64]>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(BadacError::EmptyInstance);
        }
        for (i, x) in points.iter().enumerate() {
            if !x.is_finite() {
                return Err(BadacError::NonFiniteValue { index: i });
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(BadacError::NonMonotoneGrid { index: i + 1 });
        }
        Ok(Grid(points.into()))
    }

    /// `m` evenly spaced points on `[0, 1]` (a single point sits at 0).
    pub fn uniform(m: usize) -> Result<Self> {
        match m {
            0 => Err(BadacError::EmptyInstance),
            1 => Grid::new(vec![0.0]),
            _ => Grid::new((0..m).map(|j| j as f64 / (m - 1) as f64).collect()),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bit-identical comparison of positions.
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.len() == other.0.len()
                && self.0.iter().zip(other.0.iter()).all(|(a, b)| a.to_bits() == b.to_bits()))
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// One object's measurements: values with 1σ uncertainties on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    grid: Grid,
    values: Vec<f64>,
    sigmas: Vec<f64>,
    label: Option<ClassId>,
}

impl Instance {
    pub fn new(grid: Grid, values: Vec<f64>, sigmas: Vec<f64>, label: Option<ClassId>) -> Result<Self> {
        validate_instance(Instance {
            grid,
            values,
            sigmas,
            label,
        })
    }

    /// Builds an instance from a raw grid vector, validating the grid too.
    pub fn from_parts(grid: Vec<f64>, values: Vec<f64>, sigmas: Vec<f64>, label: Option<ClassId>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(BadacError::LengthMismatch {
                what: "values",
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Instance::new(Grid::new(grid)?, values, sigmas, label)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn label(&self) -> Option<ClassId> {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: Option<ClassId>) -> Self {
        self.label = label;
        self
    }

    pub fn shares_grid(&self, other: &Instance) -> bool {
        self.grid.same_as(&other.grid)
    }

    pub fn into_parts(self) -> (Grid, Vec<f64>, Vec<f64>, Option<ClassId>) {
        (self.grid, self.values, self.sigmas, self.label)
    }
}

/// Checks every instance invariant and hands the instance back unchanged.
pub fn validate_instance(inst: Instance) -> Result<Instance> {
    let m = inst.grid.len();
    if m == 0 {
        return Err(BadacError::EmptyInstance);
    }
    if inst.values.len() != m {
        return Err(BadacError::LengthMismatch {
            what: "values",
            expected: m,
            actual: inst.values.len(),
        });
    }
    if inst.sigmas.len() != m {
        return Err(BadacError::LengthMismatch {
            what: "sigmas",
            expected: m,
            actual: inst.sigmas.len(),
        });
    }
    if let Some(i) = inst.grid.points().windows(2).position(|w| w[1] <= w[0]) {
        return Err(BadacError::NonMonotoneGrid { index: i + 1 });
    }
    for (i, &s) in inst.sigmas.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(BadacError::NonPositiveSigma { index: i, value: s });
        }
    }
    if let Some(i) = inst.values.iter().position(|v| !v.is_finite()) {
        return Err(BadacError::NonFiniteValue { index: i });
    }
    Ok(inst)
}

/// A labeled set of training instances for one class and its prior.
#[derive(Debug, Clone)]
pub struct ClassModel {
    class_id: ClassId,
    instances: Vec<Instance>,
    prior: f64,
}

impl ClassModel {
    pub fn new(class_id: ClassId, instances: Vec<Instance>, prior: f64) -> Result<Self> {
        let first = instances.first().ok_or(BadacError::EmptyClass(class_id))?;
        if instances.iter().any(|inst| !inst.shares_grid(first)) {
            return Err(BadacError::GridMismatch);
        }
        check_prior(prior)?;
        Ok(ClassModel {
            class_id,
            instances,
            prior,
        })
    }

    pub fn class_id(&self) -> ClassId {
        self.class_id
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn grid(&self) -> &Grid {
        self.instances[0].grid()
    }

    pub fn with_prior(mut self, prior: f64) -> Result<Self> {
        check_prior(prior)?;
        self.prior = prior;
        Ok(self)
    }
}

/// Appends `inst` to the class. Duplicates are kept.
pub fn merge_into_class(mut model: ClassModel, inst: Instance) -> Result<ClassModel> {
    if !inst.grid().same_as(model.grid()) {
        return Err(BadacError::GridMismatch);
    }
    model.instances.push(inst);
    Ok(model)
}

fn check_prior(prior: f64) -> Result<()> {
    if prior > 0.0 && prior <= 1.0 {
        Ok(())
    } else {
        Err(BadacError::InvalidPrior(prior))
    }
}

/// Per-point inverse-variance summary of a class.
#[derive(Debug, Clone)]
pub struct TemplateModel {
    pub(crate) class_id: ClassId,
    pub(crate) grid: Grid,
    pub(crate) mean: Vec<f64>,
    pub(crate) sigma: Vec<f64>,
    pub(crate) prior: f64,
}

impl TemplateModel {
    pub fn new(class_id: ClassId, grid: Grid, mean: Vec<f64>, sigma: Vec<f64>, prior: f64) -> Result<Self> {
        for (what, v) in [("mean", &mean), ("sigma", &sigma)] {
            if v.len() != grid.len() {
                return Err(BadacError::LengthMismatch {
                    what,
                    expected: grid.len(),
                    actual: v.len(),
                });
            }
        }
        if let Some(i) = sigma.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(BadacError::NonPositiveSigma {
                index: i,
                value: sigma[i],
            });
        }
        check_prior(prior)?;
        Ok(TemplateModel {
            class_id,
            grid,
            mean,
            sigma,
            prior,
        })
    }

    pub fn class_id(&self) -> ClassId {
        self.class_id
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }
}

/// A list of instances together with the distinct labels they carry.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    instances: Vec<Instance>,
    classes: Vec<ClassId>,
}

impl Dataset {
    /// Collects the labels present; all instances must share one grid.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let classes: BTreeSet<ClassId> = instances.iter().filter_map(Instance::label).collect();
        Dataset::with_classes(instances, classes.into_iter().collect())
    }

    pub fn with_classes(instances: Vec<Instance>, mut classes: Vec<ClassId>) -> Result<Self> {
        classes.sort_unstable();
        classes.dedup();
        if let Some(first) = instances.first() {
            if instances.iter().any(|inst| !inst.shares_grid(first)) {
                return Err(BadacError::GridMismatch);
            }
        }
        for inst in &instances {
            if let Some(label) = inst.label() {
                if classes.binary_search(&label).is_err() {
                    return Err(BadacError::UnknownLabel(label));
                }
            }
        }
        Ok(Dataset { instances, classes })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.instances.first().map(Instance::grid)
    }

    /// Instances carrying `label`, in dataset order.
    pub fn of_class(&self, label: ClassId) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(move |i| i.label() == Some(label))
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> Grid {
        Grid::new(vec![0.0, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn accepts_well_formed_instance() {
        let inst = Instance::new(grid3(), vec![0.0; 3], vec![0.3; 3], None).unwrap();
        assert_eq!(inst.len(), 3);
        assert_eq!(inst.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_zero_sigma() {
        let err = Instance::new(grid3(), vec![0.0; 3], vec![0.3, 0.0, 0.3], None).unwrap_err();
        assert_eq!(err, BadacError::NonPositiveSigma { index: 1, value: 0.0 });
        let err = Instance::new(grid3(), vec![0.0; 3], vec![0.3, f64::INFINITY, 0.3], None).unwrap_err();
        assert!(matches!(err, BadacError::NonPositiveSigma { index: 1, .. }));
    }

    #[test]
    fn rejects_length_mismatch() {
        let err = Instance::from_parts(vec![0.0, 1.0], vec![0.0; 3], vec![1.0; 3], None).unwrap_err();
        assert!(matches!(err, BadacError::LengthMismatch { what: "values", .. }));
        let err = Instance::new(grid3(), vec![0.0; 3], vec![1.0; 2], None).unwrap_err();
        assert!(matches!(err, BadacError::LengthMismatch { what: "sigmas", .. }));
    }

    #[test]
    fn rejects_non_monotone_grid() {
        assert_eq!(Grid::new(vec![0.0, 1.0, 1.0]).unwrap_err(), BadacError::NonMonotoneGrid { index: 2 });
        assert_eq!(Grid::new(vec![0.5, 0.1]).unwrap_err(), BadacError::NonMonotoneGrid { index: 1 });
    }

    #[test]
    fn uniform_grid() {
        let g = Grid::uniform(5).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Grid::uniform(1).unwrap().points(), &[0.0]);
        assert!(Grid::uniform(0).is_err());
    }

    #[test]
    fn grids_compare_by_value() {
        let a = Grid::new(vec![0.0, 0.5]).unwrap();
        let b = Grid::new(vec![0.0, 0.5]).unwrap();
        assert!(a.same_as(&b));
        let c = Grid::new(vec![0.0, 0.5000000001]).unwrap();
        assert!(!a.same_as(&c));
    }

    #[test]
    fn merge_grows_class() {
        let g = grid3();
        let a = Instance::new(g.clone(), vec![0.0; 3], vec![0.3; 3], Some(0)).unwrap();
        let model = ClassModel::new(0, vec![a.clone()], 0.5).unwrap();
        let model = merge_into_class(model, a.clone()).unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.prior(), 0.5);
        // duplicates are kept
        let model = merge_into_class(model, a).unwrap();
        assert_eq!(model.len(), 3);
    }

    #[test]
    fn merge_rejects_other_grid() {
        let a = Instance::new(grid3(), vec![0.0; 3], vec![0.3; 3], Some(0)).unwrap();
        let b = Instance::from_parts(vec![0.0, 0.4, 1.0], vec![0.0; 3], vec![0.3; 3], Some(0)).unwrap();
        let model = ClassModel::new(0, vec![a], 1.0).unwrap();
        assert_eq!(merge_into_class(model, b).unwrap_err(), BadacError::GridMismatch);
    }

    #[test]
    fn class_model_invariants() {
        assert_eq!(ClassModel::new(3, vec![], 0.5).unwrap_err(), BadacError::EmptyClass(3));
        let a = Instance::new(grid3(), vec![0.0; 3], vec![0.3; 3], Some(0)).unwrap();
        assert_eq!(ClassModel::new(0, vec![a.clone()], 0.0).unwrap_err(), BadacError::InvalidPrior(0.0));
        assert!(ClassModel::new(0, vec![a], 1.5).is_err());
    }

    #[test]
    fn dataset_collects_classes() {
        let g = grid3();
        let mk = |l| Instance::new(g.clone(), vec![0.0; 3], vec![0.3; 3], l).unwrap();
        let ds = Dataset::new(vec![mk(Some(1)), mk(None), mk(Some(0)), mk(Some(1))]).unwrap();
        assert_eq!(ds.classes(), &[0, 1]);
        assert_eq!(ds.of_class(1).count(), 2);
        let err = Dataset::with_classes(vec![mk(Some(4))], vec![0, 1]).unwrap_err();
        assert_eq!(err, BadacError::UnknownLabel(4));
    }
}
