//! Synthetic datasets: five curve families, compact anomalies and three
//! noise regimes.
//!
//! Every instance draws from its own generator substream, keyed by the run
//! seed, the split (train/test), the instance index and the purpose
//! (curve parameters or noise). Runs are therefore reproducible bit for bit,
//! and regenerating one instance does not depend on how many others were
//! drawn before it.
//!
//! Substreams are ChaCha20 (`rand_chacha`) stream ids on a generator seeded
//! with `seed_from_u64(seed)`; Gaussian variates come from
//! `rand_distr::Normal` and uniforms from `Rng::random::<f64>()`.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::covariance::CovarianceModel;
use crate::error::{BadacError, Result};
use crate::model::{ClassId, Dataset, Grid, Instance};

/// Identifies the generator algorithm; recorded in dataset metadata.
pub const GENERATOR_NAME: &str = "chacha20-substream/v1";

/// Reported sigma of a curve before any noise has been added.
pub const NOISELESS_SIGMA: f64 = 1e-12;

pub const INLIER_CLASSES: [ClassId; 2] = [0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train = 0,
    Test = 1,
    /// Instances generated outside the train/test split (e.g. follow-up draws).
    Extra = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Params = 0,
    Noise = 1,
    Layout = 2,
}

/// Independent generator for one (split, index, purpose) triple.
pub fn substream(seed: u64, split: Split, index: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((split as u64) << 60) | (index << 2) | purpose as u64);
    rng
}

/// A Gaussian hyperparameter `N(mean, sd)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal1 {
    pub mean: f64,
    pub sd: f64,
}

const fn n(mean: f64, sd: f64) -> Normal1 {
    Normal1 { mean, sd }
}

impl Normal1 {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        Normal::new(self.mean, self.sd).expect("valid hyperparameters").sample(rng)
    }
}

/// Parameter distributions of one curve family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveFamily {
    /// `sin(ωx)`
    Sine { omega: Normal1 },
    /// `αx² + βx + γ`
    Quadratic { alpha: Normal1, beta: Normal1, gamma: Normal1 },
    /// `h` for `x ≤ x₀`, else 0
    Step { h: Normal1, x0: Normal1 },
    /// `A exp(-((x-μ)/w)²)`
    Bump { amplitude: Normal1, mu: Normal1, width: Normal1 },
    /// `0.2 Σ_{i=1..5} sin(ω_i x)`
    SineSum { omega: Normal1 },
    /// `sin(ωx) + A exp(-((x-μ)/w)²)` with `μ ~ U(0,1)`; non-positive widths
    /// are redrawn.
    CompactBump { omega: Normal1, amplitude: Normal1, width: Normal1 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub class_id: ClassId,
    pub family: CurveFamily,
}

impl ClassSpec {
    /// Built-in classes 0–4 of the base simulation.
    pub fn table1(class_id: ClassId) -> Option<ClassSpec> {
        let family = match class_id {
            0 => CurveFamily::Sine { omega: n(5.0, 2.0) },
            1 => CurveFamily::Quadratic {
                alpha: n(0.5, 0.2),
                beta: n(0.5, 0.2),
                gamma: n(0.0, 0.2),
            },
            2 => CurveFamily::Step {
                h: n(1.0, 0.3),
                x0: n(0.5, 0.2),
            },
            3 => CurveFamily::Bump {
                amplitude: n(0.5, 0.2),
                mu: n(0.1, 0.05),
                width: n(1.0, 0.5),
            },
            4 => CurveFamily::SineSum { omega: n(30.0, 20.0) },
            _ => return None,
        };
        Some(ClassSpec { class_id, family })
    }

    /// Built-in classes of the compact-anomaly simulation: inliers 0–1 as in
    /// the base simulation, outliers 2 (positive bump) and 3 (negative bump).
    pub fn table2(class_id: ClassId) -> Option<ClassSpec> {
        let amplitude = match class_id {
            0 | 1 => return ClassSpec::table1(class_id),
            2 => n(1.5, 0.5),
            3 => n(-1.5, 0.5),
            _ => return None,
        };
        Some(ClassSpec {
            class_id,
            family: CurveFamily::CompactBump {
                omega: n(5.0, 2.0),
                amplitude,
                width: n(0.03, 0.01),
            },
        })
    }

    pub fn draw_params(&self, rng: &mut impl Rng) -> CurveParams {
        match self.family {
            CurveFamily::Sine { omega } => CurveParams::Sine { omega: omega.draw(rng) },
            CurveFamily::Quadratic { alpha, beta, gamma } => CurveParams::Quadratic {
                alpha: alpha.draw(rng),
                beta: beta.draw(rng),
                gamma: gamma.draw(rng),
            },
            CurveFamily::Step { h, x0 } => CurveParams::Step {
                h: h.draw(rng),
                x0: x0.draw(rng),
            },
            CurveFamily::Bump { amplitude, mu, width } => CurveParams::Bump {
                amplitude: amplitude.draw(rng),
                mu: mu.draw(rng),
                width: width.draw(rng),
            },
            CurveFamily::SineSum { omega } => CurveParams::SineSum {
                omegas: std::array::from_fn(|_| omega.draw(rng)),
            },
            CurveFamily::CompactBump { omega, amplitude, width } => {
                let omega = omega.draw(rng);
                let amplitude = amplitude.draw(rng);
                let mu = rng.random::<f64>();
                let width = loop {
                    let w = width.draw(rng);
                    if w > 0.0 {
                        break w;
                    }
                };
                CurveParams::CompactBump {
                    omega,
                    amplitude,
                    mu,
                    width,
                }
            }
        }
    }
}

/// Concrete parameters of one drawn curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveParams {
    Sine { omega: f64 },
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
    Step { h: f64, x0: f64 },
    Bump { amplitude: f64, mu: f64, width: f64 },
    SineSum { omegas: [f64; 5] },
    CompactBump { omega: f64, amplitude: f64, mu: f64, width: f64 },
}

fn bump(x: f64, amplitude: f64, mu: f64, width: f64) -> f64 {
    let z = (x - mu) / width;
    amplitude * (-z * z).exp()
}

impl CurveParams {
    pub fn evaluate(&self, x: f64) -> f64 {
        match *self {
            CurveParams::Sine { omega } => (omega * x).sin(),
            CurveParams::Quadratic { alpha, beta, gamma } => alpha * x * x + beta * x + gamma,
            CurveParams::Step { h, x0 } => {
                if x <= x0 {
                    h
                } else {
                    0.0
                }
            }
            CurveParams::Bump { amplitude, mu, width } => bump(x, amplitude, mu, width),
            CurveParams::SineSum { omegas } => 0.2 * omegas.iter().map(|w| (w * x).sin()).sum::<f64>(),
            CurveParams::CompactBump {
                omega,
                amplitude,
                mu,
                width,
            } => (omega * x).sin() + bump(x, amplitude, mu, width),
        }
    }

    /// The underlying sine of a compact anomaly, without the bump.
    pub fn base_curve(&self) -> CurveParams {
        match *self {
            CurveParams::CompactBump { omega, .. } => CurveParams::Sine { omega },
            other => other,
        }
    }

    pub fn curve(&self, grid: &Grid, label: Option<ClassId>) -> Instance {
        let values = grid.points().iter().map(|&x| self.evaluate(x)).collect();
        Instance::new(grid.clone(), values, vec![NOISELESS_SIGMA; grid.len()], label)
            .expect("curve values are finite on a valid grid")
    }
}

/// Draws parameters from `spec` and evaluates the noiseless curve on `grid`.
/// The reported sigmas are [`NOISELESS_SIGMA`].
pub fn generate_curve(spec: &ClassSpec, grid: &Grid, rng: &mut impl Rng) -> Instance {
    spec.draw_params(rng).curve(grid, Some(spec.class_id))
}

/// Two-component Gaussian scale mixture used for the non-Gaussian regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureNoise {
    /// Probability that a point uses the inflated component.
    pub fraction: f64,
    /// Width multiplier of the inflated component.
    pub inflation: f64,
}

impl Default for MixtureNoise {
    fn default() -> Self {
        MixtureNoise {
            fraction: 0.2,
            inflation: 5.0,
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(BadacError::NonPositiveSigma { index: 0, value: sigma })
    }
}

fn rebuild(inst: &Instance, values: Vec<f64>, sigmas: Vec<f64>) -> Result<Instance> {
    Instance::new(inst.grid().clone(), values, sigmas, inst.label())
}

/// Adds i.i.d. `N(0, σ²)` noise and reports σ at every point.
pub fn add_gaussian_noise(inst: &Instance, sigma: f64, rng: &mut impl Rng) -> Result<Instance> {
    check_sigma(sigma)?;
    let values = inst
        .values()
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    rebuild(inst, values, vec![sigma; inst.len()])
}

/// Per point: `N(0, σ²)` noise, or with probability `mix.fraction`
/// `N(0, (mix.inflation·σ)²)`. The reported sigma stays σ either way.
pub fn add_mixture_noise(inst: &Instance, sigma: f64, mix: MixtureNoise, rng: &mut impl Rng) -> Result<Instance> {
    check_sigma(sigma)?;
    if !(0.0..1.0).contains(&mix.fraction) {
        return Err(BadacError::InvalidFraction(mix.fraction));
    }
    let values = inst
        .values()
        .iter()
        .map(|v| {
            let wide = rng.random::<f64>() < mix.fraction;
            let z: f64 = rng.sample(StandardNormal);
            v + if wide { mix.inflation * sigma } else { sigma } * z
        })
        .collect();
    rebuild(inst, values, vec![sigma; inst.len()])
}

/// `C_ij = σ² δ_ij + V_ij` with `V_ij = s · (⌊min(i,j) / (m/levels)⌋ + 1)`
/// for 0-based indices: nested blocks, more correlated towards the end.
pub fn wedding_cake_covariance(m: usize, sigma: f64, step: f64, levels: usize) -> Result<CovarianceModel> {
    if levels == 0 || m < levels {
        return Err(BadacError::MTooSmall { m, levels });
    }
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            // ⌊min(i,j) / (m/levels)⌋ computed exactly in integers
            let level = (i.min(j) * levels) / m + 1;
            let mut c = step * level as f64;
            if i == j {
                c += sigma * sigma;
            }
            data[i * m + j] = c;
        }
    }
    CovarianceModel::from_row_major(m, &data)
}

/// Adds `L z` noise (`L Lᵀ = cov`, `z ~ N(0, I)`) and reports the marginal
/// standard deviations, hiding the correlation from downstream models.
pub fn add_correlated_noise(inst: &Instance, cov: &CovarianceModel, rng: &mut impl Rng) -> Result<Instance> {
    let m = inst.len();
    if cov.dim() != m {
        return Err(BadacError::DimensionMismatch {
            expected: m,
            actual: cov.dim(),
        });
    }
    let l = cov.cholesky_factor()?;
    let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let noise = l * z;
    let values = inst.values().iter().zip(noise.iter()).map(|(v, e)| v + e).collect();
    let sigmas = cov.diagonal().into_iter().map(f64::sqrt).collect();
    rebuild(inst, values, sigmas)
}

/// Noise applied to every simulated instance of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseRegime {
    Gaussian,
    Mixture(MixtureNoise),
    /// Class 0 gets correlated noise; other classes stay Gaussian.
    Correlated(CovarianceModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub regime: NoiseRegime,
    /// σ per class id; classes beyond the list use the last entry.
    pub class_sigmas: Vec<f64>,
}

impl NoiseSpec {
    /// σ₀ = σ₂ = σ₃ = σ₄ = 0.3, σ₁ = 0.5.
    pub const CLASS_SIGMAS: [f64; 5] = [0.3, 0.5, 0.3, 0.3, 0.3];

    pub fn for_experiment(kind: ExperimentKind, m: usize) -> Result<NoiseSpec> {
        let regime = match kind {
            ExperimentKind::Gaussian | ExperimentKind::Compact => NoiseRegime::Gaussian,
            ExperimentKind::NonGaussian => NoiseRegime::Mixture(MixtureNoise::default()),
            ExperimentKind::Correlated => {
                NoiseRegime::Correlated(wedding_cake_covariance(m, Self::CLASS_SIGMAS[0], 0.1, 5)?)
            }
        };
        Ok(NoiseSpec {
            regime,
            class_sigmas: Self::CLASS_SIGMAS.to_vec(),
        })
    }

    pub fn sigma_for(&self, class_id: ClassId) -> f64 {
        let i = (class_id as usize).min(self.class_sigmas.len() - 1);
        self.class_sigmas[i]
    }

    pub fn apply(&self, inst: &Instance, rng: &mut impl Rng) -> Result<Instance> {
        let class_id = inst.label().unwrap_or(0);
        let sigma = self.sigma_for(class_id);
        match &self.regime {
            NoiseRegime::Gaussian => add_gaussian_noise(inst, sigma, rng),
            NoiseRegime::Mixture(mix) => add_mixture_noise(inst, sigma, *mix, rng),
            NoiseRegime::Correlated(cov) if class_id == 0 => add_correlated_noise(inst, cov, rng),
            NoiseRegime::Correlated(_) => add_gaussian_noise(inst, sigma, rng),
        }
    }
}

pub fn class_spec(kind: ExperimentKind, class_id: ClassId) -> Option<ClassSpec> {
    match kind {
        ExperimentKind::Compact => ClassSpec::table2(class_id),
        _ => ClassSpec::table1(class_id),
    }
}

pub fn outlier_classes(kind: ExperimentKind) -> &'static [ClassId] {
    match kind {
        ExperimentKind::Compact => &[2, 3],
        _ => &[2, 3, 4],
    }
}

/// Simulates one noisy instance of `class_id` from explicit substreams.
pub fn simulate_instance(
    kind: ExperimentKind,
    class_id: ClassId,
    grid: &Grid,
    noise: &NoiseSpec,
    params_rng: &mut impl Rng,
    noise_rng: &mut impl Rng,
) -> Result<(CurveParams, Instance)> {
    let spec = class_spec(kind, class_id).ok_or_else(|| BadacError::Config(format!("no class {class_id} for {kind}")))?;
    let params = spec.draw_params(params_rng);
    let inst = noise.apply(&params.curve(grid, Some(class_id)), noise_rng)?;
    Ok((params, inst))
}

/// Provenance recorded next to every simulated dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub n_train: usize,
    pub n_test: usize,
    pub n_outliers: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub train: Dataset,
    pub test: Dataset,
    pub provenance: Provenance,
}

/// Labels for `count` slots split evenly across `classes`; the remainder goes
/// round-robin from the first class.
fn even_split(count: usize, classes: &[ClassId]) -> Vec<ClassId> {
    let k = classes.len();
    let mut out = Vec::with_capacity(count);
    for (i, &c) in classes.iter().enumerate() {
        let share = count / k + usize::from(i < count % k);
        out.extend(std::iter::repeat_n(c, share));
    }
    out
}

/// `grid_points` evenly spaced positions on `[0, x_max]`.
pub fn experiment_grid(config: &ExperimentConfig) -> Result<Grid> {
    let g = Grid::uniform(config.grid_points)?;
    if config.x_max == 1.0 {
        return Ok(g);
    }
    Grid::new(g.points().iter().map(|x| x * config.x_max).collect())
}

/// Training set from the inlier classes only (exact 50/50, remainder to
/// class 0); test set with the configured outlier fraction split evenly over
/// the outlier classes, in a seeded random order.
pub fn generate_dataset(config: &ExperimentConfig) -> Result<SimulatedData> {
    config.validate()?;
    let grid = experiment_grid(config)?;
    let noise = NoiseSpec::for_experiment(config.kind, config.grid_points)?;
    let seed = config.seed;

    let train_labels = even_split(config.n_train, &INLIER_CLASSES);
    let n_outliers = config.n_outliers();
    let mut test_labels = even_split(config.n_test - n_outliers, &INLIER_CLASSES);
    test_labels.extend(even_split(n_outliers, outlier_classes(config.kind)));
    test_labels.shuffle(&mut substream(seed, Split::Test, 0, Purpose::Layout));

    let build = |split: Split, labels: &[ClassId]| -> Result<Dataset> {
        let instances = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let mut p = substream(seed, split, i as u64, Purpose::Params);
                let mut e = substream(seed, split, i as u64, Purpose::Noise);
                simulate_instance(config.kind, label, &grid, &noise, &mut p, &mut e).map(|(_, inst)| inst)
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(instances)
    };

    Ok(SimulatedData {
        train: build(Split::Train, &train_labels)?,
        test: build(Split::Test, &test_labels)?,
        provenance: Provenance {
            generator: GENERATOR_NAME.to_string(),
            seed,
            config_hash: config.hash(),
            kind: config.kind,
            n_train: config.n_train,
            n_test: config.n_test,
            n_outliers,
            grid_points: config.grid_points,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> Grid {
        Grid::new(vec![0.0, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn sine_with_fixed_omega() {
        let c = CurveParams::Sine { omega: 5.0 }.curve(&grid3(), Some(0));
        let want = [0.0, 0.5984721441039565, -0.9589242746631385];
        for (a, b) in c.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_quadratic() {
        let c = CurveParams::Quadratic {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
        }
        .curve(&grid3(), Some(1));
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_is_inclusive_at_x0() {
        let c = CurveParams::Step { h: 1.0, x0: 0.5 }.curve(&grid3(), Some(2));
        assert_eq!(c.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn compact_width_is_positive() {
        let spec = ClassSpec::table2(2).unwrap();
        let mut rng = substream(3, Split::Extra, 0, Purpose::Params);
        for _ in 0..2000 {
            match spec.draw_params(&mut rng) {
                CurveParams::CompactBump { width, mu, .. } => {
                    assert!(width > 0.0);
                    assert!((0.0..1.0).contains(&mu));
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn compact_bump_is_local() {
        let grid = Grid::uniform(200).unwrap();
        let spec = ClassSpec::table2(3).unwrap();
        let mut rng = substream(11, Split::Extra, 1, Purpose::Params);
        for _ in 0..50 {
            let p = spec.draw_params(&mut rng);
            let CurveParams::CompactBump { mu, width, .. } = p else { unreachable!() };
            for &x in grid.points() {
                if (x - mu).abs() > 6.0 * width {
                    assert!((p.evaluate(x) - p.base_curve().evaluate(x)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn gaussian_noise_variance() {
        let grid = Grid::uniform(1000).unwrap();
        let base = CurveParams::Sine { omega: 5.0 }.curve(&grid, Some(0));
        let mut rng = substream(1, Split::Extra, 0, Purpose::Noise);
        let mut resid = Vec::new();
        for _ in 0..100 {
            let noisy = add_gaussian_noise(&base, 0.3, &mut rng).unwrap();
            assert!(noisy.sigmas().iter().all(|&s| s == 0.3));
            resid.extend(noisy.values().iter().zip(base.values()).map(|(a, b)| a - b));
        }
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((var / 0.09 - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn vanishing_noise() {
        let base = CurveParams::Sine { omega: 3.0 }.curve(&grid3(), Some(0));
        let mut rng = substream(1, Split::Extra, 0, Purpose::Noise);
        let noisy = add_gaussian_noise(&base, 1e-12, &mut rng).unwrap();
        for (a, b) in noisy.values().iter().zip(base.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_noise_variance() {
        let grid = Grid::uniform(1000).unwrap();
        let base = CurveParams::Sine { omega: 5.0 }.curve(&grid, Some(0));
        let mut rng = substream(2, Split::Extra, 0, Purpose::Noise);
        let mut resid = Vec::new();
        for _ in 0..100 {
            let noisy = add_mixture_noise(&base, 0.3, MixtureNoise::default(), &mut rng).unwrap();
            assert!(noisy.sigmas().iter().all(|&s| s == 0.3));
            resid.extend(noisy.values().iter().zip(base.values()).map(|(a, b)| a - b));
        }
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        // σ²(0.8 + 0.2·25) = 5.8σ²
        assert!((var / (5.8 * 0.09) - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn degenerate_mixture_is_gaussian() {
        let grid = Grid::uniform(2000).unwrap();
        let base = CurveParams::Sine { omega: 5.0 }.curve(&grid, Some(0));
        let mix = MixtureNoise {
            fraction: 0.0,
            inflation: 5.0,
        };
        let mut rng = substream(9, Split::Extra, 0, Purpose::Noise);
        let mut resid = Vec::new();
        for _ in 0..50 {
            let noisy = add_mixture_noise(&base, 0.5, mix, &mut rng).unwrap();
            resid.extend(noisy.values().iter().zip(base.values()).map(|(a, b)| a - b));
        }
        let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
        assert!((var / 0.25 - 1.0).abs() < 0.02);
        let kurt = resid.iter().map(|r| r.powi(4)).sum::<f64>() / resid.len() as f64 / (var * var);
        assert!((kurt - 3.0).abs() < 0.1, "kurtosis {kurt}");
    }

    #[test]
    fn wedding_cake_small() {
        let cov = wedding_cake_covariance(5, 0.3, 0.1, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let v = 0.1 * (i.min(j) + 1) as f64;
                let want = if i == j { 0.09 + v } else { v };
                assert!((cov.get(i, j) - want).abs() < 1e-15, "({i},{j})");
            }
        }
        assert!((cov.get(0, 0) - 0.19).abs() < 1e-15);
    }

    #[test]
    fn wedding_cake_without_steps_is_diagonal() {
        let cov = wedding_cake_covariance(10, 0.3, 0.0, 5).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(cov.get(i, j), if i == j { 0.09 } else { 0.0 });
            }
        }
    }

    #[test]
    fn wedding_cake_is_monotone_and_psd() {
        let cov = wedding_cake_covariance(50, 0.3, 0.1, 5).unwrap();
        assert!(cov.cholesky_factor().is_ok());
        for i in 1..49 {
            // V never decreases with min(i, j)
            assert!(cov.get(i + 1, i + 1) >= cov.get(i, i));
            assert!(cov.get(i + 1, i) >= cov.get(i, i - 1));
        }
        assert_eq!(
            wedding_cake_covariance(4, 0.3, 0.1, 5).unwrap_err(),
            BadacError::MTooSmall { m: 4, levels: 5 }
        );
    }

    #[test]
    fn correlated_noise_covariance() {
        let m = 6;
        let grid = Grid::uniform(m).unwrap();
        let cov = wedding_cake_covariance(m, 0.3, 0.1, 3).unwrap();
        let base = CurveParams::Sine { omega: 5.0 }.curve(&grid, Some(0));
        let mut rng = substream(4, Split::Extra, 0, Purpose::Noise);
        let draws = 100_000;
        let mut acc = vec![0.0; m * m];
        for _ in 0..draws {
            let noisy = add_correlated_noise(&base, &cov, &mut rng).unwrap();
            let r: Vec<f64> = noisy.values().iter().zip(base.values()).map(|(a, b)| a - b).collect();
            for i in 0..m {
                for j in 0..m {
                    acc[i * m + j] += r[i] * r[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                let est = acc[i * m + j] / draws as f64;
                let want = cov.get(i, j);
                assert!((est / want - 1.0).abs() < 0.05, "({i},{j}) {est} vs {want}");
            }
        }
        let noisy = add_correlated_noise(&base, &cov, &mut rng).unwrap();
        assert!((noisy.sigmas()[0] - 0.19f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_covariance_matches_gaussian_noise_scale() {
        let m = 4;
        let grid = Grid::uniform(m).unwrap();
        let cov = wedding_cake_covariance(m, 0.4, 0.0, 2).unwrap();
        let base = CurveParams::Sine { omega: 5.0 }.curve(&grid, Some(0));
        let mut rng = substream(5, Split::Extra, 0, Purpose::Noise);
        let mut sq = 0.0;
        let draws = 20_000;
        for _ in 0..draws {
            let noisy = add_correlated_noise(&base, &cov, &mut rng).unwrap();
            sq += noisy.values().iter().zip(base.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        assert!((sq / (draws * m) as f64 / 0.16 - 1.0).abs() < 0.03);
    }

    #[test]
    fn dataset_counts() {
        let cfg = ExperimentConfig::new(ExperimentKind::Gaussian)
            .with_counts(1000, 1000)
            .with_seed(5);
        let data = generate_dataset(&cfg).unwrap();
        let outliers = |d: &Dataset| d.instances().iter().filter(|i| i.label().unwrap() >= 2).count();
        assert_eq!(outliers(&data.test), 10);
        assert_eq!(outliers(&data.train), 0);
        assert_eq!(data.train.of_class(0).count(), 500);
        assert_eq!(data.train.of_class(1).count(), 500);
        // 10 outliers over classes 2,3,4 → 4,3,3
        assert_eq!(data.test.of_class(2).count(), 4);
        assert_eq!(data.test.of_class(3).count(), 3);
        assert_eq!(data.test.of_class(4).count(), 3);
        assert_eq!(data.provenance.n_outliers, 10);
        assert_eq!(data.provenance.generator, GENERATOR_NAME);
    }

    #[test]
    fn odd_train_count_favors_class_zero() {
        let cfg = ExperimentConfig::new(ExperimentKind::Gaussian).with_counts(11, 5);
        let data = generate_dataset(&cfg).unwrap();
        assert_eq!(data.train.of_class(0).count(), 6);
        assert_eq!(data.train.of_class(1).count(), 5);
    }

    #[test]
    fn zero_outlier_fraction() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Compact).with_counts(20, 300);
        cfg.outlier_fraction = 0.0;
        let data = generate_dataset(&cfg).unwrap();
        assert!(data.test.instances().iter().all(|i| i.label().unwrap() < 2));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        for kind in [
            ExperimentKind::Gaussian,
            ExperimentKind::Compact,
            ExperimentKind::NonGaussian,
            ExperimentKind::Correlated,
        ] {
            let cfg = ExperimentConfig::new(kind).with_counts(40, 200).with_seed(77);
            let a = generate_dataset(&cfg).unwrap();
            let b = generate_dataset(&cfg).unwrap();
            assert_eq!(a.train.instances(), b.train.instances());
            assert_eq!(a.test.instances(), b.test.instances());
            let c = generate_dataset(&cfg.clone().with_seed(78)).unwrap();
            assert_ne!(a.test.instances(), c.test.instances());
        }
    }

    #[test]
    fn class_sigmas_follow_experiment() {
        let cfg = ExperimentConfig::new(ExperimentKind::Gaussian).with_counts(10, 400).with_seed(1);
        let data = generate_dataset(&cfg).unwrap();
        for inst in data.train.instances().iter().chain(data.test.instances()) {
            let want = if inst.label() == Some(1) { 0.5 } else { 0.3 };
            assert!(inst.sigmas().iter().all(|&s| s == want));
        }
    }

    #[test]
    fn correlated_experiment_only_touches_class_zero() {
        let cfg = ExperimentConfig::new(ExperimentKind::Correlated).with_counts(10, 400).with_seed(1);
        let data = generate_dataset(&cfg).unwrap();
        for inst in data.test.instances() {
            let s0 = inst.sigmas()[0];
            match inst.label() {
                Some(0) => assert!((s0 - 0.19f64.sqrt()).abs() < 1e-15),
                Some(1) => assert_eq!(s0, 0.5),
                _ => assert_eq!(s0, 0.3),
            }
        }
    }
}
