//! Datasets: experiments, CSV ingestion, synthetic data and report export.

mod csvio;
mod report;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::energy::ModelWeights;
use crate::error::{Error, Result};
use crate::kinematics::{FiberDirection, LoadingMode};
use crate::stress::{predict_curve, Condition, LoadingCase, StressSample};

pub use csvio::{load_csv, load_csv_with, parse_csv, write_csv, LoadOptions, CSV_HEADER};
pub use report::{export_reports, write_curve, write_curve_csv, ExportedFiles, CURVE_HEADER};

/// Replicate id used for the mean curve of a condition.
pub const MEAN_REPLICATE: &str = "mean";

/// Strain bounds of the test protocol.
pub const STRETCH_RANGE: (f64, f64) = (0.9, 1.1);
pub const SHEAR_RANGE: (f64, f64) = (0.0, 0.1);

/// Slack on the protocol bounds and the reference loading value.
const BOUND_SLACK: f64 = 1e-9;

/// One loading curve of one sample (or a mean curve).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub material: String,
    pub mode: LoadingMode,
    pub dir: FiberDirection,
    pub replicate: String,
    pub samples: Vec<StressSample>,
}

impl Experiment {
    pub fn new(
        material: impl Into<String>,
        condition: Condition,
        replicate: impl Into<String>,
        samples: Vec<StressSample>,
    ) -> Self {
        Experiment {
            material: material.into(),
            mode: condition.mode,
            dir: condition.dir,
            replicate: replicate.into(),
            samples,
        }
    }

    pub fn condition(&self) -> Condition {
        Condition::new(self.mode, self.dir)
    }

    pub fn is_mean(&self) -> bool {
        self.replicate == MEAN_REPLICATE
    }

    pub fn loadings(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.loading)
    }

    pub fn stresses(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.stress)
    }

    /// Engineering strain of every sample: `λ − 1` or `γ`.
    pub fn strains(&self) -> impl Iterator<Item = f64> + '_ {
        let reference = self.mode.reference_loading();
        self.samples.iter().map(move |s| s.loading - reference)
    }

    /// Checks the curve invariants. `rows` maps samples to CSV rows for error
    /// messages, when available.
    pub fn validate(&self, opts: &LoadOptions, rows: Option<&[usize]>) -> Result<()> {
        let row = |i: usize| rows.and_then(|r| r.get(i).copied());
        let first = self.samples.first().ok_or_else(|| {
            Error::NoData(format!(
                "{} replicate '{}' has no samples",
                self.condition(),
                self.replicate
            ))
        })?;
        let reference = self.mode.reference_loading();
        if (first.loading - reference).abs() > BOUND_SLACK {
            return Err(Error::validation(
                row(0),
                format!(
                    "{} replicate '{}' must start at the reference state {reference}, found {}",
                    self.condition(),
                    self.replicate,
                    first.loading
                ),
            ));
        }
        if first.stress.abs() > opts.reference_tolerance {
            return Err(Error::validation(
                row(0),
                format!(
                    "stress at the reference state is {} kPa, above the tolerance {} kPa",
                    first.stress, opts.reference_tolerance
                ),
            ));
        }
        let increasing = !matches!(self.mode, LoadingMode::Compression);
        for (i, pair) in self.samples.windows(2).enumerate() {
            let ok = if increasing {
                pair[1].loading > pair[0].loading
            } else {
                pair[1].loading < pair[0].loading
            };
            if !ok {
                return Err(Error::validation(
                    row(i + 1),
                    format!(
                        "loading must be strictly {} in {}",
                        if increasing {
                            "increasing"
                        } else {
                            "decreasing"
                        },
                        self.mode
                    ),
                ));
            }
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.loading.is_finite() || !s.stress.is_finite() {
                return Err(Error::validation(row(i), "non-finite value"));
            }
            if !opts.permissive {
                let (lo, hi) = match self.mode {
                    LoadingMode::Shear => SHEAR_RANGE,
                    _ => STRETCH_RANGE,
                };
                if s.loading < lo - BOUND_SLACK || s.loading > hi + BOUND_SLACK {
                    return Err(Error::validation(
                        row(i),
                        format!(
                            "{} loading {} outside the protocol range [{lo}, {hi}]",
                            self.mode, s.loading
                        ),
                    ));
                }
            } else if self.mode.is_uniaxial() && s.loading <= 0.0 {
                return Err(Error::validation(row(i), "stretch must be positive"));
            }
        }
        Ok(())
    }
}

/// Mean curves per condition plus the individual replicates behind them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentSet {
    pub material: String,
    pub means: BTreeMap<Condition, Experiment>,
    pub replicates: BTreeMap<Condition, Vec<Experiment>>,
}

impl ExperimentSet {
    pub fn new(material: impl Into<String>) -> Self {
        ExperimentSet {
            material: material.into(),
            ..Default::default()
        }
    }

    /// Inserts a mean curve; fails if the condition already has one.
    pub fn insert_mean(&mut self, exp: Experiment) -> Result<()> {
        let c = exp.condition();
        if self.means.contains_key(&c) {
            return Err(Error::validation(
                None,
                format!("duplicate mean curve for {c}"),
            ));
        }
        self.means.insert(c, exp);
        Ok(())
    }

    pub fn push_replicate(&mut self, exp: Experiment) {
        self.replicates
            .entry(exp.condition())
            .or_default()
            .push(exp);
    }

    pub fn mean(&self, c: Condition) -> Option<&Experiment> {
        self.means.get(&c)
    }

    pub fn conditions(&self) -> Vec<Condition> {
        self.means.keys().copied().collect()
    }

    /// Mean curves in condition order.
    pub fn mean_curves(&self) -> Vec<Experiment> {
        self.means.values().cloned().collect()
    }

    /// Mean curves restricted to `conditions`.
    pub fn select(&self, conditions: &[Condition]) -> Vec<Experiment> {
        self.means
            .iter()
            .filter(|(c, _)| conditions.contains(c))
            .map(|(_, e)| e.clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty() && self.replicates.is_empty()
    }

    pub fn num_samples(&self) -> usize {
        self.means.values().map(|e| e.samples.len()).sum::<usize>()
            + self
                .replicates
                .values()
                .flatten()
                .map(|e| e.samples.len())
                .sum::<usize>()
    }

    /// Builds missing mean curves as the pointwise average of replicates that
    /// share one loading grid.
    pub fn fill_means_from_replicates(&mut self) -> Result<()> {
        for (c, reps) in &self.replicates {
            if self.means.contains_key(c) || reps.is_empty() {
                continue;
            }
            let grid: Vec<f64> = reps[0].loadings().collect();
            for r in reps {
                let same = r.samples.len() == grid.len()
                    && r.loadings().zip(&grid).all(|(a, b)| (a - b).abs() <= 1e-12);
                if !same {
                    return Err(Error::validation(
                        None,
                        format!(
                            "replicates of {c} use different loading grids; supply a mean curve"
                        ),
                    ));
                }
            }
            let n = reps.len() as f64;
            let samples = grid
                .iter()
                .enumerate()
                .map(|(i, &loading)| StressSample {
                    loading,
                    stress: reps.iter().map(|r| r.samples[i].stress).sum::<f64>() / n,
                })
                .collect();
            self.means.insert(
                *c,
                Experiment::new(self.material.clone(), *c, MEAN_REPLICATE, samples),
            );
        }
        Ok(())
    }
}

/// Multiplicative Gaussian noise on stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Relative standard deviation, e.g. `0.02` for 2 %.
    pub amplitude: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn new(amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!(
                "noise amplitude must be non-negative, got {amplitude}"
            )));
        }
        Ok(NoiseSpec { amplitude, seed })
    }
}

fn noisy_curve(
    model: &ModelWeights,
    case: &LoadingCase,
    n_points: usize,
    scale: f64,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StressSample>> {
    let mut curve = predict_curve(model, case, n_points)?;
    if amplitude > 0.0 || scale != 1.0 {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        for s in &mut curve {
            let eps: f64 = normal.sample(rng);
            s.stress *= scale * (1.0 + amplitude * eps);
        }
    }
    Ok(curve)
}

/// Virtual test series: the stress of `model` on uniform grids for every case
/// in `protocol`, perturbed by `noise`. With zero amplitude the curves equal
/// [`predict_curve`] exactly.
pub fn synthesize(
    model: &ModelWeights,
    protocol: &[LoadingCase],
    n_points: usize,
    noise: NoiseSpec,
) -> Result<ExperimentSet> {
    synthesize_named("synthetic", model, protocol, n_points, noise)
}

pub fn synthesize_named(
    material: &str,
    model: &ModelWeights,
    protocol: &[LoadingCase],
    n_points: usize,
    noise: NoiseSpec,
) -> Result<ExperimentSet> {
    model.validate()?;
    if protocol.is_empty() {
        return Err(Error::domain("protocol has no loading cases"));
    }
    let noise = NoiseSpec::new(noise.amplitude, noise.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut set = ExperimentSet::new(material);
    for case in protocol {
        let samples = noisy_curve(model, case, n_points, 1.0, noise.amplitude, &mut rng)?;
        set.insert_mean(Experiment::new(
            material,
            case.condition(),
            MEAN_REPLICATE,
            samples,
        ))?;
    }
    Ok(set)
}

/// Replicated virtual test series.
///
/// Each replicate scales the model stress by its own factor drawn from
/// `N(1, sample_scatter)` (sample-to-sample variability) and then applies
/// pointwise `noise`. Mean curves are the pointwise replicate averages.
pub fn synthesize_replicates(
    material: &str,
    model: &ModelWeights,
    protocol: &[LoadingCase],
    n_points: usize,
    n_replicates: usize,
    sample_scatter: f64,
    noise: NoiseSpec,
) -> Result<ExperimentSet> {
    model.validate()?;
    if n_replicates == 0 {
        return Err(Error::domain("at least one replicate is required"));
    }
    if !(sample_scatter >= 0.0 && sample_scatter.is_finite()) {
        return Err(Error::domain("sample scatter must be non-negative"));
    }
    let noise = NoiseSpec::new(noise.amplitude, noise.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut set = ExperimentSet::new(material);
    for case in protocol {
        for r in 0..n_replicates {
            let scale = (1.0 + sample_scatter * normal.sample(&mut rng)).max(0.0);
            let samples = noisy_curve(model, case, n_points, scale, noise.amplitude, &mut rng)?;
            set.push_replicate(Experiment::new(
                material,
                case.condition(),
                format!("{}", r + 1),
                samples,
            ));
        }
    }
    set.fill_means_from_replicates()?;
    Ok(set)
}
