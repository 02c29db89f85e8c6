//! L1-regularized training of the twelve-term network and goodness of fit.
//!
//! The loss pools every point of every training curve,
//!
//! ```text
//! L = 1/n Σ (P(F_i; w, w*) − P̂_i)² + α Σ |w_k|
//! ```
//!
//! and is minimized with full-batch Adam, projecting all 24 weights onto
//! `[0, ∞)` after each step. Outer weights below the sparsification threshold
//! are zeroed at the end of training.

mod adam;
mod subsets;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Experiment;
use crate::energy::{eval_term, ModelWeights, NamedModel, TermId, NUM_TERMS, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::kinematics::{invariants_for, InvariantSet};
use crate::stress::{Condition, StressCoefficients};

pub use adam::ProjectedAdam;
pub use subsets::{best_of_size, enumerate_subsets_bestfit, fit_subset, SubsetFit, MAX_SUBSETS};

/// Number of trainable parameters, `[w_1..w_12, w*_1..w*_12]`.
pub const NUM_PARAMS: usize = 2 * NUM_TERMS;

/// Longest loss trace kept in a [`DiscoveredModel`].
pub const MAX_TRACE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// L1 penalty on the outer weights.
    pub alpha: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Outer weights below this value (kPa) are zeroed after training.
    pub threshold: f64,
    /// Seeds the optional restarts; the first run is always deterministic.
    pub seed: u64,
    /// Initial value of every weight.
    pub init_scale: f64,
    /// Extra runs from randomly perturbed starts; the lowest final loss wins.
    pub restarts: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            alpha: 0.05,
            epochs: 200_000,
            learning_rate: 1e-3,
            threshold: 1e-3,
            seed: 0,
            init_scale: 0.5,
            restarts: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.alpha) {
            return Err(Error::domain(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.epochs == 0 {
            return Err(Error::domain("epochs must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if !finite_nonneg(self.threshold) || !finite_nonneg(self.init_scale) {
            return Err(Error::domain("threshold and init scale must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    coeffs: StressCoefficients,
    inv: InvariantSet,
    target: f64,
}

/// Training curves flattened into points with their kinematics precomputed.
#[derive(Debug, Clone)]
pub struct TrainingData {
    points: Vec<Point>,
}

impl TrainingData {
    pub fn new(experiments: &[Experiment]) -> Result<Self> {
        let mut points = Vec::new();
        for exp in experiments {
            for s in &exp.samples {
                points.push(Point {
                    coeffs: StressCoefficients::for_case(exp.mode, exp.dir, s.loading),
                    inv: invariants_for(exp.mode, exp.dir, s.loading)?,
                    target: s.stress,
                });
            }
        }
        if points.is_empty() {
            return Err(Error::NoData("training data contains no points".into()));
        }
        Ok(TrainingData { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Data term of the loss (mean squared error).
    pub fn mse(&self, model: &ModelWeights) -> f64 {
        let sum: f64 = self
            .points
            .iter()
            .map(|p| {
                let mut g = [0.0; 4];
                for k in TermId::all() {
                    let w = model.outer(k);
                    if w != 0.0 {
                        g[k.invariant().slot()] += w * eval_term(k, &p.inv, model.inner(k)).d_inv;
                    }
                }
                let r = p.coeffs.apply(&g) - p.target;
                r * r
            })
            .sum();
        sum / self.points.len() as f64
    }

    pub fn loss(&self, model: &ModelWeights, alpha: f64) -> f64 {
        self.mse(model) + alpha * model.l1_norm()
    }

    /// Loss and its gradient `[∂L/∂w, ∂L/∂w*]`. The L1 subgradient is taken
    /// as zero at `w = 0`.
    pub fn loss_and_gradient(&self, model: &ModelWeights, alpha: f64) -> (f64, [f64; NUM_PARAMS]) {
        let mut grad = [0.0; NUM_PARAMS];
        let mut sse = 0.0;
        let scale = 2.0 / self.points.len() as f64;
        let mut evals = [(0.0f64, 0.0f64); NUM_TERMS];
        for p in &self.points {
            let mut g = [0.0; 4];
            for k in TermId::all() {
                let e = eval_term(k, &p.inv, model.inner(k));
                let c = p.coeffs.0[k.invariant().slot()];
                // ∂P/∂w and ∂P/∂w* per term
                evals[k.index()] = (c * e.d_inv, c * model.outer(k) * e.d_inv_d_inner);
                g[k.invariant().slot()] += model.outer(k) * e.d_inv;
            }
            let r = p.coeffs.apply(&g) - p.target;
            sse += r * r;
            let rs = scale * r;
            for (i, (dw, dws)) in evals.iter().enumerate() {
                grad[i] += rs * dw;
                grad[NUM_TERMS + i] += rs * dws;
            }
        }
        for (i, w) in model.outer.iter().enumerate() {
            if *w > 0.0 {
                grad[i] += alpha;
            } else if *w < 0.0 {
                grad[i] -= alpha;
            }
        }
        let loss = sse / self.points.len() as f64 + alpha * model.l1_norm();
        (loss, grad)
    }
}

/// `L = 1/n Σ (P − P̂)² + α ‖w‖₁` over all points of `experiments`.
pub fn loss(model: &ModelWeights, experiments: &[Experiment], alpha: f64) -> Result<f64> {
    Ok(TrainingData::new(experiments)?.loss(model, alpha))
}

/// Analytic gradient of [`loss`] with respect to `[w_1..w_12, w*_1..w*_12]`.
pub fn loss_gradient(
    model: &ModelWeights,
    experiments: &[Experiment],
    alpha: f64,
) -> Result<[f64; NUM_PARAMS]> {
    Ok(TrainingData::new(experiments)?
        .loss_and_gradient(model, alpha)
        .1)
}

/// Coefficient of determination `1 − SS_res/SS_tot` on one curve.
pub fn r_squared(model: &ModelWeights, experiment: &Experiment) -> Result<f64> {
    let n = experiment.samples.len();
    if n < 2 {
        return Err(Error::Undefined(format!(
            "R² of {} needs at least two points",
            experiment.condition()
        )));
    }
    let data = TrainingData::new(std::slice::from_ref(experiment))?;
    let mean = experiment.stresses().sum::<f64>() / n as f64;
    let ss_tot: f64 = experiment.stresses().map(|s| (s - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined(format!(
            "R² of {} is undefined: measured stress has zero variance",
            experiment.condition()
        )));
    }
    let ss_res = data.mse(model) * n as f64;
    Ok(1.0 - ss_res / ss_tot)
}

/// R² per condition and their arithmetic mean. Curves whose R² is undefined
/// are skipped.
pub fn goodness_of_fit(
    model: &ModelWeights,
    experiments: &[Experiment],
) -> (BTreeMap<Condition, f64>, f64) {
    let per: BTreeMap<Condition, f64> = experiments
        .iter()
        .filter_map(|e| r_squared(model, e).ok().map(|r| (e.condition(), r)))
        .collect();
    let mean = if per.is_empty() {
        f64::NAN
    } else {
        per.values().sum::<f64>() / per.len() as f64
    };
    (per, mean)
}

/// Order-independent 64-bit FNV-1a fingerprint of a curve.
pub fn fingerprint(exp: &Experiment) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(exp.material.as_bytes());
    feed(exp.condition().to_string().as_bytes());
    feed(exp.replicate.as_bytes());
    for s in &exp.samples {
        feed(&s.loading.to_le_bytes());
        feed(&s.stress.to_le_bytes());
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: TrainingConfig,
    /// Conditions used for training.
    pub trained_on: Vec<Condition>,
    /// Fingerprint of each training curve, keyed by condition.
    pub fingerprints: BTreeMap<String, String>,
    pub n_points: usize,
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredModel {
    pub weights: ModelWeights,
    pub r_squared: BTreeMap<Condition, f64>,
    pub mean_r_squared: f64,
    pub active_terms: Vec<TermId>,
    pub final_loss: f64,
    /// `(epoch, loss)` pairs, at most [`MAX_TRACE`] of them.
    pub loss_trace: Vec<(usize, f64)>,
    pub provenance: Provenance,
}

/// Fit report as written to `fit_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub name: String,
    pub formula: String,
    pub active_terms: Vec<TermId>,
    pub effective_coefficients: BTreeMap<String, f64>,
    pub r_squared: BTreeMap<String, f64>,
    pub mean_r_squared: f64,
    pub final_loss: f64,
    pub loss_trace: Vec<(usize, f64)>,
    pub provenance: Provenance,
}

impl DiscoveredModel {
    pub fn named(&self, name: &str) -> NamedModel {
        let mut m = NamedModel::new(name, self.weights);
        m.meta = serde_json::json!({
            "active_terms": self.active_terms,
            "mean_r_squared": finite_or_null(self.mean_r_squared),
            "alpha": self.provenance.config.alpha,
        });
        m
    }

    pub fn report(&self, name: &str) -> FitReport {
        FitReport {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            formula: self.weights.formula(),
            active_terms: self.active_terms.clone(),
            effective_coefficients: self
                .active_terms
                .iter()
                .map(|k| (k.to_string(), self.weights.effective_coefficient(*k)))
                .collect(),
            r_squared: self
                .r_squared
                .iter()
                .map(|(c, r)| (c.to_string(), *r))
                .collect(),
            mean_r_squared: self.mean_r_squared,
            final_loss: self.final_loss,
            loss_trace: self.loss_trace.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::validation(None, format!("invalid fit report: {e}")))
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

struct Run {
    params: [f64; NUM_PARAMS],
    final_loss: f64,
    trace: Vec<(usize, f64)>,
}

fn run_adam(data: &TrainingData, init: [f64; NUM_PARAMS], config: &TrainingConfig) -> Result<Run> {
    let mut params = init;
    let mut opt = ProjectedAdam::new(NUM_PARAMS, config.learning_rate);
    let stride = config.epochs.div_ceil(MAX_TRACE - 1).max(1);
    let mut trace = Vec::with_capacity(MAX_TRACE);
    for epoch in 0..config.epochs {
        let model = ModelWeights::from_slice(&params)?;
        let (loss, grad) = data.loss_and_gradient(&model, config.alpha);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training {
                epoch,
                message: format!(
                    "non-finite loss {loss}; weights {:?}; try a smaller learning rate",
                    params
                ),
            });
        }
        if epoch % stride == 0 {
            trace.push((epoch, loss));
        }
        opt.step(&mut params, &grad);
    }
    let final_loss = data.loss(&ModelWeights::from_slice(&params)?, config.alpha);
    if !final_loss.is_finite() {
        return Err(Error::Training {
            epoch: config.epochs,
            message: format!("non-finite final loss {final_loss}"),
        });
    }
    trace.push((config.epochs, final_loss));
    Ok(Run {
        params,
        final_loss,
        trace,
    })
}

/// Trains on `train_on` and reports R² on `evaluate_on` (all available
/// curves, typically).
pub fn train_and_evaluate(
    train_on: &[Experiment],
    evaluate_on: &[Experiment],
    config: &TrainingConfig,
) -> Result<DiscoveredModel> {
    config.validate()?;
    if train_on.is_empty() {
        return Err(Error::NoData("no experiments to train on".into()));
    }
    let data = TrainingData::new(train_on)?;

    let mut best = run_adam(&data, [config.init_scale; NUM_PARAMS], config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.restarts {
        let mut init = [0.0; NUM_PARAMS];
        for x in &mut init {
            *x = config.init_scale * rng.random_range(0.5..1.5);
        }
        let run = run_adam(&data, init, config)?;
        if run.final_loss < best.final_loss {
            best = run;
        }
    }

    let mut weights = ModelWeights::from_slice(&best.params)?;
    for k in TermId::all() {
        if weights.outer(k) < config.threshold {
            weights.outer[k.index()] = 0.0;
            weights.inner[k.index()] = 0.0;
        }
    }
    let active_terms = weights.active_terms(0.0);
    let (r_squared, mean_r_squared) = goodness_of_fit(&weights, evaluate_on);
    let provenance = Provenance {
        config: *config,
        trained_on: train_on.iter().map(|e| e.condition()).collect(),
        fingerprints: train_on
            .iter()
            .map(|e| (format!("{}/{}", e.condition(), e.replicate), fingerprint(e)))
            .collect(),
        n_points: data.len(),
    };
    Ok(DiscoveredModel {
        weights,
        r_squared,
        mean_r_squared,
        active_terms,
        final_loss: best.final_loss,
        loss_trace: best.trace,
        provenance,
    })
}

/// Trains on `experiments` and evaluates R² on the same curves.
pub fn train(experiments: &[Experiment], config: &TrainingConfig) -> Result<DiscoveredModel> {
    train_and_evaluate(experiments, experiments, config)
}
