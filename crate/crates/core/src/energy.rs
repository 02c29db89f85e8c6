//! Twelve-term invariant-based free energy.
//!
//! Terms 1–4 act on `x = I1 − 3`, terms 5–8 on `x = I2 − 3`:
//!
//! | k | term |
//! |---|------|
//! | 1, 5 | `w·w*·x` |
//! | 2, 6 | `w·(exp(w*·x) − 1)` |
//! | 3, 7 | `w·w*·x²` |
//! | 4, 8 | `w·(exp(w*·x²) − 1)` |
//!
//! Terms 9–10 act on `⟨I4 − 1⟩²` and 11–12 on `⟨I5 − 1⟩²`, with the identity
//! and exponential activations respectively. `⟨x⟩ = max(x, 0)` switches the
//! fiber terms off when the fiber is shortened.
//!
//! Outer weights `w` carry kPa, inner weights `w*` are unit-less. All weights
//! are non-negative.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::InvariantSet;

pub const NUM_TERMS: usize = 12;

/// Version tag written into every JSON document produced by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Macaulay bracket `⟨x⟩ = max(x, 0)`.
#[inline]
pub fn macaulay(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Invariant a term depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    I1,
    I2,
    I4,
    I5,
}

impl Invariant {
    /// Position in `[I1, I2, I4, I5]` arrays.
    pub fn slot(self) -> usize {
        match self {
            Invariant::I1 => 0,
            Invariant::I2 => 1,
            Invariant::I4 => 2,
            Invariant::I5 => 3,
        }
    }

    pub fn is_fiber(self) -> bool {
        matches!(self, Invariant::I4 | Invariant::I5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Exp,
}

/// One of the twelve catalog terms, `1..=12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TermId(u8);

impl TryFrom<u8> for TermId {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        TermId::new(k as usize)
    }
}

impl From<TermId> for u8 {
    fn from(t: TermId) -> u8 {
        t.0
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TermId {
    pub fn new(k: usize) -> Result<Self> {
        if (1..=NUM_TERMS).contains(&k) {
            Ok(TermId(k as u8))
        } else {
            Err(Error::domain(format!("term index {k} is outside 1..=12")))
        }
    }

    pub fn all() -> impl Iterator<Item = TermId> {
        (1..=NUM_TERMS as u8).map(TermId)
    }

    pub fn number(self) -> usize {
        self.0 as usize
    }

    /// Zero-based position in weight arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn invariant(self) -> Invariant {
        match self.0 {
            1..=4 => Invariant::I1,
            5..=8 => Invariant::I2,
            9 | 10 => Invariant::I4,
            _ => Invariant::I5,
        }
    }

    pub fn activation(self) -> Activation {
        match self.0 {
            1 | 3 | 5 | 7 | 9 | 11 => Activation::Identity,
            _ => Activation::Exp,
        }
    }

    /// Power applied to the shifted invariant before activation. Fiber terms
    /// are always quadratic in the Macaulay bracket.
    pub fn power(self) -> u8 {
        match self.0 {
            1 | 2 | 5 | 6 => 1,
            _ => 2,
        }
    }

    /// Human-readable form, e.g. `w·(exp(w*·⟨I5−1⟩²)−1)`.
    pub fn describe(self) -> String {
        let base = match self.invariant() {
            Invariant::I1 => "[I1-3]",
            Invariant::I2 => "[I2-3]",
            Invariant::I4 => "<I4-1>",
            Invariant::I5 => "<I5-1>",
        };
        let arg = if self.power() == 2 {
            format!("{base}^2")
        } else {
            base.to_string()
        };
        match self.activation() {
            Activation::Identity => format!("w*{arg}"),
            Activation::Exp => format!("exp(w*{arg})-1"),
        }
    }

    /// Shifted argument `x` and its derivative with respect to the invariant.
    #[inline]
    fn shifted(self, inv: &InvariantSet) -> (f64, f64) {
        match self.invariant() {
            Invariant::I1 => (inv.i1 - 3.0, 1.0),
            Invariant::I2 => (inv.i2 - 3.0, 1.0),
            Invariant::I4 => {
                let x = macaulay(inv.i4 - 1.0);
                (x, if x > 0.0 { 1.0 } else { 0.0 })
            }
            Invariant::I5 => {
                let x = macaulay(inv.i5 - 1.0);
                (x, if x > 0.0 { 1.0 } else { 0.0 })
            }
        }
    }

    /// Basis value `b` fed into the activation and `db/dI`.
    #[inline]
    pub(crate) fn basis(self, inv: &InvariantSet) -> (f64, f64) {
        let (x, dx) = self.shifted(inv);
        if self.power() == 2 {
            (x * x, 2.0 * x * dx)
        } else {
            (x, dx)
        }
    }
}

/// Everything a single term contributes at one state, per unit outer weight
/// where applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TermEval {
    /// Activation value `f` (energy per unit outer weight).
    pub value: f64,
    /// `∂f/∂I` for the term's invariant.
    pub d_inv: f64,
    /// `∂f/∂w*`.
    pub d_inner: f64,
    /// `∂²f/∂I∂w*`.
    pub d_inv_d_inner: f64,
}

#[inline]
pub(crate) fn eval_term(k: TermId, inv: &InvariantSet, w_inner: f64) -> TermEval {
    let (b, db) = k.basis(inv);
    match k.activation() {
        Activation::Identity => TermEval {
            value: w_inner * b,
            d_inv: w_inner * db,
            d_inner: b,
            d_inv_d_inner: db,
        },
        Activation::Exp => {
            let e = (w_inner * b).exp();
            TermEval {
                value: (w_inner * b).exp_m1(),
                d_inv: w_inner * e * db,
                d_inner: b * e,
                d_inv_d_inner: e * (1.0 + w_inner * b) * db,
            }
        }
    }
}

/// Activation value of term `k` before outer-weight scaling, so that
/// `ψ_k = w_k · term_energy(k, ..)`.
pub fn term_energy(k: TermId, inv: &InvariantSet, w_inner: f64) -> Result<f64> {
    if !(w_inner >= 0.0 && w_inner.is_finite()) {
        return Err(Error::domain(format!(
            "inner weight must be non-negative, got {w_inner}"
        )));
    }
    Ok(eval_term(k, inv, w_inner).value)
}

/// Outer (`w`, kPa) and inner (`w*`, unit-less) weights of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelWeights {
    pub outer: [f64; NUM_TERMS],
    pub inner: [f64; NUM_TERMS],
}

impl Default for ModelWeights {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ModelWeights {
    pub fn zeros() -> Self {
        ModelWeights {
            outer: [0.0; NUM_TERMS],
            inner: [0.0; NUM_TERMS],
        }
    }

    /// All 24 weights set to `value`.
    pub fn uniform(value: f64) -> Self {
        ModelWeights {
            outer: [value; NUM_TERMS],
            inner: [value; NUM_TERMS],
        }
    }

    /// Builder-style setter for one term.
    pub fn with_term(mut self, k: usize, w: f64, w_star: f64) -> Result<Self> {
        let t = TermId::new(k)?;
        self.outer[t.index()] = w;
        self.inner[t.index()] = w_star;
        Ok(self)
    }

    pub fn outer(&self, k: TermId) -> f64 {
        self.outer[k.index()]
    }

    pub fn inner(&self, k: TermId) -> f64 {
        self.inner[k.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for k in TermId::all() {
            let (w, ws) = (self.outer(k), self.inner(k));
            if !(w >= 0.0 && w.is_finite() && ws >= 0.0 && ws.is_finite()) {
                return Err(Error::domain(format!(
                    "weights of term {k} must be finite and non-negative (w = {w}, w* = {ws})"
                )));
            }
        }
        Ok(())
    }

    /// Terms whose outer weight exceeds `threshold`.
    pub fn active_terms(&self, threshold: f64) -> Vec<TermId> {
        TermId::all()
            .filter(|&k| self.outer(k) > threshold)
            .collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.outer.iter().map(|w| w.abs()).sum()
    }

    /// Reported coefficient of a term: `w·w*` for identity activations,
    /// `w` for exponential ones.
    pub fn effective_coefficient(&self, k: TermId) -> f64 {
        match k.activation() {
            Activation::Identity => self.outer(k) * self.inner(k),
            Activation::Exp => self.outer(k),
        }
    }

    /// Flattened `[w_1..w_12, w*_1..w*_12]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.outer
            .iter()
            .chain(self.inner.iter())
            .copied()
            .collect()
    }

    pub fn from_slice(params: &[f64]) -> Result<Self> {
        if params.len() != 2 * NUM_TERMS {
            return Err(Error::domain(format!(
                "expected {} parameters, got {}",
                2 * NUM_TERMS,
                params.len()
            )));
        }
        let mut m = ModelWeights::zeros();
        m.outer.copy_from_slice(&params[..NUM_TERMS]);
        m.inner.copy_from_slice(&params[NUM_TERMS..]);
        Ok(m)
    }

    /// Formats the non-zero terms as an energy expression in kPa.
    pub fn formula(&self) -> String {
        let parts: Vec<String> = TermId::all()
            .filter(|&k| self.outer(k) > 0.0)
            .map(|k| match k.activation() {
                Activation::Identity => {
                    let arg = k.describe();
                    let arg = arg.trim_start_matches("w*");
                    format!("{:.2} kPa {}", self.effective_coefficient(k), arg)
                }
                Activation::Exp => {
                    let arg = k.describe().replace("w*", &format!("{:.2}", self.inner(k)));
                    format!("{:.2} kPa [{}]", self.outer(k), arg)
                }
            })
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// Free energy `ψ = Σ w_k · term_energy(k)` in kPa.
pub fn energy(model: &ModelWeights, inv: &InvariantSet) -> f64 {
    TermId::all()
        .filter(|&k| model.outer(k) != 0.0)
        .map(|k| model.outer(k) * eval_term(k, inv, model.inner(k)).value)
        .sum()
}

/// `∂ψ/∂I1, ∂ψ/∂I2, ∂ψ/∂I4, ∂ψ/∂I5` in kPa.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyGradient {
    pub d_i1: f64,
    pub d_i2: f64,
    pub d_i4: f64,
    pub d_i5: f64,
}

impl EnergyGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.d_i1, self.d_i2, self.d_i4, self.d_i5]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        EnergyGradient {
            d_i1: a[0],
            d_i2: a[1],
            d_i4: a[2],
            d_i5: a[3],
        }
    }
}

/// Contribution of term `k` alone to the energy gradient.
pub fn term_energy_gradient(model: &ModelWeights, k: TermId, inv: &InvariantSet) -> EnergyGradient {
    let mut g = [0.0; 4];
    g[k.invariant().slot()] = model.outer(k) * eval_term(k, inv, model.inner(k)).d_inv;
    EnergyGradient::from_array(g)
}

pub fn energy_gradient(model: &ModelWeights, inv: &InvariantSet) -> EnergyGradient {
    let mut g = [0.0; 4];
    for k in TermId::all() {
        let w = model.outer(k);
        if w != 0.0 {
            g[k.invariant().slot()] += w * eval_term(k, inv, model.inner(k)).d_inv;
        }
    }
    EnergyGradient::from_array(g)
}

/// Gradient of `ψ` with respect to the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGradient {
    /// `∂ψ/∂w`, unit-less.
    pub outer: [f64; NUM_TERMS],
    /// `∂ψ/∂w*`, kPa.
    pub inner: [f64; NUM_TERMS],
}

pub fn weight_gradient(model: &ModelWeights, inv: &InvariantSet) -> WeightGradient {
    let mut outer = [0.0; NUM_TERMS];
    let mut inner = [0.0; NUM_TERMS];
    for k in TermId::all() {
        let e = eval_term(k, inv, model.inner(k));
        outer[k.index()] = e.value;
        inner[k.index()] = model.outer(k) * e.d_inner;
    }
    WeightGradient { outer, inner }
}

/// A model with a name, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub weights: ModelWeights,
    pub meta: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct TermRecord {
    k: TermId,
    #[serde(rename = "w_kPa")]
    w_kpa: f64,
    w_star: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    name: String,
    weights: Vec<TermRecord>,
    #[serde(default)]
    meta: serde_json::Value,
}

impl NamedModel {
    pub fn new(name: impl Into<String>, weights: ModelWeights) -> Self {
        NamedModel {
            name: name.into(),
            weights,
            meta: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            weights: TermId::all()
                .map(|k| TermRecord {
                    k,
                    w_kpa: self.weights.outer(k),
                    w_star: self.weights.inner(k),
                })
                .collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    /// Parses a model document. Terms missing from `weights` are zero.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)
            .map_err(|e| Error::validation(None, format!("invalid model document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                None,
                format!("unsupported schema_version {}", doc.schema_version),
            ));
        }
        let mut weights = ModelWeights::zeros();
        let mut seen = [false; NUM_TERMS];
        for rec in doc.weights {
            if std::mem::replace(&mut seen[rec.k.index()], true) {
                return Err(Error::validation(
                    None,
                    format!("term {} listed twice", rec.k),
                ));
            }
            weights.outer[rec.k.index()] = rec.w_kpa;
            weights.inner[rec.k.index()] = rec.w_star;
        }
        weights
            .validate()
            .map_err(|e| Error::validation(None, e.to_string()))?;
        Ok(NamedModel {
            name: doc.name,
            weights,
            meta: doc.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Built-in discovered models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceModel {
    Mycelium,
    FruitingBody,
    ProteinMycelium,
}

impl ReferenceModel {
    pub const ALL: [ReferenceModel; 3] = [
        ReferenceModel::Mycelium,
        ReferenceModel::FruitingBody,
        ReferenceModel::ProteinMycelium,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceModel::Mycelium => "mycelium",
            ReferenceModel::FruitingBody => "fruiting_body",
            ReferenceModel::ProteinMycelium => "protein_mycelium",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let n = name.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|m| m.name() == n)
    }

    pub fn weights(self) -> ModelWeights {
        let m = ModelWeights::zeros();
        let m = match self {
            ReferenceModel::Mycelium => m
                .with_term(1, 2.2540, 2.2503)
                .and_then(|m| m.with_term(11, 1.2800, 1.2790)),
            ReferenceModel::FruitingBody => m
                .with_term(1, 2.0377, 2.1712)
                .and_then(|m| m.with_term(12, 0.6881, 0.7002)),
            ReferenceModel::ProteinMycelium => m.with_term(1, 3.4689, 4.1216),
        };
        m.expect("reference term indices are valid")
    }

    pub fn model(self) -> NamedModel {
        NamedModel::new(self.name(), self.weights())
    }
}

/// The three built-in models by name.
pub fn reference_models() -> Vec<NamedModel> {
    ReferenceModel::ALL.iter().map(|m| m.model()).collect()
}
