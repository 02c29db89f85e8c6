//! Exhaustive model selection over term subsets.
//!
//! Each subset is refitted without penalty by variable projection: for fixed
//! inner weights of the exponential terms the stress is linear in the outer
//! coefficients, which are then the non-negative least-squares solution. The
//! exponential inner weights are found by a log-spaced scan followed by
//! golden-section refinement, coordinate-wise when a subset holds several.
//! Nothing here shares code with the gradient-based trainer, so the ranking
//! can serve as an independent check on L1 discovery.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataio::Experiment;
use crate::energy::{Activation, ModelWeights, TermId, NUM_TERMS};
use crate::error::{Error, Result};
use crate::kinematics::{invariants_for, InvariantSet};
use crate::stress::{Condition, StressCoefficients};

use super::goodness_of_fit;

/// Largest subset cardinality accepted by [`enumerate_subsets_bestfit`].
pub const MAX_SUBSETS: usize = NUM_TERMS;

const INNER_MIN: f64 = 1e-3;
const INNER_MAX: f64 = 1e2;
const SCAN_POINTS: usize = 41;
const GOLDEN_ITERS: usize = 60;
const SWEEPS: usize = 4;

/// Refit of one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFit {
    pub terms: Vec<TermId>,
    pub weights: ModelWeights,
    pub r_squared: BTreeMap<Condition, f64>,
    pub mean_r_squared: f64,
    /// Mean squared stress error of the refit, kPa².
    pub mse: f64,
}

impl SubsetFit {
    /// Term numbers in braces, e.g. `{1, 11}`.
    pub fn label(&self) -> String {
        let ks: Vec<String> = self.terms.iter().map(|k| k.number().to_string()).collect();
        format!("{{{}}}", ks.join(", "))
    }
}

struct Design {
    coeffs: Vec<StressCoefficients>,
    invs: Vec<InvariantSet>,
    target: DVector<f64>,
}

impl Design {
    fn new(experiments: &[Experiment]) -> Result<Self> {
        let mut coeffs = Vec::new();
        let mut invs = Vec::new();
        let mut target = Vec::new();
        for e in experiments {
            for s in &e.samples {
                coeffs.push(StressCoefficients::for_case(e.mode, e.dir, s.loading));
                invs.push(invariants_for(e.mode, e.dir, s.loading)?);
                target.push(s.stress);
            }
        }
        if target.is_empty() {
            return Err(Error::NoData("no points to fit".into()));
        }
        Ok(Design {
            coeffs,
            invs,
            target: DVector::from_vec(target),
        })
    }

    /// Stress per unit coefficient of term `k`. Identity terms use the
    /// product `w·w*` as coefficient; exponential terms are scaled by `1/θ`
    /// so the coefficient is `w·θ` and `θ → 0` stays well defined.
    fn column(&self, k: TermId, theta: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.invs.len(),
            self.invs.iter().zip(&self.coeffs).map(|(inv, c)| {
                let (b, db) = k.basis(inv);
                let slope = match k.activation() {
                    Activation::Identity => db,
                    Activation::Exp => (theta * b).exp() * db,
                };
                c.0[k.invariant().slot()] * slope
            }),
        )
    }

    fn solve(&self, terms: &[TermId], thetas: &[f64]) -> (f64, DVector<f64>) {
        let n = self.target.len();
        if terms.is_empty() {
            return (self.target.norm_squared() / n as f64, DVector::zeros(0));
        }
        let mut a = DMatrix::zeros(n, terms.len());
        for (j, (&k, &t)) in terms.iter().zip(thetas).enumerate() {
            a.set_column(j, &self.column(k, t));
        }
        let beta = nnls(&a, &self.target);
        let r = &a * &beta - &self.target;
        (r.norm_squared() / n as f64, beta)
    }
}

/// Lawson–Hanson non-negative least squares, `min ‖Ax − b‖` with `x ≥ 0`.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let sub = a.select_columns(&idx);
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        for (i, &j) in idx.iter().enumerate() {
            z[j] = sol[i];
        }
        z
    };

    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let mut step = 1.0f64;
            for i in (0..n).filter(|&i| passive[i] && z[i] <= 0.0) {
                let denom = x[i] - z[i];
                if denom > 0.0 {
                    step = step.min(x[i] / denom);
                }
            }
            x = &x + (z - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn refit(design: &Design, terms: &[TermId]) -> (ModelWeights, f64) {
    let mut thetas = vec![1.0; terms.len()];
    let exp_slots: Vec<usize> = terms
        .iter()
        .enumerate()
        .filter(|(_, k)| k.activation() == Activation::Exp)
        .map(|(i, _)| i)
        .collect();

    let (lmin, lmax) = (INNER_MIN.ln(), INNER_MAX.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lmin + (lmax - lmin) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let sweeps = if exp_slots.len() > 1 { SWEEPS } else { 1 };
    for _ in 0..sweeps {
        for &slot in &exp_slots {
            let objective = |log_theta: f64| {
                let mut t = thetas.clone();
                t[slot] = log_theta.exp();
                design.solve(terms, &t).0
            };
            let (best_i, _) = grid
                .iter()
                .map(|&g| objective(g))
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty grid");
            let lo = grid[best_i.saturating_sub(1)];
            let hi = grid[(best_i + 1).min(SCAN_POINTS - 1)];
            let (arg, _) = golden_min(lo, hi, objective);
            thetas[slot] = arg.exp();
        }
    }

    let (mse, beta) = design.solve(terms, &thetas);
    let mut weights = ModelWeights::zeros();
    for (j, &k) in terms.iter().enumerate() {
        let coef = beta[j];
        if coef <= 0.0 {
            continue;
        }
        match k.activation() {
            Activation::Identity => {
                weights.outer[k.index()] = coef;
                weights.inner[k.index()] = 1.0;
            }
            Activation::Exp => {
                weights.outer[k.index()] = coef / thetas[j];
                weights.inner[k.index()] = thetas[j];
            }
        }
    }
    (weights, mse)
}

/// Unpenalized refit restricted to `terms`.
pub fn fit_subset(experiments: &[Experiment], terms: &[TermId]) -> Result<SubsetFit> {
    let design = Design::new(experiments)?;
    Ok(fit_with(&design, experiments, terms))
}

fn fit_with(design: &Design, experiments: &[Experiment], terms: &[TermId]) -> SubsetFit {
    let (weights, mse) = refit(design, terms);
    let (r_squared, mean_r_squared) = goodness_of_fit(&weights, experiments);
    SubsetFit {
        terms: terms.to_vec(),
        weights,
        r_squared,
        mean_r_squared,
        mse,
    }
}

/// Refits every subset of at most `max_terms` terms and ranks them by mean
/// R² (ties: fewer terms first, then lower term indices).
pub fn enumerate_subsets_bestfit(
    experiments: &[Experiment],
    max_terms: usize,
) -> Result<Vec<SubsetFit>> {
    if max_terms > MAX_SUBSETS {
        return Err(Error::domain(format!(
            "max_terms {max_terms} exceeds the {MAX_SUBSETS}-term catalog"
        )));
    }
    let design = Design::new(experiments)?;
    let masks: Vec<u16> = (0u16..(1 << NUM_TERMS))
        .filter(|m| m.count_ones() as usize <= max_terms)
        .collect();
    let mut fits: Vec<SubsetFit> = masks
        .par_iter()
        .map(|&mask| {
            let terms: Vec<TermId> = TermId::all()
                .filter(|k| mask & (1 << k.index()) != 0)
                .collect();
            fit_with(&design, experiments, &terms)
        })
        .collect();
    fits.sort_by(|a, b| {
        let ra = if a.mean_r_squared.is_nan() {
            f64::NEG_INFINITY
        } else {
            a.mean_r_squared
        };
        let rb = if b.mean_r_squared.is_nan() {
            f64::NEG_INFINITY
        } else {
            b.mean_r_squared
        };
        rb.total_cmp(&ra)
            .then(a.terms.len().cmp(&b.terms.len()))
            .then(a.terms.cmp(&b.terms))
    });
    Ok(fits)
}

/// Highest-ranked subset with exactly `size` terms.
pub fn best_of_size(ranked: &[SubsetFit], size: usize) -> Option<&SubsetFit> {
    ranked.iter().find(|f| f.terms.len() == size)
}
