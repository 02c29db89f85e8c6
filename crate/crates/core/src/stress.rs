//! Nominal (Piola) stresses measured in the three tests.
//!
//! Every closed form is linear in the energy gradient, `P = Σ c_i ∂ψ/∂I_i`,
//! with kinematic coefficients `c_i` that depend only on the loading case
//! (see [`StressCoefficients`]). Training and curve decomposition rely on
//! that structure.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_gradient, term_energy_gradient, ModelWeights, TermId, NUM_TERMS};
use crate::error::{Error, Result};
use crate::kinematics::{
    check_loading, gradient_for, invariant_gradients_of_matrix, invariants_for,
    invariants_of_matrix, FiberDirection, InvariantSet, LoadingMode,
};

/// A mode, a fiber direction and a loading value (`λ` or `γ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingCase {
    pub mode: LoadingMode,
    pub dir: FiberDirection,
    pub loading: f64,
}

impl LoadingCase {
    pub fn new(mode: LoadingMode, dir: FiberDirection, loading: f64) -> Result<Self> {
        check_loading(mode, loading)?;
        Ok(LoadingCase { mode, dir, loading })
    }

    /// The case at the end of the standard protocol (`λ = 1.1`, `λ = 0.9`,
    /// `γ = 0.1`).
    pub fn protocol(mode: LoadingMode, dir: FiberDirection) -> Self {
        LoadingCase {
            mode,
            dir,
            loading: mode.protocol_limit(),
        }
    }

    /// All six protocol cases, tension/compression/shear × in/cross-plane.
    pub fn full_protocol() -> Vec<LoadingCase> {
        LoadingMode::ALL
            .iter()
            .flat_map(|&m| {
                FiberDirection::ALL
                    .iter()
                    .map(move |&d| Self::protocol(m, d))
            })
            .collect()
    }

    pub fn condition(&self) -> Condition {
        Condition {
            mode: self.mode,
            dir: self.dir,
        }
    }
}

/// A `(mode, direction)` pair, written `mode:direction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub mode: LoadingMode,
    pub dir: FiberDirection,
}

impl Condition {
    pub fn new(mode: LoadingMode, dir: FiberDirection) -> Self {
        Condition { mode, dir }
    }

    pub fn all() -> Vec<Condition> {
        LoadingMode::ALL
            .iter()
            .flat_map(|&mode| {
                FiberDirection::ALL
                    .iter()
                    .map(move |&dir| Condition { mode, dir })
            })
            .collect()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mode, self.dir)
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, d) = s
            .split_once(':')
            .ok_or_else(|| Error::domain(format!("expected mode:direction, got '{s}'")))?;
        Ok(Condition {
            mode: m.parse()?,
            dir: d.parse()?,
        })
    }
}

/// One point of a stress–loading curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressSample {
    /// `λ` for tension and compression, `γ` for shear.
    pub loading: f64,
    /// Nominal stress in kPa.
    pub stress: f64,
}

/// Kinematic factors `c_i` with `P = Σ c_i ∂ψ/∂I_i` for `I1, I2, I4, I5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressCoefficients(pub [f64; 4]);

impl StressCoefficients {
    pub fn for_case(mode: LoadingMode, dir: FiberDirection, loading: f64) -> Self {
        match mode {
            LoadingMode::Shear => {
                let g = loading;
                match dir {
                    FiberDirection::InPlane => StressCoefficients([2.0 * g, 2.0 * g, 0.0, 2.0 * g]),
                    FiberDirection::CrossPlane => {
                        StressCoefficients([2.0 * g, 2.0 * g, 2.0 * g, 6.0 * g + 4.0 * g * g * g])
                    }
                }
            }
            _ => {
                let l = loading;
                let iso = 2.0 * (l - 1.0 / (l * l));
                match dir {
                    FiberDirection::InPlane => {
                        StressCoefficients([iso, iso / l, 2.0 * l, 4.0 * l * l * l])
                    }
                    // The lateral fiber never enters the axial stress.
                    FiberDirection::CrossPlane => StressCoefficients([iso, iso / l, 0.0, 0.0]),
                }
            }
        }
    }

    #[inline]
    pub fn apply(&self, grad: &[f64; 4]) -> f64 {
        self.0.iter().zip(grad).map(|(c, g)| c * g).sum()
    }
}

fn check_positive_stretch(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!(
            "stretch must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Axial stress `P11` in tension or compression, pressure eliminated through
/// `P22 = P33 = 0`.
pub fn uniaxial_stress(model: &ModelWeights, lambda: f64, dir: FiberDirection) -> Result<f64> {
    check_positive_stretch(lambda)?;
    let inv = invariants_for(LoadingMode::Tension, dir, lambda)?;
    let g = energy_gradient(model, &inv).as_array();
    Ok(StressCoefficients::for_case(LoadingMode::Tension, dir, lambda).apply(&g))
}

/// Shear stress `P12` in simple shear.
pub fn shear_stress(model: &ModelWeights, gamma: f64, dir: FiberDirection) -> Result<f64> {
    check_loading(LoadingMode::Shear, gamma)?;
    let inv = invariants_for(LoadingMode::Shear, dir, gamma)?;
    let g = energy_gradient(model, &inv).as_array();
    Ok(StressCoefficients::for_case(LoadingMode::Shear, dir, gamma).apply(&g))
}

/// Stress of the measured component for any case.
pub fn stress(model: &ModelWeights, case: &LoadingCase) -> Result<f64> {
    match case.mode {
        LoadingMode::Shear => shear_stress(model, case.loading, case.dir),
        _ => uniaxial_stress(model, case.loading, case.dir),
    }
}

/// Lagrange multiplier of the uniaxial test, from `P22 = 0` with the
/// isotropic part of the energy:
/// `p = (2/λ) ∂ψ/∂I1 + 2[λ + 1/λ²] ∂ψ/∂I2`.
///
/// The fiber terms of in-plane samples do not act on the lateral faces, so
/// the same multiplier holds for anisotropic in-plane models.
pub fn pressure(model: &ModelWeights, lambda: f64) -> Result<f64> {
    check_positive_stretch(lambda)?;
    let inv = invariants_for(LoadingMode::Tension, FiberDirection::InPlane, lambda)?;
    let g = energy_gradient(model, &inv);
    Ok(2.0 / lambda * g.d_i1 + 2.0 * (lambda + 1.0 / (lambda * lambda)) * g.d_i2)
}

/// Per-term split of the measured stress. The entries sum to [`stress`].
pub fn stress_contributions(model: &ModelWeights, case: &LoadingCase) -> Result<[f64; NUM_TERMS]> {
    check_loading(case.mode, case.loading)?;
    let inv = invariants_for(case.mode, case.dir, case.loading)?;
    let coeffs = StressCoefficients::for_case(case.mode, case.dir, case.loading);
    let mut out = [0.0; NUM_TERMS];
    for k in TermId::all() {
        if model.outer(k) != 0.0 {
            let g = term_energy_gradient(model, k, &inv).as_array();
            out[k.index()] = coeffs.apply(&g);
        }
    }
    Ok(out)
}

/// Full Piola tensor `P = Σ ∂ψ/∂I_i ∂I_i/∂F − p F⁻ᵗ` for an arbitrary `F`.
pub fn piola_tensor(
    model: &ModelWeights,
    f: &Matrix3<f64>,
    dir: FiberDirection,
    pressure: f64,
) -> Result<Matrix3<f64>> {
    let n0 = dir.unit_vector();
    let inv = invariants_of_matrix(f, &n0);
    let g = energy_gradient(model, &inv).as_array();
    let d_inv = invariant_gradients_of_matrix(f, &n0);
    let f_inv_t = f
        .try_inverse()
        .ok_or_else(|| Error::domain("deformation gradient is singular"))?
        .transpose();
    let mut p = -pressure * f_inv_t;
    for (gi, di) in g.iter().zip(d_inv.iter()) {
        p += *gi * di;
    }
    Ok(p)
}

/// Full Piola tensor of a test state. Uniaxial cases use [`pressure`]; in
/// shear the multiplier is fixed by `P33 = 0`, which leaves `P12` untouched
/// since `(F⁻ᵗ)12 = 0`.
pub fn piola_tensor_for_case(model: &ModelWeights, case: &LoadingCase) -> Result<Matrix3<f64>> {
    let f = gradient_for(case.mode, case.loading)?;
    let p = match case.mode {
        LoadingMode::Shear => {
            let inv = invariants_for(case.mode, case.dir, case.loading)?;
            let g = energy_gradient(model, &inv);
            2.0 * g.d_i1 + 2.0 * (inv.i1 - 1.0) * g.d_i2
        }
        _ => pressure(model, case.loading)?,
    };
    piola_tensor(model, f.matrix(), case.dir, p)
}

/// Inclusive uniform grid from the reference state to `case.loading`.
pub fn loading_grid(case: &LoadingCase, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::domain(format!(
            "a curve needs at least 2 points, got {n_points}"
        )));
    }
    check_loading(case.mode, case.loading)?;
    let start = case.mode.reference_loading();
    let step = (case.loading - start) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                case.loading
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

/// Stress–loading curve of `model` on [`loading_grid`].
pub fn predict_curve(
    model: &ModelWeights,
    case: &LoadingCase,
    n_points: usize,
) -> Result<Vec<StressSample>> {
    loading_grid(case, n_points)?
        .into_iter()
        .map(|loading| {
            let c = LoadingCase { loading, ..*case };
            Ok(StressSample {
                loading,
                stress: stress(model, &c)?,
            })
        })
        .collect()
}

/// Invariants for a case; convenience re-export for callers that already
/// hold a [`LoadingCase`].
pub fn case_invariants(case: &LoadingCase) -> Result<InvariantSet> {
    invariants_for(case.mode, case.dir, case.loading)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::ReferenceModel;
    use approx::assert_abs_diff_eq;

    fn mycelium() -> ModelWeights {
        ReferenceModel::Mycelium.weights()
    }

    #[test]
    fn reference_state_is_stress_free() {
        for m in ReferenceModel::ALL {
            for dir in FiberDirection::ALL {
                assert_eq!(uniaxial_stress(&m.weights(), 1.0, dir).unwrap(), 0.0);
                assert_eq!(shear_stress(&m.weights(), 0.0, dir).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn mycelium_tension_values() {
        let inp = uniaxial_stress(&mycelium(), 1.1, FiberDirection::InPlane).unwrap();
        assert_abs_diff_eq!(inp, 10.865, epsilon = 1e-3);
        let crs = uniaxial_stress(&mycelium(), 1.1, FiberDirection::CrossPlane).unwrap();
        assert_abs_diff_eq!(crs, 2.775, epsilon = 1e-3);
        assert!(uniaxial_stress(&mycelium(), 0.0, FiberDirection::InPlane).is_err());
    }

    #[test]
    fn shear_values() {
        let pm = ReferenceModel::ProteinMycelium.weights();
        for dir in FiberDirection::ALL {
            let s = shear_stress(&pm, 0.1, dir).unwrap();
            assert_abs_diff_eq!(s, 2.0 * 0.1 * 3.4689 * 4.1216, epsilon = 1e-12);
            assert_abs_diff_eq!(s, 2.8595, epsilon = 1e-4);
        }
        let s = shear_stress(&mycelium(), 0.1, FiberDirection::InPlane).unwrap();
        assert_abs_diff_eq!(s, 1.0210, epsilon = 1e-4);
        assert!(shear_stress(&mycelium(), -0.1, FiberDirection::InPlane).is_err());
    }

    #[test]
    fn pressure_values() {
        let pm = ReferenceModel::ProteinMycelium.weights();
        assert_abs_diff_eq!(pressure(&pm, 1.1).unwrap(), 25.995, epsilon = 1e-3);
        assert_abs_diff_eq!(
            pressure(&pm, 1.0).unwrap(),
            2.0 * 3.4689 * 4.1216,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lateral_faces_are_traction_free() {
        let iso = ModelWeights::zeros()
            .with_term(1, 1.3, 2.0)
            .unwrap()
            .with_term(6, 0.8, 3.0)
            .unwrap();
        let case = LoadingCase::new(LoadingMode::Tension, FiberDirection::InPlane, 1.05).unwrap();
        let p = piola_tensor_for_case(&iso, &case).unwrap();
        assert!(p[(1, 1)].abs() < 1e-9);
        assert!(p[(2, 2)].abs() < 1e-9);
        assert_abs_diff_eq!(p[(0, 0)], stress(&iso, &case).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn curve_examples() {
        let pm = ReferenceModel::ProteinMycelium.weights();
        let case = LoadingCase::protocol(LoadingMode::Tension, FiberDirection::InPlane);
        let curve = predict_curve(&pm, &case, 3).unwrap();
        let loads: Vec<f64> = curve.iter().map(|s| s.loading).collect();
        assert_eq!(loads, vec![1.0, 1.05, 1.1]);
        assert_eq!(curve[0].stress, 0.0);
        let c1 = 2.0 * 3.4689 * 4.1216;
        assert_abs_diff_eq!(curve[1].stress, c1 * (1.05 - 1.0 / 1.1025), epsilon = 1e-12);
        assert_abs_diff_eq!(curve[1].stress, 4.0882, epsilon = 1e-4);
        assert_abs_diff_eq!(curve[2].stress, 7.8222, epsilon = 1e-4);

        let flat = LoadingCase::new(LoadingMode::Shear, FiberDirection::InPlane, 0.0).unwrap();
        assert!(predict_curve(&mycelium(), &flat, 4)
            .unwrap()
            .iter()
            .all(|s| s.stress == 0.0));
        assert!(predict_curve(&pm, &case, 1).is_err());
    }

    #[test]
    fn fiber_terms_stiffen_in_plane_tension() {
        let inp = predict_curve(
            &mycelium(),
            &LoadingCase::protocol(LoadingMode::Tension, FiberDirection::InPlane),
            21,
        )
        .unwrap();
        let crs = predict_curve(
            &mycelium(),
            &LoadingCase::protocol(LoadingMode::Tension, FiberDirection::CrossPlane),
            21,
        )
        .unwrap();
        for (a, b) in inp.iter().zip(&crs) {
            assert!(a.stress >= b.stress);
        }
    }

    #[test]
    fn contributions_sum_to_total() {
        for case in LoadingCase::full_protocol() {
            let m = ModelWeights::uniform(0.7);
            let parts = stress_contributions(&m, &case).unwrap();
            let total = stress(&m, &case).unwrap();
            assert_abs_diff_eq!(parts.iter().sum::<f64>(), total, epsilon = 1e-12);
        }
    }

    #[test]
    fn condition_parsing() {
        let c: Condition = "tension:in-plane".parse().unwrap();
        assert_eq!(
            c,
            Condition::new(LoadingMode::Tension, FiberDirection::InPlane)
        );
        assert_eq!(c.to_string(), "tension:in-plane");
        assert!("tension".parse::<Condition>().is_err());
        assert_eq!(Condition::all().len(), 6);
    }
}
