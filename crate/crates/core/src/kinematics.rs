//! Incompressible kinematics of the uniaxial and simple-shear tests.
//!
//! The loading axis is `e1`. In-plane samples carry the fiber along `e1`,
//! cross-plane samples along `e2`. With that convention the closed forms in
//! this module agree with the general matrix evaluation in
//! [`invariants_from_gradient`], which is kept in the public API so arbitrary
//! gradients can be evaluated as well.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `det F - 1` accepted by [`invariants_from_gradient`].
pub const DET_TOLERANCE: f64 = 1e-9;

/// Loading mode of a mechanical test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingMode {
    Tension,
    Compression,
    Shear,
}

impl LoadingMode {
    pub const ALL: [LoadingMode; 3] = [
        LoadingMode::Tension,
        LoadingMode::Compression,
        LoadingMode::Shear,
    ];

    pub fn is_uniaxial(self) -> bool {
        !matches!(self, LoadingMode::Shear)
    }

    /// Loading value of the undeformed state: `λ = 1` or `γ = 0`.
    pub fn reference_loading(self) -> f64 {
        match self {
            LoadingMode::Shear => 0.0,
            _ => 1.0,
        }
    }

    /// Loading value at the end of the test protocol.
    pub fn protocol_limit(self) -> f64 {
        match self {
            LoadingMode::Tension => 1.1,
            LoadingMode::Compression => 0.9,
            LoadingMode::Shear => 0.1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoadingMode::Tension => "tension",
            LoadingMode::Compression => "compression",
            LoadingMode::Shear => "shear",
        }
    }
}

impl fmt::Display for LoadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LoadingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tension" | "ten" => Ok(LoadingMode::Tension),
            "compression" | "com" => Ok(LoadingMode::Compression),
            "shear" | "shr" => Ok(LoadingMode::Shear),
            other => Err(Error::domain(format!("unknown loading mode '{other}'"))),
        }
    }
}

/// Orientation of the sample relative to its dominant structural plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberDirection {
    InPlane,
    CrossPlane,
}

impl FiberDirection {
    pub const ALL: [FiberDirection; 2] = [FiberDirection::InPlane, FiberDirection::CrossPlane];

    /// Unit fiber vector `n0` in the test frame.
    pub fn unit_vector(self) -> Vector3<f64> {
        match self {
            FiberDirection::InPlane => Vector3::x(),
            FiberDirection::CrossPlane => Vector3::y(),
        }
    }

    /// Structural tensor `N = n0 ⊗ n0`.
    pub fn structural_tensor(self) -> Matrix3<f64> {
        let n = self.unit_vector();
        n * n.transpose()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FiberDirection::InPlane => "in-plane",
            FiberDirection::CrossPlane => "cross-plane",
        }
    }
}

impl fmt::Display for FiberDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FiberDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "in-plane" | "inplane" | "in" | "parallel" => Ok(FiberDirection::InPlane),
            "cross-plane" | "crossplane" | "cross" | "perpendicular" => {
                Ok(FiberDirection::CrossPlane)
            }
            other => Err(Error::domain(format!("unknown fiber direction '{other}'"))),
        }
    }
}

/// Deformation gradient `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationGradient(Matrix3<f64>);

impl DeformationGradient {
    pub fn identity() -> Self {
        DeformationGradient(Matrix3::identity())
    }

    /// Wraps an arbitrary matrix. No incompressibility check is made here;
    /// [`invariants_from_gradient`] enforces it.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        DeformationGradient(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

/// Values of `I1, I2, I4, I5` at one state. `I3` is identically one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub i1: f64,
    pub i2: f64,
    pub i4: f64,
    pub i5: f64,
}

impl InvariantSet {
    pub const REFERENCE: InvariantSet = InvariantSet {
        i1: 3.0,
        i2: 3.0,
        i4: 1.0,
        i5: 1.0,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.i1, self.i2, self.i4, self.i5]
    }

    pub fn max_abs_diff(&self, other: &InvariantSet) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Derivatives of the invariants with respect to the loaded component of `F`
/// (`F11` in tension and compression, `F12` in shear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantDerivatives {
    pub d_i1: f64,
    pub d_i2: f64,
    pub d_i4: f64,
    pub d_i5: f64,
}

impl InvariantDerivatives {
    pub fn as_array(&self) -> [f64; 4] {
        [self.d_i1, self.d_i2, self.d_i4, self.d_i5]
    }
}

fn check_stretch(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!(
            "stretch must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

fn check_shear(gamma: f64) -> Result<()> {
    if !gamma.is_finite() {
        return Err(Error::domain(format!(
            "shear strain must be finite, got {gamma}"
        )));
    }
    Ok(())
}

/// `diag(λ, 1/√λ, 1/√λ)`. Compression is the same gradient with `λ < 1`.
pub fn uniaxial_gradient(lambda: f64) -> Result<DeformationGradient> {
    check_stretch(lambda)?;
    let lateral = 1.0 / lambda.sqrt();
    Ok(DeformationGradient(Matrix3::from_diagonal(&Vector3::new(
        lambda, lateral, lateral,
    ))))
}

/// Identity plus `γ` in entry (1,2).
pub fn shear_gradient(gamma: f64) -> Result<DeformationGradient> {
    check_shear(gamma)?;
    let mut m = Matrix3::identity();
    m[(0, 1)] = gamma;
    Ok(DeformationGradient(m))
}

/// Invariants of an arbitrary matrix `F` for the fiber vector `n0`, without
/// any incompressibility check.
///
/// `I1 = F:F`, `I2 = ½[I1² − C:C]`, `I4 = C:N`, `I5 = C²:N` with `C = FᵗF`.
pub fn invariants_of_matrix(f: &Matrix3<f64>, n0: &Vector3<f64>) -> InvariantSet {
    let c = f.transpose() * f;
    let i1 = f.component_mul(f).sum();
    let i2 = 0.5 * (i1 * i1 - c.component_mul(&c).sum());
    let cn = c * n0;
    let i4 = n0.dot(&cn);
    let i5 = cn.dot(&cn);
    InvariantSet { i1, i2, i4, i5 }
}

/// Gradients `∂I/∂F` of `I1, I2, I4, I5` for an arbitrary matrix `F`.
pub fn invariant_gradients_of_matrix(f: &Matrix3<f64>, n0: &Vector3<f64>) -> [Matrix3<f64>; 4] {
    let c = f.transpose() * f;
    let n = n0 * n0.transpose();
    let i1 = f.component_mul(f).sum();
    [
        2.0 * f,
        2.0 * (i1 * f - f * c),
        2.0 * f * n,
        2.0 * f * (n * c + c * n),
    ]
}

/// General-purpose evaluation of the invariants from `F`.
///
/// Fails when `|det F − 1|` exceeds [`DET_TOLERANCE`].
pub fn invariants_from_gradient(
    f: &DeformationGradient,
    dir: FiberDirection,
) -> Result<InvariantSet> {
    let det = f.determinant();
    if det.is_nan() || (det - 1.0).abs() > DET_TOLERANCE {
        return Err(Error::Precondition(format!(
            "deformation gradient is not isochoric: det F = {det}"
        )));
    }
    Ok(invariants_of_matrix(f.matrix(), &dir.unit_vector()))
}

/// Closed-form invariants in tension and compression.
pub fn invariants_uniaxial(lambda: f64, dir: FiberDirection) -> Result<InvariantSet> {
    check_stretch(lambda)?;
    let i1 = lambda * lambda + 2.0 / lambda;
    let i2 = 2.0 * lambda + 1.0 / (lambda * lambda);
    let (i4, i5) = match dir {
        FiberDirection::InPlane => {
            let l2 = lambda * lambda;
            (l2, l2 * l2)
        }
        FiberDirection::CrossPlane => (1.0 / lambda, 1.0 / (lambda * lambda)),
    };
    Ok(InvariantSet { i1, i2, i4, i5 })
}

/// Closed-form invariants in simple shear.
pub fn invariants_shear(gamma: f64, dir: FiberDirection) -> Result<InvariantSet> {
    check_shear(gamma)?;
    let g2 = gamma * gamma;
    let (i4, i5) = match dir {
        FiberDirection::InPlane => (1.0, 1.0 + g2),
        FiberDirection::CrossPlane => ((1.0 + g2), (1.0 + g2) * (1.0 + g2) + g2),
    };
    Ok(InvariantSet {
        i1: 3.0 + g2,
        i2: 3.0 + g2,
        i4,
        i5,
    })
}

/// Closed-form invariants for any mode.
pub fn invariants_for(
    mode: LoadingMode,
    dir: FiberDirection,
    loading: f64,
) -> Result<InvariantSet> {
    match mode {
        LoadingMode::Shear => invariants_shear(loading, dir),
        _ => invariants_uniaxial(loading, dir),
    }
}

/// Deformation gradient for any mode.
pub fn gradient_for(mode: LoadingMode, loading: f64) -> Result<DeformationGradient> {
    match mode {
        LoadingMode::Shear => shear_gradient(loading),
        _ => uniaxial_gradient(loading),
    }
}

/// Checks that a loading value is admissible for its mode: tension needs
/// `λ ≥ 1`, compression `0 < λ ≤ 1`, shear `γ ≥ 0`.
pub fn check_loading(mode: LoadingMode, loading: f64) -> Result<()> {
    let ok = loading.is_finite()
        && match mode {
            LoadingMode::Tension => loading >= 1.0,
            LoadingMode::Compression => loading > 0.0 && loading <= 1.0,
            LoadingMode::Shear => loading >= 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "loading value {loading} is not admissible for {mode}"
        )))
    }
}

/// Derivatives of the invariants along the loaded component of `F`.
pub fn invariant_derivatives(
    mode: LoadingMode,
    dir: FiberDirection,
    loading: f64,
) -> Result<InvariantDerivatives> {
    check_loading(mode, loading)?;
    Ok(match (mode, dir) {
        (LoadingMode::Shear, dir) => {
            let g = loading;
            let (d_i4, d_i5) = match dir {
                FiberDirection::InPlane => (0.0, 2.0 * g),
                FiberDirection::CrossPlane => (2.0 * g, 6.0 * g + 4.0 * g * g * g),
            };
            InvariantDerivatives {
                d_i1: 2.0 * g,
                d_i2: 2.0 * g,
                d_i4,
                d_i5,
            }
        }
        (_, FiberDirection::InPlane) => {
            let l = loading;
            InvariantDerivatives {
                d_i1: 2.0 * l,
                d_i2: 4.0,
                d_i4: 2.0 * l,
                d_i5: 4.0 * l * l * l,
            }
        }
        (_, FiberDirection::CrossPlane) => InvariantDerivatives {
            d_i1: 2.0 * loading,
            d_i2: 4.0,
            d_i4: 0.0,
            d_i5: 0.0,
        },
    })
}
