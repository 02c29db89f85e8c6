//! Sparse, invariant-based hyperelastic model discovery for soft fibrous
//! materials, with stiffness regression and Welch statistics to classify
//! their effective symmetry.

pub mod analysis;
pub mod cli;
pub mod dataio;
pub mod discovery;
pub mod energy;
pub mod error;
pub mod kinematics;
pub mod plot;
pub mod stress;

pub use error::{Error, Result};
