// Invariants and their derivatives along the six test protocols.

use symmetry_discovery::kinematics::{
    invariant_derivatives, invariants_for, FiberDirection, LoadingMode,
};
use symmetry_discovery::stress::LoadingCase;

fn main() {
    for case in LoadingCase::full_protocol() {
        let inv = invariants_for(case.mode, case.dir, case.loading).expect("protocol state");
        let d = invariant_derivatives(case.mode, case.dir, case.loading).expect("protocol state");
        println!(
            "{:<24} loading {:<4} I1 {:.6} I2 {:.6} I4 {:.6} I5 {:.6} | dI {:.4} {:.4} {:.4} {:.4}",
            case.condition().to_string(),
            case.loading,
            inv.i1,
            inv.i2,
            inv.i4,
            inv.i5,
            d.d_i1,
            d.d_i2,
            d.d_i4,
            d.d_i5
        );
    }

    // the reference state is invariant-free
    let rest = invariants_for(LoadingMode::Shear, FiberDirection::CrossPlane, 0.0).unwrap();
    println!("reference state: {:?}", rest.as_array());
}
