// The three built-in discovered models: formulas, energies and JSON form.

use symmetry_discovery::energy::{energy, reference_models};
use symmetry_discovery::kinematics::{invariants_for, FiberDirection, LoadingMode};

fn main() {
    let inv = invariants_for(LoadingMode::Tension, FiberDirection::InPlane, 1.1).unwrap();
    for model in reference_models() {
        println!("{:<17} psi = {}", model.name, model.weights.formula());
        println!(
            "{:<17} psi(lambda = 1.1, in-plane) = {:.5} kPa",
            "",
            energy(&model.weights, &inv)
        );
    }
    println!("{}", reference_models()[0].to_json());
}
