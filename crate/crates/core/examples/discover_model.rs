// L1-regularized discovery on noise-free synthetic data of the mycelium
// model.

use symmetry_discovery::dataio::{synthesize, NoiseSpec};
use symmetry_discovery::discovery::{train, TrainingConfig};
use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::stress::LoadingCase;

fn main() {
    let truth = ReferenceModel::Mycelium.weights();
    let set = synthesize(&truth, &LoadingCase::full_protocol(), 21, NoiseSpec::none()).unwrap();
    let found = train(&set.mean_curves(), &TrainingConfig::default()).unwrap();
    println!("truth:      {}", truth.formula());
    println!("discovered: {}", found.weights.formula());
    for (cond, r2) in &found.r_squared {
        println!("  R2 {cond}: {r2:.5}");
    }
    println!(
        "mean R2 {:.5}, final loss {:.5}",
        found.mean_r_squared, found.final_loss
    );
}
