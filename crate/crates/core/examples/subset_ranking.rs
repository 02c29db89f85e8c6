// Exhaustive least-squares ranking of all one- and two-term models.

use symmetry_discovery::dataio::{synthesize, NoiseSpec};
use symmetry_discovery::discovery::{best_of_size, enumerate_subsets_bestfit};
use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::stress::LoadingCase;

fn main() {
    let set = synthesize(
        &ReferenceModel::FruitingBody.weights(),
        &LoadingCase::full_protocol(),
        21,
        NoiseSpec::none(),
    )
    .unwrap();
    let ranked = enumerate_subsets_bestfit(&set.mean_curves(), 2).unwrap();
    for fit in ranked.iter().take(8) {
        println!(
            "{:<10} mean R2 {:.6}  {}",
            fit.label(),
            fit.mean_r_squared,
            fit.weights.formula()
        );
    }
    let best_pair = best_of_size(&ranked, 2).unwrap();
    println!("best pair: {}", best_pair.label());
}
