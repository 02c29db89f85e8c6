// Replicated virtual test series written to and read back from CSV.

use symmetry_discovery::dataio::{load_csv, synthesize_replicates, write_csv, NoiseSpec};
use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::stress::LoadingCase;

fn main() {
    let set = synthesize_replicates(
        "fruiting_body",
        &ReferenceModel::FruitingBody.weights(),
        &LoadingCase::full_protocol(),
        11,
        5,
        0.1,
        NoiseSpec::new(0.02, 7).unwrap(),
    )
    .unwrap();
    let dir = std::env::temp_dir().join("symdisc-virtual-lab");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("data.csv");
    write_csv(&set, &path).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back, set);
    println!(
        "{} samples in {} mean curves and {} replicate curves, written to {}",
        back.num_samples(),
        back.means.len(),
        back.replicates.values().map(Vec::len).sum::<usize>(),
        path.display()
    );
}
