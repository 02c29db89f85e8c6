// Stress–loading curves of the mycelium model in both directions, with the
// per-term split of the final point.

use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::stress::{predict_curve, stress_contributions, LoadingCase};

fn main() {
    let model = ReferenceModel::Mycelium.weights();
    for case in LoadingCase::full_protocol() {
        let curve = predict_curve(&model, &case, 6).unwrap();
        let stresses: Vec<String> = curve.iter().map(|s| format!("{:7.3}", s.stress)).collect();
        println!(
            "{:<24} {}",
            case.condition().to_string(),
            stresses.join(" ")
        );
        let parts = stress_contributions(&model, &case).unwrap();
        let active: Vec<String> = parts
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(i, p)| format!("term {}: {:.3}", i + 1, p))
            .collect();
        println!("{:<24} {}", "", active.join(", "));
    }
}
