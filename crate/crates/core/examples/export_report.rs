// Full report directory for a replicated dataset: data, model curves with
// term decomposition, stiffness tables and an SVG chart.

use symmetry_discovery::dataio::{export_reports, synthesize_replicates, NoiseSpec};
use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::kinematics::{FiberDirection, LoadingMode};
use symmetry_discovery::plot::decomposition_svg;
use symmetry_discovery::stress::{loading_grid, Condition, LoadingCase};

fn main() {
    let model = ReferenceModel::Mycelium.model();
    let set = synthesize_replicates(
        "mycelium",
        &model.weights,
        &LoadingCase::full_protocol(),
        11,
        6,
        0.15,
        NoiseSpec::new(0.02, 11).unwrap(),
    )
    .unwrap();
    let out = std::env::temp_dir().join("symdisc-report");
    let files = export_reports(&set, Some(&model), None, &out).unwrap();

    let cond = Condition::new(LoadingMode::Tension, FiberDirection::InPlane);
    let grid = loading_grid(&LoadingCase::protocol(cond.mode, cond.dir), 41).unwrap();
    let svg = decomposition_svg(&model.weights, cond, &grid, set.mean(cond)).unwrap();
    let svg_path = out.join("tension_in-plane.svg");
    std::fs::write(&svg_path, svg).unwrap();

    for f in files.files.iter().chain([&svg_path]) {
        println!("{}", f.display());
    }
}
