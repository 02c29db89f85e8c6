// Per-sample stiffnesses of replicated mycelium data and the Welch
// comparison of the two directions.

use symmetry_discovery::analysis::{analyze_set, welch_t_test};
use symmetry_discovery::dataio::{synthesize_replicates, NoiseSpec};
use symmetry_discovery::energy::ReferenceModel;
use symmetry_discovery::stress::LoadingCase;

fn main() {
    let set = synthesize_replicates(
        "mycelium",
        &ReferenceModel::Mycelium.weights(),
        &LoadingCase::full_protocol(),
        11,
        10,
        0.2,
        NoiseSpec::new(0.02, 3).unwrap(),
    )
    .unwrap();
    let (summaries, report) = analyze_set(&set).unwrap();
    for s in summaries.iter().take(3) {
        println!(
            "{} #{}: E_ten {:.1} E_com {:.1} E_shr {:.1} E_mean {:.1} kPa",
            s.direction, s.replicate, s.e_ten, s.e_com, s.e_shr, s.e_mean
        );
    }
    for row in &report.rows {
        println!(
            "{:<6} {:8.2} vs {:8.2} kPa  t {:7.3}  df {:5.2}  p {:.2e} {}",
            row.attribute.label(),
            row.in_plane_mean,
            row.cross_plane_mean,
            row.welch.t,
            row.welch.df,
            row.welch.p,
            row.welch.stars()
        );
    }
    println!("classification: {}", report.symmetry);

    let small = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    println!(
        "textbook case: t {:.4} df {:.1} p {:.4}",
        small.t, small.df, small.p
    );
}
