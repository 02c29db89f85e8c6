// The command-line front end driven in-process: synthesize, fit, predict.

use symmetry_discovery::cli::run;

fn main() {
    let dir = std::env::temp_dir().join("symdisc-cli");
    let data = dir.join("data");
    let data = data.to_str().unwrap();
    for argv in [
        vec![
            "symdisc",
            "synth",
            "--model",
            "protein_mycelium",
            "--out",
            data,
        ],
        vec!["symdisc", "fit", "--data", data],
        vec![
            "symdisc",
            "predict",
            "--model",
            "protein_mycelium",
            "--case",
            "tension:in-plane",
            "--points",
            "3",
        ],
    ] {
        println!("$ {}", argv[1..].join(" "));
        let code = run(argv);
        assert_eq!(code, 0);
    }
}
