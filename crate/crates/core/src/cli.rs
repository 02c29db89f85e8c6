//! Command-line front end.
//!
//! Every subcommand that writes files also writes `manifest.json` next to
//! them, recording the arguments, the effective configuration and a
//! fingerprint of every input and output file. Nothing time- or
//! host-dependent is recorded, so identical invocations give identical
//! manifests.
//!
//! Failures print one line, `error: <Class>: <message>`, on stderr and exit
//! with 2 (usage), 3 (validation or missing data), 4 (numeric failure) or
//! 5 (I/O).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{analyze_set, curve_stiffness, Attribute};
use crate::dataio::{
    export_reports, load_csv_with, synthesize_named, synthesize_replicates, write_curve,
    write_curve_csv, ExperimentSet, LoadOptions, NoiseSpec,
};
use crate::discovery::{
    enumerate_subsets_bestfit, train_and_evaluate, FitReport, TrainingConfig, MAX_SUBSETS,
};
use crate::energy::{NamedModel, ReferenceModel, SCHEMA_VERSION};
use crate::error::Error;
use crate::kinematics::FiberDirection;
use crate::plot::decomposition_svg;
use crate::stress::{loading_grid, Condition, LoadingCase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 5;

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "symdisc",
    version,
    about = "Discover hyperelastic models and effective symmetry from tension, compression and shear data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a virtual test series from a model.
    Synth(SynthArgs),
    /// Discover a sparse model from data.
    Fit(FitArgs),
    /// Evaluate a model along one loading case.
    Predict(PredictArgs),
    /// Small-strain stiffnesses and the in-plane/cross-plane comparison.
    Stiffness(StiffnessArgs),
    /// Rank every term subset by least-squares goodness of fit.
    Subsets(SubsetsArgs),
    /// Export data, model curves, fit and stiffness reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Built-in model name (mycelium, fruiting_body, protein_mycelium) or model JSON file.
    #[arg(long)]
    model: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Points per loading curve.
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Relative standard deviation of multiplicative stress noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed for noise and replicate scatter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replicates per condition; 0 writes mean curves only.
    #[arg(long, default_value_t = 0)]
    replicates: usize,
    /// Relative sample-to-sample stiffness scatter of replicates.
    #[arg(long, default_value_t = 0.15)]
    scatter: f64,
    /// Also write SVG charts of the model curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset CSV, or a directory containing data.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Accept loadings outside the test protocol bounds.
    #[arg(long)]
    permissive: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output directory [default: <data directory>/fit].
    #[arg(long)]
    out: Option<PathBuf>,
    /// L1 penalty on the outer weights.
    #[arg(long, default_value_t = TrainingConfig::default().alpha)]
    alpha: f64,
    /// Adam iterations.
    #[arg(long, default_value_t = TrainingConfig::default().epochs)]
    epochs: usize,
    /// Adam step size.
    #[arg(long, default_value_t = TrainingConfig::default().learning_rate)]
    learning_rate: f64,
    /// Outer weights below this value (kPa) are zeroed.
    #[arg(long, default_value_t = TrainingConfig::default().threshold)]
    threshold: f64,
    /// Seed for the optional restarts.
    #[arg(long, default_value_t = TrainingConfig::default().seed)]
    seed: u64,
    /// Extra randomly perturbed training runs.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Train on these conditions only, e.g. tension:in-plane,shear:cross-plane.
    #[arg(long, value_delimiter = ',')]
    train: Vec<Condition>,
    /// Name stored in the discovered model.
    #[arg(long, default_value = "discovered")]
    name: String,
    /// Also write SVG charts of the fitted curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Built-in model name or model JSON file.
    #[arg(long)]
    model: String,
    /// Loading case as mode:direction.
    #[arg(long)]
    case: Condition,
    /// Points on the curve, reference state included.
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Also write the curve (and manifest) into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// With --out, also write an SVG chart.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct StiffnessArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write stiffness.csv, stiffness.json and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SubsetsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Largest subset size.
    #[arg(long, default_value_t = 2)]
    max_terms: usize,
    /// Rows printed.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Also write the full ranking as subsets.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model to decompose: built-in name or model JSON file.
    #[arg(long)]
    model: Option<String>,
    /// Fit report JSON to include.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write SVG charts of the model curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Lib(e) => exit_code(e),
        }
    }

    fn line(&self) -> String {
        let (class, msg) = match self {
            Failure::Usage(m) => ("Usage", m.clone()),
            Failure::Lib(e) => (e.class(), e.to_string()),
        };
        format!("error: {class}: {}", msg.replace(['\n', '\r'], " "))
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation { .. } | Error::NoData(_) | Error::Json { .. } => EXIT_VALIDATION,
        Error::Domain(_)
        | Error::Precondition(_)
        | Error::Undefined(_)
        | Error::Training { .. } => EXIT_NUMERIC,
        Error::Io { .. } | Error::Csv { .. } => EXIT_IO,
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", Failure::Usage(first.to_string()).line());
            return EXIT_USAGE;
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match cli.command {
        Command::Synth(a) => synth(a, &args),
        Command::Fit(a) => fit(a, &args),
        Command::Predict(a) => predict(a, &args),
        Command::Stiffness(a) => stiffness(a, &args),
        Command::Subsets(a) => subsets(a, &args),
        Command::Report(a) => report(a, &args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{}", f.line());
            f.code()
        }
    }
}

/// FNV-1a of a file's bytes.
fn file_fingerprint(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

struct Manifest {
    command: &'static str,
    args: Vec<String>,
    inputs: Vec<PathBuf>,
    config: Value,
}

impl Manifest {
    fn new(command: &'static str, args: &[String]) -> Self {
        Manifest {
            command,
            args: args.to_vec(),
            inputs: Vec::new(),
            config: Value::Null,
        }
    }

    fn write(&self, out_dir: &Path, outputs: &[PathBuf]) -> CliResult<()> {
        let entry = |p: &PathBuf, name: String| -> CliResult<Value> {
            Ok(json!({ "path": name, "fnv1a": file_fingerprint(p)? }))
        };
        let inputs = self
            .inputs
            .iter()
            .map(|p| entry(p, p.display().to_string()))
            .collect::<CliResult<Vec<_>>>()?;
        let mut names: Vec<(String, &PathBuf)> = outputs
            .iter()
            .map(|p| {
                let name = p.strip_prefix(out_dir).unwrap_or(p).display().to_string();
                (name, p)
            })
            .collect();
        names.sort();
        let outputs = names
            .into_iter()
            .map(|(n, p)| entry(p, n))
            .collect::<CliResult<Vec<_>>>()?;
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "args": self.args,
            "config": self.config,
            "inputs": inputs,
            "outputs": outputs,
        });
        let path = out_dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
        Ok(())
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Failure::Lib(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| {
        Failure::Lib(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Resolves a built-in model name or a model JSON path.
fn resolve_model(spec: &str, manifest: &mut Manifest) -> CliResult<NamedModel> {
    if let Some(r) = ReferenceModel::from_name(spec) {
        return Ok(r.model());
    }
    let path = PathBuf::from(spec);
    if !path.exists() {
        return Err(Failure::Usage(format!(
            "'{spec}' is neither a built-in model (mycelium, fruiting_body, protein_mycelium) nor an existing file"
        )));
    }
    manifest.inputs.push(path.clone());
    Ok(NamedModel::load(&path)?)
}

/// Resolves `--data` to a CSV file. A missing flag, a missing directory or a
/// directory without `data.csv` all mean there is no data to work on.
fn resolve_data(args: &DataArgs) -> CliResult<PathBuf> {
    let Some(path) = &args.data else {
        return Err(Error::NoData("no --data given".into()).into());
    };
    let file = if path.is_dir() {
        path.join("data.csv")
    } else {
        path.clone()
    };
    if !file.is_file() {
        return Err(Error::NoData(format!("no data file at {}", file.display())).into());
    }
    Ok(file)
}

fn load_data(args: &DataArgs, manifest: &mut Manifest) -> CliResult<ExperimentSet> {
    let file = resolve_data(args)?;
    let opts = LoadOptions {
        permissive: args.permissive,
        ..LoadOptions::default()
    };
    let set = load_csv_with(&file, &opts)?;
    manifest.inputs.push(file);
    Ok(set)
}

fn write_svgs(
    set: &ExperimentSet,
    model: &NamedModel,
    out: &Path,
    outputs: &mut Vec<PathBuf>,
) -> CliResult<()> {
    for (cond, exp) in &set.means {
        let case = LoadingCase::protocol(cond.mode, cond.dir);
        let mut grid = loading_grid(&case, 41)?;
        for l in exp.loadings() {
            grid.push(l);
        }
        grid.sort_by(|a, b| {
            let (a, b) = if cond.mode == crate::kinematics::LoadingMode::Compression {
                (b, a)
            } else {
                (a, b)
            };
            a.total_cmp(b)
        });
        grid.dedup();
        let svg = decomposition_svg(&model.weights, *cond, &grid, Some(exp))?;
        let path = out.join(format!(
            "curve_{}_{}.svg",
            cond.mode.as_str(),
            cond.dir.as_str()
        ));
        write_file(&path, &svg)?;
        outputs.push(path);
    }
    Ok(())
}

fn synth(a: SynthArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("synth", args);
    let model = resolve_model(&a.model, &mut manifest)?;
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let noise = NoiseSpec::new(a.noise, a.seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let protocol = LoadingCase::full_protocol();
    let set = if a.replicates == 0 {
        synthesize_named(&model.name, &model.weights, &protocol, a.points, noise)?
    } else {
        synthesize_replicates(
            &model.name,
            &model.weights,
            &protocol,
            a.points,
            a.replicates,
            a.scatter,
            noise,
        )?
    };
    manifest.config = json!({
        "model": model.name,
        "points": a.points,
        "noise": a.noise,
        "seed": a.seed,
        "replicates": a.replicates,
        "scatter": a.scatter,
    });
    let mut outputs = export_reports(&set, Some(&model), None, &a.out)?.files;
    if a.svg {
        write_svgs(&set, &model, &a.out, &mut outputs)?;
    }
    manifest.write(&a.out, &outputs)?;
    println!(
        "wrote {} curves ({} samples) of '{}' to {}",
        set.means.len() + set.replicates.values().map(Vec::len).sum::<usize>(),
        set.num_samples(),
        model.name,
        a.out.display()
    );
    Ok(())
}

fn fit(a: FitArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("fit", args);
    let config = TrainingConfig {
        alpha: a.alpha,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        threshold: a.threshold,
        seed: a.seed,
        restarts: a.restarts,
        ..TrainingConfig::default()
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let set = load_data(&a.data, &mut manifest)?;
    let out = match &a.out {
        Some(o) => o.clone(),
        None => {
            let data = a.data.data.as_ref().expect("resolved above");
            let base = if data.is_dir() {
                data.clone()
            } else {
                data.parent().map(Path::to_path_buf).unwrap_or_default()
            };
            base.join("fit")
        }
    };
    let evaluate = set.mean_curves();
    let train_on = if a.train.is_empty() {
        evaluate.clone()
    } else {
        let selected = set.select(&a.train);
        if selected.len() != a.train.len() {
            return Err(
                Error::NoData("a --train condition has no mean curve in the data".into()).into(),
            );
        }
        selected
    };
    let discovered = train_and_evaluate(&train_on, &evaluate, &config)?;
    let named = discovered.named(&a.name);
    let fit_report = discovered.report(&a.name);
    manifest.config = serde_json::to_value(config).expect("config serializes");

    create_dir(&out)?;
    let mut outputs = Vec::new();
    let model_path = out.join("model.json");
    named.save(&model_path)?;
    outputs.push(model_path);
    let report_path = out.join("fit_report.json");
    write_file(&report_path, &fit_report.to_json())?;
    outputs.push(report_path);
    for (cond, exp) in &set.means {
        let path = out.join(format!(
            "curve_{}_{}.csv",
            cond.mode.as_str(),
            cond.dir.as_str()
        ));
        write_curve_csv(
            &path,
            &named.weights,
            *cond,
            &exp.loadings().collect::<Vec<_>>(),
        )?;
        outputs.push(path);
    }
    if a.svg {
        write_svgs(&set, &named, &out, &mut outputs)?;
    }
    manifest.write(&out, &outputs)?;

    println!("model: {}", fit_report.formula);
    println!(
        "active terms: {{{}}}",
        fit_report
            .active_terms
            .iter()
            .map(|k| k.number().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    for (c, r2) in &discovered.r_squared {
        println!("R2 {c}: {r2:.4}");
    }
    println!("mean R2: {:.4}", fit_report.mean_r_squared);
    println!("wrote {}", out.display());
    Ok(())
}

fn predict(a: PredictArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("predict", args);
    let model = resolve_model(&a.model, &mut manifest)?;
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let case = LoadingCase::protocol(a.case.mode, a.case.dir);
    let grid = loading_grid(&case, a.points)?;
    let Some(dir) = a.out.clone() else {
        write_curve(std::io::stdout().lock(), &model.weights, a.case, &grid)?;
        return Ok(());
    };
    create_dir(&dir)?;
    let path = dir.join(format!(
        "curve_{}_{}.csv",
        a.case.mode.as_str(),
        a.case.dir.as_str()
    ));
    write_curve_csv(&path, &model.weights, a.case, &grid)?;
    let mut outputs = vec![path.clone()];
    if a.svg {
        let svg = decomposition_svg(&model.weights, a.case, &grid, None)?;
        let svg_path = path.with_extension("svg");
        write_file(&svg_path, &svg)?;
        outputs.push(svg_path);
    }
    manifest.config =
        json!({ "model": model.name, "case": a.case.to_string(), "points": a.points });
    manifest.write(&dir, &outputs)?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    print!("{text}");
    Ok(())
}

fn stiffness(a: StiffnessArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("stiffness", args);
    let set = load_data(&a.data, &mut manifest)?;
    println!("mean-curve stiffness [kPa]");
    for (cond, exp) in &set.means {
        println!("  {cond}: {:.3}", curve_stiffness(exp)?);
    }
    let (summaries, report) = match analyze_set(&set) {
        Ok(r) => r,
        Err(Error::Domain(m)) => {
            return Err(Error::NoData(format!("direction comparison needs replicates: {m}")).into())
        }
        Err(e) => return Err(e.into()),
    };
    println!(
        "direction comparison (Welch), in-plane n={} vs cross-plane n={}",
        report.n_in_plane, report.n_cross_plane
    );
    for r in &report.rows {
        println!(
            "  {:<6} {:>9.3} ± {:<8.3} vs {:>9.3} ± {:<8.3} t={:>8.3} df={:>6.2} p={:.3e} {}",
            r.attribute.label(),
            r.in_plane_mean,
            r.in_plane_sd,
            r.cross_plane_mean,
            r.cross_plane_sd,
            r.welch.t,
            r.welch.df,
            r.welch.p,
            r.welch.stars()
        );
    }
    println!("symmetry: {}", report.symmetry);
    if let Some(out) = &a.out {
        create_dir(out)?;
        let csv_path = out.join("stiffness.csv");
        report.write_csv(&csv_path)?;
        let json_path = out.join("stiffness.json");
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "material": set.material,
            "samples": summaries,
            "comparison": report,
        });
        write_file(
            &json_path,
            &serde_json::to_string_pretty(&doc).expect("serializes"),
        )?;
        manifest.config = json!({
            "attributes": Attribute::ALL.iter().map(|a| a.label()).collect::<Vec<_>>(),
            "directions": FiberDirection::ALL.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        });
        manifest.write(out, &[csv_path, json_path])?;
    }
    Ok(())
}

fn subsets(a: SubsetsArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("subsets", args);
    if a.max_terms > MAX_SUBSETS {
        return Err(Failure::Usage(format!(
            "--max-terms must be at most {MAX_SUBSETS}"
        )));
    }
    let set = load_data(&a.data, &mut manifest)?;
    let ranked = enumerate_subsets_bestfit(&set.mean_curves(), a.max_terms)?;
    println!("rank  terms            mean R2");
    for (i, s) in ranked.iter().take(a.top).enumerate() {
        println!("{:>4}  {:<16} {:.6}", i + 1, s.label(), s.mean_r_squared);
    }
    if let Some(out) = &a.out {
        create_dir(out)?;
        let path = out.join("subsets.json");
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "max_terms": a.max_terms,
            "ranked": ranked
                .iter()
                .map(|f| json!({
                    "terms": f.terms,
                    "mean_r_squared": f.mean_r_squared,
                    "mse": f.mse,
                    "formula": f.weights.formula(),
                    "r_squared": f.r_squared.iter().map(|(c, r)| (c.to_string(), *r)).collect::<std::collections::BTreeMap<_, _>>(),
                }))
                .collect::<Vec<_>>(),
        });
        write_file(
            &path,
            &serde_json::to_string_pretty(&doc).expect("serializes"),
        )?;
        manifest.config = json!({ "max_terms": a.max_terms });
        manifest.write(out, &[path])?;
    }
    Ok(())
}

fn report(a: ReportArgs, args: &[String]) -> CliResult<()> {
    let mut manifest = Manifest::new("report", args);
    if a.svg && a.model.is_none() {
        return Err(Failure::Usage("--svg needs --model".into()));
    }
    let set = load_data(&a.data, &mut manifest)?;
    let model = a
        .model
        .as_deref()
        .map(|m| resolve_model(m, &mut manifest))
        .transpose()?;
    let fit = match &a.fit {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            manifest.inputs.push(p.clone());
            Some(FitReport::from_json(&text)?)
        }
        None => None,
    };
    let mut outputs = export_reports(&set, model.as_ref(), fit.as_ref(), &a.out)?.files;
    if let (true, Some(m)) = (a.svg, &model) {
        write_svgs(&set, m, &a.out, &mut outputs)?;
    }
    manifest.write(&a.out, &outputs)?;
    for f in &outputs {
        println!("{}", f.display());
    }
    Ok(())
}
