use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::analysis::analyze_set;
use crate::discovery::FitReport;
use crate::energy::{ModelWeights, NamedModel, NUM_TERMS, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::stress::{stress_contributions, Condition, LoadingCase};

use super::{write_csv, ExperimentSet};

pub const CURVE_HEADER: [&str; 4 + NUM_TERMS] = [
    "loading",
    "stress_kPa",
    "mode",
    "direction",
    "term_1",
    "term_2",
    "term_3",
    "term_4",
    "term_5",
    "term_6",
    "term_7",
    "term_8",
    "term_9",
    "term_10",
    "term_11",
    "term_12",
];

/// Paths written by [`export_reports`], in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportedFiles {
    pub files: Vec<PathBuf>,
}

/// Model stress and its per-term decomposition at `loadings`, as CSV on any
/// writer. The term columns sum to `stress_kPa`.
pub fn write_curve<W: Write>(
    writer: W,
    model: &ModelWeights,
    condition: Condition,
    loadings: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv {
        path: PathBuf::from("<curve>"),
        source: e,
    };
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for &loading in loadings {
        let case = LoadingCase::new(condition.mode, condition.dir, loading)?;
        let parts = stress_contributions(model, &case)?;
        let total: f64 = parts.iter().sum();
        let mut rec = vec![
            loading.to_string(),
            total.to_string(),
            condition.mode.as_str().to_string(),
            condition.dir.as_str().to_string(),
        ];
        rec.extend(parts.iter().map(|p| p.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<curve>", e))
}

/// [`write_curve`] into a file.
pub fn write_curve_csv(
    path: &Path,
    model: &ModelWeights,
    condition: Condition,
    loadings: &[f64],
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_curve(std::io::BufWriter::new(file), model, condition, loadings).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes everything known about a dataset into `out_dir`:
///
/// * `data.csv`, the dataset itself;
/// * `model.json` and `curve_<mode>_<direction>.csv` per mean curve, when a
///   model is given;
/// * `fit_report.json`, when a fit is given;
/// * `stiffness.csv` and `stiffness.json`, when both directions carry at least
///   two complete replicates.
pub fn export_reports(
    set: &ExperimentSet,
    model: Option<&NamedModel>,
    fit: Option<&FitReport>,
    out_dir: &Path,
) -> Result<ExportedFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut out = ExportedFiles::default();

    let data = out_dir.join("data.csv");
    write_csv(set, &data)?;
    out.files.push(data);

    if let Some(model) = model {
        let path = out_dir.join("model.json");
        write_text(&path, &model.to_json())?;
        out.files.push(path);
        for (cond, exp) in &set.means {
            let path = out_dir.join(format!(
                "curve_{}_{}.csv",
                cond.mode.as_str(),
                cond.dir.as_str()
            ));
            let loadings: Vec<f64> = exp.loadings().collect();
            write_curve_csv(&path, &model.weights, *cond, &loadings)?;
            out.files.push(path);
        }
    }

    if let Some(fit) = fit {
        let path = out_dir.join("fit_report.json");
        write_text(&path, &fit.to_json())?;
        out.files.push(path);
    }

    if let Ok((summaries, report)) = analyze_set(set) {
        let path = out_dir.join("stiffness.csv");
        report.write_csv(&path)?;
        out.files.push(path);
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "material": set.material,
            "samples": summaries,
            "comparison": report,
        });
        let path = out_dir.join("stiffness.json");
        let text = serde_json::to_string_pretty(&doc).expect("serializable stiffness report");
        write_text(&path, &text)?;
        out.files.push(path);
    }
    Ok(out)
}
