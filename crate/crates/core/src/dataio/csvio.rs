use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kinematics::{FiberDirection, LoadingMode};
use crate::stress::{Condition, StressSample};

use super::{Experiment, ExperimentSet, MEAN_REPLICATE};

pub const CSV_HEADER: [&str; 6] = [
    "material",
    "mode",
    "direction",
    "replicate",
    "loading",
    "stress_kPa",
];

/// File name used when a directory is given instead of a CSV file.
pub(crate) const DATA_FILE: &str = "data.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Accept loadings outside `λ ∈ [0.9, 1.1]`, `γ ∈ [0, 0.1]`.
    pub permissive: bool,
    /// Largest accepted |stress| at the reference state, kPa.
    pub reference_tolerance: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            permissive: false,
            reference_tolerance: 0.05,
        }
    }
}

/// Loads a dataset with default options. A directory resolves to its
/// `data.csv`.
pub fn load_csv(path: &Path) -> Result<ExperimentSet> {
    load_csv_with(path, &LoadOptions::default())
}

pub fn load_csv_with(path: &Path, opts: &LoadOptions) -> Result<ExperimentSet> {
    let path: PathBuf = if path.is_dir() {
        path.join(DATA_FILE)
    } else {
        path.to_path_buf()
    };
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    parse_csv(file, opts)
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("").trim()
}

fn number(rec: &csv::StringRecord, i: usize, row: usize) -> Result<f64> {
    let raw = field(rec, i);
    raw.parse::<f64>().map_err(|_| {
        Error::validation(
            Some(row),
            format!("column '{}' is not a number: '{raw}'", CSV_HEADER[i]),
        )
    })
}

/// Parses and validates a dataset from any reader.
pub fn parse_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<ExperimentSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::validation(Some(1), format!("unreadable header: {e}")))?
        .clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != CSV_HEADER {
        return Err(Error::validation(
            Some(1),
            format!(
                "expected header '{}', found '{}'",
                CSV_HEADER.join(","),
                found.join(",")
            ),
        ));
    }

    // (condition, replicate) -> (samples, source rows), kept in file order.
    let mut curves: BTreeMap<(Condition, String), (Vec<StressSample>, Vec<usize>)> =
        BTreeMap::new();
    let mut seen: HashSet<(Condition, String, u64)> = HashSet::new();
    let mut material: Option<String> = None;

    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::validation(Some(row), e.to_string()))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::validation(
                Some(row),
                format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()),
            ));
        }
        let mat = field(&rec, 0).to_string();
        match &material {
            None => material = Some(mat),
            Some(m) if *m != mat => {
                return Err(Error::validation(
                    Some(row),
                    format!("file mixes materials '{m}' and '{mat}'"),
                ))
            }
            _ => {}
        }
        let mode: LoadingMode = field(&rec, 1)
            .parse()
            .map_err(|e: Error| Error::validation(Some(row), e.to_string()))?;
        let dir: FiberDirection = field(&rec, 2)
            .parse()
            .map_err(|e: Error| Error::validation(Some(row), e.to_string()))?;
        let replicate = field(&rec, 3).to_string();
        if replicate.is_empty() {
            return Err(Error::validation(Some(row), "empty replicate id"));
        }
        let loading = number(&rec, 4, row)?;
        let stress = number(&rec, 5, row)?;
        let cond = Condition::new(mode, dir);
        if !seen.insert((cond, replicate.clone(), loading.to_bits())) {
            return Err(Error::validation(
                Some(row),
                format!("duplicate sample {cond} replicate '{replicate}' loading {loading}"),
            ));
        }
        let entry = curves.entry((cond, replicate)).or_default();
        entry.0.push(StressSample { loading, stress });
        entry.1.push(row);
    }

    let Some(material) = material else {
        return Err(Error::NoData("no samples in data section".into()));
    };
    let mut set = ExperimentSet::new(material.clone());
    for ((cond, replicate), (samples, rows)) in curves {
        let exp = Experiment::new(material.clone(), cond, replicate, samples);
        exp.validate(opts, Some(&rows))?;
        if exp.is_mean() {
            set.insert_mean(exp)?;
        } else {
            set.push_replicate(exp);
        }
    }
    for reps in set.replicates.values_mut() {
        reps.sort_by_key(|e| natural_key(&e.replicate));
    }
    set.fill_means_from_replicates()?;
    Ok(set)
}

fn natural_key(id: &str) -> (u64, String) {
    (id.parse::<u64>().unwrap_or(u64::MAX), id.to_string())
}

fn write_rows<W: Write>(wtr: &mut csv::Writer<W>, exp: &Experiment) -> csv::Result<()> {
    for s in &exp.samples {
        wtr.write_record([
            exp.material.as_str(),
            exp.mode.as_str(),
            exp.dir.as_str(),
            exp.replicate.as_str(),
            &s.loading.to_string(),
            &s.stress.to_string(),
        ])?;
    }
    Ok(())
}

/// Writes mean curves followed by replicates. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(set: &ExperimentSet, path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut wtr = csv::Writer::from_path(path).map_err(csv_err)?;
    wtr.write_record(CSV_HEADER).map_err(csv_err)?;
    for exp in set.means.values() {
        debug_assert_eq!(exp.replicate, MEAN_REPLICATE);
        write_rows(&mut wtr, exp).map_err(csv_err)?;
    }
    for exp in set.replicates.values().flatten() {
        write_rows(&mut wtr, exp).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSet> {
        parse_csv(text.as_bytes(), &LoadOptions::default())
    }

    const HEADER: &str = "material,mode,direction,replicate,loading,stress_kPa\n";

    #[test]
    fn empty_data_section() {
        let err = parse(HEADER).unwrap_err();
        assert!(matches!(err, Error::NoData(_)));
        assert!(err.to_string().contains("no samples"));
    }

    #[test]
    fn wrong_header() {
        let err = parse("material,mode,dir,replicate,loading,stress\n").unwrap_err();
        assert!(matches!(err, Error::Validation { row: Some(1), .. }));
    }

    #[test]
    fn out_of_range_row_is_named() {
        let text =
            format!("{HEADER}m,tension,in-plane,mean,1.0,0\nm,tension,in-plane,mean,1.5,3\n");
        match parse(&text).unwrap_err() {
            Error::Validation { row, message } => {
                assert_eq!(row, Some(3));
                assert!(message.contains("1.5"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let permissive = LoadOptions {
            permissive: true,
            ..LoadOptions::default()
        };
        parse_csv(text.as_bytes(), &permissive).unwrap();
    }

    #[test]
    fn non_numeric_and_duplicates() {
        let text = format!("{HEADER}m,shear,in-plane,1,0,0\nm,shear,in-plane,1,abc,1\n");
        assert!(matches!(
            parse(&text),
            Err(Error::Validation { row: Some(3), .. })
        ));
        let text = format!("{HEADER}m,shear,in-plane,1,0,0\nm,shear,in-plane,1,0,0\n");
        assert!(matches!(
            parse(&text),
            Err(Error::Validation { row: Some(3), .. })
        ));
        let text = format!("{HEADER}m,shear,sideways,1,0,0\n");
        assert!(matches!(
            parse(&text),
            Err(Error::Validation { row: Some(2), .. })
        ));
    }

    #[test]
    fn replicates_without_mean_are_averaged() {
        let text = format!(
            "{HEADER}m,shear,in-plane,1,0,0\nm,shear,in-plane,1,0.1,1\n\
             m,shear,in-plane,2,0,0\nm,shear,in-plane,2,0.1,3\n"
        );
        let set = parse(&text).unwrap();
        let c = Condition::new(LoadingMode::Shear, FiberDirection::InPlane);
        assert_eq!(set.replicates[&c].len(), 2);
        assert_eq!(set.mean(c).unwrap().samples[1].stress, 2.0);
    }

    #[test]
    fn mixed_materials_rejected() {
        let text = format!("{HEADER}a,shear,in-plane,1,0,0\nb,shear,in-plane,1,0.1,1\n");
        assert!(parse(&text).is_err());
    }
}
