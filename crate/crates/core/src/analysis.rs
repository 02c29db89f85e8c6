//! Small-strain stiffness and direction comparison.
//!
//! Stiffnesses are through-origin least-squares slopes, `E = (ε·σ)/(ε·ε)`,
//! over the first 10 % of strain. Shear slopes are converted with
//! `E_shr = 3μ` (incompressible, `ν = ½`). Directions are compared with
//! Welch's unequal-variance t-test; the Student-t tail comes from the
//! regularized incomplete beta function.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{Experiment, ExperimentSet};
use crate::error::{Error, Result};
use crate::kinematics::{FiberDirection, LoadingMode};
use crate::stress::Condition;

/// Largest strain magnitude included in the regressions.
pub const REGRESSION_WINDOW: f64 = 0.10;

/// Through-origin least-squares slope of `(strain, stress)` pairs, kPa.
pub fn regress_stiffness(pairs: &[(f64, f64)]) -> Result<f64> {
    let (num, den) = pairs
        .iter()
        .fold((0.0, 0.0), |(n, d), &(e, s)| (n + e * s, d + e * e));
    if den == 0.0 {
        return Err(Error::domain(
            "stiffness regression needs a non-zero strain",
        ));
    }
    Ok(num / den)
}

/// `E_shr = 3 (γ·τ)/(γ·γ)`, kPa.
pub fn shear_stiffness(pairs: &[(f64, f64)]) -> Result<f64> {
    Ok(3.0 * regress_stiffness(pairs)?)
}

/// Regression pairs of one curve: strain `λ − 1` or `γ` within the window.
/// Compression pairs are taken as magnitudes so `E_com > 0`.
pub fn regression_pairs(exp: &Experiment) -> Vec<(f64, f64)> {
    let compression = exp.mode == LoadingMode::Compression;
    exp.strains()
        .zip(exp.stresses())
        .filter(|(e, _)| e.abs() <= REGRESSION_WINDOW + 1e-12)
        .map(|(e, s)| {
            if compression {
                (e.abs(), s.abs())
            } else {
                (e, s)
            }
        })
        .collect()
}

/// Stiffness of one curve in its own mode (`E_ten`, `E_com` or `E_shr`).
pub fn curve_stiffness(exp: &Experiment) -> Result<f64> {
    let pairs = regression_pairs(exp);
    match exp.mode {
        LoadingMode::Shear => shear_stiffness(&pairs),
        _ => regress_stiffness(&pairs),
    }
}

/// Stiffnesses of one sample (or mean curve) in one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessSummary {
    pub direction: FiberDirection,
    pub replicate: String,
    pub e_ten: f64,
    pub e_com: f64,
    pub e_shr: f64,
    pub e_mean: f64,
    /// Strain–stress pairs that entered the three regressions.
    pub n_points: usize,
}

impl StiffnessSummary {
    pub fn new(
        direction: FiberDirection,
        replicate: impl Into<String>,
        e_ten: f64,
        e_com: f64,
        e_shr: f64,
    ) -> Self {
        StiffnessSummary {
            direction,
            replicate: replicate.into(),
            e_ten,
            e_com,
            e_shr,
            e_mean: (e_ten + e_com + e_shr) / 3.0,
            n_points: 0,
        }
    }

    /// Summary from a tension, a compression and a shear curve.
    pub fn from_curves(
        tension: &Experiment,
        compression: &Experiment,
        shear: &Experiment,
    ) -> Result<Self> {
        let dir = tension.dir;
        if compression.dir != dir || shear.dir != dir {
            return Err(Error::domain(
                "curves of one summary must share a direction",
            ));
        }
        let check = |e: &Experiment, m: LoadingMode| {
            if e.mode == m {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "expected a {m} curve, got {}",
                    e.mode
                )))
            }
        };
        check(tension, LoadingMode::Tension)?;
        check(compression, LoadingMode::Compression)?;
        check(shear, LoadingMode::Shear)?;
        let mut s = StiffnessSummary::new(
            dir,
            tension.replicate.clone(),
            curve_stiffness(tension)?,
            curve_stiffness(compression)?,
            curve_stiffness(shear)?,
        );
        s.n_points = [tension, compression, shear]
            .iter()
            .map(|e| regression_pairs(e).len())
            .sum();
        Ok(s)
    }

    pub fn attribute(&self, a: Attribute) -> f64 {
        match a {
            Attribute::Tension => self.e_ten,
            Attribute::Compression => self.e_com,
            Attribute::Shear => self.e_shr,
            Attribute::Mean => self.e_mean,
        }
    }
}

/// Per-replicate summaries of a dataset, grouped by direction. Replicates are
/// matched across modes by id; ids missing a mode are skipped.
pub fn summarize_replicates(
    set: &ExperimentSet,
) -> Result<BTreeMap<FiberDirection, Vec<StiffnessSummary>>> {
    let mut out = BTreeMap::new();
    for dir in FiberDirection::ALL {
        let get = |mode| set.replicates.get(&Condition::new(mode, dir));
        let (Some(ten), Some(com), Some(shr)) = (
            get(LoadingMode::Tension),
            get(LoadingMode::Compression),
            get(LoadingMode::Shear),
        ) else {
            continue;
        };
        let mut list = Vec::new();
        for t in ten {
            let c = com.iter().find(|e| e.replicate == t.replicate);
            let s = shr.iter().find(|e| e.replicate == t.replicate);
            if let (Some(c), Some(s)) = (c, s) {
                list.push(StiffnessSummary::from_curves(t, c, s)?);
            }
        }
        if !list.is_empty() {
            out.insert(dir, list);
        }
    }
    Ok(out)
}

/// Outcome of Welch's two-sample t-test (two-tailed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    pub p: f64,
    pub significant_05: bool,
    pub significant_01: bool,
}

impl WelchResult {
    pub fn from_parts(t: f64, df: f64, p: f64) -> Self {
        WelchResult {
            t,
            df,
            p,
            significant_05: p < 0.05,
            significant_01: p < 0.01,
        }
    }

    /// `""`, `"*"` (p < 0.05) or `"**"` (p < 0.01).
    pub fn stars(&self) -> &'static str {
        if self.significant_01 {
            "**"
        } else if self.significant_05 {
            "*"
        } else {
            ""
        }
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    if x.len() < 2 {
        return (x.first().copied().unwrap_or(f64::NAN), f64::NAN);
    }
    let (m, v) = mean_var(x);
    (m, v.sqrt())
}

/// Welch's t-test of `a` against `b`. Sample variances use `n − 1`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::domain(
            "Welch's test needs at least two values per sample",
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::domain("samples must be finite"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if ma == mb {
            return Err(Error::domain(
                "both samples are constant and equal; the t statistic is undefined",
            ));
        }
        let t = if ma > mb {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return Ok(WelchResult::from_parts(
            t,
            (a.len() + b.len() - 2) as f64,
            0.0,
        ));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(WelchResult::from_parts(t, df, student_t_two_tailed(t, df)))
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// Student-t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_tailed(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction,
/// converged to a relative change of 1e-15.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Stiffness attributes compared between directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Tension,
    Compression,
    Shear,
    Mean,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Tension,
        Attribute::Compression,
        Attribute::Shear,
        Attribute::Mean,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Attribute::Tension => "E_ten",
            Attribute::Compression => "E_com",
            Attribute::Shear => "E_shr",
            Attribute::Mean => "E_mean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Anisotropic,
    /// No attribute differs significantly between directions.
    IsotropicNotRejected,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::Anisotropic => "anisotropic",
            Symmetry::IsotropicNotRejected => "isotropic (not rejected)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeComparison {
    pub attribute: Attribute,
    pub in_plane_mean: f64,
    pub in_plane_sd: f64,
    pub cross_plane_mean: f64,
    pub cross_plane_sd: f64,
    pub welch: WelchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyReport {
    pub rows: Vec<AttributeComparison>,
    pub symmetry: Symmetry,
    pub n_in_plane: usize,
    pub n_cross_plane: usize,
}

pub const REPORT_HEADER: [&str; 10] = [
    "attribute",
    "in_plane_mean_kPa",
    "in_plane_sd_kPa",
    "cross_plane_mean_kPa",
    "cross_plane_sd_kPa",
    "t",
    "df",
    "p",
    "flag",
    "symmetry",
];

impl AnisotropyReport {
    pub fn row(&self, a: Attribute) -> Option<&AttributeComparison> {
        self.rows.iter().find(|r| r.attribute == a)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(REPORT_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.attribute.label().to_string(),
                r.in_plane_mean.to_string(),
                r.in_plane_sd.to_string(),
                r.cross_plane_mean.to_string(),
                r.cross_plane_sd.to_string(),
                r.welch.t.to_string(),
                r.welch.df.to_string(),
                r.welch.p.to_string(),
                r.welch.stars().to_string(),
                self.symmetry.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Welch test per attribute. The material is classified anisotropic as soon
/// as one attribute differs at p < 0.05.
pub fn anisotropy_report(
    in_plane: &[StiffnessSummary],
    cross_plane: &[StiffnessSummary],
) -> Result<AnisotropyReport> {
    if in_plane.len() < 2 || cross_plane.len() < 2 {
        return Err(Error::domain("need at least two samples per direction"));
    }
    let mut rows = Vec::with_capacity(4);
    for a in Attribute::ALL {
        let x: Vec<f64> = in_plane.iter().map(|s| s.attribute(a)).collect();
        let y: Vec<f64> = cross_plane.iter().map(|s| s.attribute(a)).collect();
        let welch = welch_t_test(&x, &y)?;
        let (mx, sx) = mean_sd(&x);
        let (my, sy) = mean_sd(&y);
        rows.push(AttributeComparison {
            attribute: a,
            in_plane_mean: mx,
            in_plane_sd: sx,
            cross_plane_mean: my,
            cross_plane_sd: sy,
            welch,
        });
    }
    let symmetry = if rows.iter().any(|r| r.welch.significant_05) {
        Symmetry::Anisotropic
    } else {
        Symmetry::IsotropicNotRejected
    };
    Ok(AnisotropyReport {
        rows,
        symmetry,
        n_in_plane: in_plane.len(),
        n_cross_plane: cross_plane.len(),
    })
}

/// Summaries and direction comparison for a replicated dataset.
pub fn analyze_set(set: &ExperimentSet) -> Result<(Vec<StiffnessSummary>, AnisotropyReport)> {
    let by_dir = summarize_replicates(set)?;
    let inp = by_dir
        .get(&FiberDirection::InPlane)
        .cloned()
        .unwrap_or_default();
    let crs = by_dir
        .get(&FiberDirection::CrossPlane)
        .cloned()
        .unwrap_or_default();
    let report = anisotropy_report(&inp, &crs)?;
    Ok((inp.into_iter().chain(crs).collect(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn regression_examples() {
        assert_abs_diff_eq!(
            regress_stiffness(&[(0.05, 5.0), (0.10, 10.0)]).unwrap(),
            100.0,
            epsilon = 1e-12
        );
        assert_eq!(regress_stiffness(&[(0.05, 0.0), (0.1, 0.0)]).unwrap(), 0.0);
        assert!(regress_stiffness(&[(0.0, 1.0)]).is_err());
        assert!(regress_stiffness(&[]).is_err());
        assert_abs_diff_eq!(
            shear_stiffness(&[(0.1, 1.0)]).unwrap(),
            30.0,
            epsilon = 1e-12
        );
        assert_eq!(shear_stiffness(&[(0.1, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn residual_is_orthogonal_to_strain() {
        let pairs = [(0.01, 1.3), (0.04, 3.9), (0.07, 8.2), (0.1, 10.1)];
        let e = regress_stiffness(&pairs).unwrap();
        let dot: f64 = pairs.iter().map(|(x, y)| x * (y - e * x)).sum();
        let scale: f64 = pairs.iter().map(|(x, y)| (x * y).abs()).sum();
        assert!(dot.abs() <= 1e-9 * scale);
    }

    #[test]
    fn welch_examples() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.t, -1.224_744_871_391_589, epsilon = 1e-12);
        assert_abs_diff_eq!(r.df, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p, 0.2879, epsilon = 1e-3);
        assert!(!r.significant_05);

        let same = welch_t_test(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!((same.t, same.p), (0.0, 1.0));

        let flags = WelchResult::from_parts(2.5, 10.0, 0.03);
        assert!(flags.significant_05 && !flags.significant_01);
        assert_eq!(flags.stars(), "*");

        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(welch_t_test(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        let sep = welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(sep.p, 0.0);
    }

    #[test]
    fn t_distribution_reference_values() {
        // two-sided critical values from standard tables
        assert_abs_diff_eq!(student_t_two_tailed(2.776_445, 4.0), 0.05, epsilon = 1e-6);
        assert_abs_diff_eq!(student_t_two_tailed(2.228_139, 10.0), 0.05, epsilon = 1e-6);
        assert_abs_diff_eq!(student_t_two_tailed(12.706_205, 1.0), 0.05, epsilon = 1e-6);
        assert_abs_diff_eq!(student_t_cdf(0.0, 7.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn report_classifies() {
        let mk = |d, v: &[f64]| -> Vec<StiffnessSummary> {
            v.iter()
                .enumerate()
                .map(|(i, &e)| StiffnessSummary::new(d, i.to_string(), e, e * 0.5, e * 0.8))
                .collect()
        };
        let a = mk(FiberDirection::InPlane, &[100.0, 110.0, 104.0, 98.0]);
        let b = mk(FiberDirection::CrossPlane, &[30.0, 25.0, 33.0, 28.0]);
        let r = anisotropy_report(&a, &b).unwrap();
        assert_eq!(r.symmetry, Symmetry::Anisotropic);
        assert!(r.row(Attribute::Tension).unwrap().welch.significant_01);

        let same = anisotropy_report(
            &a,
            &mk(FiberDirection::CrossPlane, &[100.0, 110.0, 104.0, 98.0]),
        )
        .unwrap();
        assert_eq!(same.symmetry, Symmetry::IsotropicNotRejected);
        assert!(same.rows.iter().all(|r| r.welch.p == 1.0));
        assert!(anisotropy_report(&a[..1], &b).is_err());
    }

    #[test]
    fn mean_stiffness_identity() {
        let s = StiffnessSummary::new(FiberDirection::InPlane, "1", 10.0, 20.0, 33.0);
        assert_eq!(s.e_mean, (10.0 + 20.0 + 33.0) / 3.0);
    }
}
