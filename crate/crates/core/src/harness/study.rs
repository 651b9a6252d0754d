//! Post-hoc parameter-space study: every design is evaluated on one common
//! set of uncertain inputs and summarized by mean, variance and coefficient
//! of variation of drag and lift.

use std::path::Path;

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use super::{fmt_f64, parse_f64};
use crate::aero::Evaluator;
use crate::error::{Error, Result};
use crate::estimators::sample_mean_variance;
use crate::geometry::DesignVector;
use crate::uncertainty::{sample_batch, InputDistribution, RngStream, UncertainInput};

pub const STUDY_FILE: &str = "study.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const STUDY_COLUMNS: [&str; 5] = ["design_id", "re_c", "model_id", "c_d", "c_l"];
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "design_id",
    "label",
    "e_cd",
    "var_cd",
    "cv_cd",
    "e_cl",
    "var_cl",
    "cv_cl",
    "lift_margin",
    "status",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyStats {
    pub e_cd: f64,
    pub var_cd: f64,
    pub cv_cd: f64,
    pub e_cl: f64,
    pub var_cl: f64,
    pub cv_cl: f64,
    /// `E[c_l] - sqrt(Var[c_l])`
    pub lift_margin: f64,
}

/// Coefficient of variation; zero when there is no spread.
pub fn coefficient_of_variation(mean: f64, var: f64) -> f64 {
    if var == 0.0 {
        0.0
    } else {
        var.sqrt() / mean.abs()
    }
}

impl StudyStats {
    pub fn from_samples(c_d: &[f64], c_l: &[f64]) -> Result<Self> {
        let (e_cd, var_cd) = sample_mean_variance(c_d)?;
        let (e_cl, var_cl) = sample_mean_variance(c_l)?;
        Ok(Self::from_moments(e_cd, var_cd, e_cl, var_cl))
    }

    pub fn from_moments(e_cd: f64, var_cd: f64, e_cl: f64, var_cl: f64) -> Self {
        Self {
            e_cd,
            var_cd,
            cv_cd: coefficient_of_variation(e_cd, var_cd),
            e_cl,
            var_cl,
            cv_cl: coefficient_of_variation(e_cl, var_cl),
            lift_margin: e_cl - var_cl.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub label: String,
    /// `Err` holds the reason a design was flagged.
    pub stats: std::result::Result<StudyStats, String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterRow {
    pub design_id: usize,
    pub re_c: f64,
    pub model_id: u8,
    pub c_d: f64,
    pub c_l: f64,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub samples: Vec<UncertainInput>,
    pub results: Vec<StudyResult>,
    /// `samples.len()` rows per design, design-major.
    pub scatter: Vec<ScatterRow>,
}

/// The common input set shared by all designs in a study.
pub fn study_inputs(dist: &InputDistribution, study_seed: u64, m: usize) -> Vec<UncertainInput> {
    sample_batch(&RngStream::new(study_seed), dist, 0, m)
}

pub fn parameter_space_study<E: Evaluator + ?Sized>(
    evaluator: &E,
    designs: &[(String, DesignVector)],
    dist: &InputDistribution,
    study_seed: u64,
    m: usize,
    pool: Option<&ThreadPool>,
) -> Result<StudyReport> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("study needs at least 2 samples, got {m}")));
    }
    let samples = study_inputs(dist, study_seed, m);
    let pairs: Vec<(usize, usize)> =
        (0..designs.len()).flat_map(|d| (0..m).map(move |s| (d, s))).collect();
    let work = || -> Vec<Result<(f64, f64)>> {
        pairs
            .par_iter()
            .map(|&(d, s)| {
                evaluator.evaluate(&designs[d].1, &samples[s]).map(|r| (r.c_d, r.c_l))
            })
            .collect()
    };
    let evaluated = match pool {
        Some(p) => p.install(work),
        None => work(),
    };

    let mut results = Vec::with_capacity(designs.len());
    let mut scatter = Vec::with_capacity(designs.len() * m);
    for (d, (label, _)) in designs.iter().enumerate() {
        let chunk = &evaluated[d * m..(d + 1) * m];
        let flagged = chunk.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string());
        let stats = match flagged {
            Some(reason) => Err(reason),
            None => {
                let cd: Vec<f64> = chunk.iter().map(|r| r.as_ref().unwrap().0).collect();
                let cl: Vec<f64> = chunk.iter().map(|r| r.as_ref().unwrap().1).collect();
                Ok(StudyStats::from_samples(&cd, &cl)?)
            }
        };
        for (s, r) in chunk.iter().enumerate() {
            let (c_d, c_l) = r.as_ref().map(|v| *v).unwrap_or((f64::NAN, f64::NAN));
            scatter.push(ScatterRow {
                design_id: d,
                re_c: samples[s].re_c,
                model_id: samples[s].model_id,
                c_d,
                c_l,
            });
        }
        results.push(StudyResult { label: label.clone(), stats });
    }
    Ok(StudyReport { samples, results, scatter })
}

pub fn write_study_csv(report: &StudyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(STUDY_COLUMNS)?;
    for r in &report.scatter {
        w.write_record([
            r.design_id.to_string(),
            fmt_f64(r.re_c),
            r.model_id.to_string(),
            fmt_f64(r.c_d),
            fmt_f64(r.c_l),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(results: &[StudyResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for (i, r) in results.iter().enumerate() {
        let mut row = vec![i.to_string(), r.label.clone()];
        match &r.stats {
            Ok(s) => {
                row.extend(
                    [s.e_cd, s.var_cd, s.cv_cd, s.e_cl, s.var_cl, s.cv_cl, s.lift_margin]
                        .map(fmt_f64),
                );
                row.push("ok".into());
            }
            Err(reason) => {
                row.extend(std::iter::repeat_n(fmt_f64(f64::NAN), 7));
                row.push(format!("flagged: {reason}"));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<StudyResult>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(SUMMARY_COLUMNS.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected summary columns", path.display())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let label = rec[1].to_string();
        let status = &rec[9];
        let stats = if status == "ok" {
            let v: Vec<f64> = (2..9).map(|i| parse_f64(&rec[i])).collect::<Result<_>>()?;
            Ok(StudyStats {
                e_cd: v[0],
                var_cd: v[1],
                cv_cd: v[2],
                e_cl: v[3],
                var_cl: v[4],
                cv_cl: v[5],
                lift_margin: v[6],
            })
        } else {
            Err(status.trim_start_matches("flagged: ").to_string())
        };
        out.push(StudyResult { label, stats });
    }
    Ok(out)
}
