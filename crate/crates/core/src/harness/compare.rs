//! Side-by-side table of study statistics with ratios to a reference
//! strategy (the first row, conventionally the single-point design).

use std::fmt::Write as _;
use std::path::Path;

use super::fmt_f64;
use super::study::StudyStats;
use crate::error::{Error, Result};

pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub stats: StudyStats,
    /// Each statistic divided by the reference row's, in column order
    /// `e_cd, var_cd, cv_cd, e_cl, var_cl, cv_cl, lift_margin`.
    pub ratios: [f64; 7],
}

fn values(s: &StudyStats) -> [f64; 7] {
    [s.e_cd, s.var_cd, s.cv_cd, s.e_cl, s.var_cl, s.cv_cl, s.lift_margin]
}

pub fn compare_designs(results: &[(String, StudyStats)]) -> Result<Vec<ComparisonRow>> {
    if results.len() < 2 {
        return Err(Error::InvalidArgument("comparison needs at least two strategies".into()));
    }
    let reference = values(&results[0].1);
    Ok(results
        .iter()
        .map(|(label, s)| {
            let v = values(s);
            let mut ratios = [0.0; 7];
            for i in 0..7 {
                ratios[i] = v[i] / reference[i];
            }
            ComparisonRow { label: label.clone(), stats: *s, ratios }
        })
        .collect())
}

const NAMES: [&str; 7] = ["e_cd", "var_cd", "cv_cd", "e_cl", "var_cl", "cv_cl", "lift_margin"];

pub fn render_table(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "strategy");
    for n in NAMES {
        let _ = write!(out, " {n:>11}");
    }
    let _ = write!(out, " {:>10} {:>10}", "E[cd]/ref", "CV[cd]/ref");
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{:<width$}", r.label);
        for v in values(&r.stats) {
            let _ = write!(out, " {v:>11.3e}");
        }
        let _ = write!(out, " {:>10.3} {:>10.3}", r.ratios[0], r.ratios[2]);
        out.push('\n');
    }
    out
}

pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["strategy".to_string()];
    header.extend(NAMES.iter().map(|n| n.to_string()));
    header.extend(NAMES.iter().map(|n| format!("{n}_ratio")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.label.clone()];
        rec.extend(values(&r.stats).map(fmt_f64));
        rec.extend(r.ratios.map(fmt_f64));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
