//! Byte-stable CSV and JSON output.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::evaluator::PatternReport;

/// 12 significant digits in scientific notation; `-0` prints as `0`.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

pub const CSV_HEADER: &str = "p,pattern,kind,m,re,im,residual";

/// Rows ordered by `(p, pattern id)`.
pub fn write_rows_csv<W: Write>(reports: &[PatternReport], mut w: W) -> Result<()> {
    let mut rows: Vec<_> = reports.iter().flat_map(|r| r.rows.iter()).collect();
    rows.sort_by(|a, b| (a.p, &a.pattern_id).cmp(&(b.p, &b.pattern_id)));
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.p,
            r.pattern_id,
            r.kind,
            r.m.map_or(String::new(), |m| m.to_string()),
            fmt_f64(r.s.re),
            fmt_f64(r.s.im),
            fmt_f64(r.residual)
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternSummary {
    pub id: String,
    pub max_residual: f64,
    pub growth: f64,
    pub frozen: Option<f64>,
    pub regression: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub patterns: Vec<PatternSummary>,
    pub regressions: usize,
}

/// A regression is a max residual above twice the frozen value.
pub fn summarize(reports: &[PatternReport], frozen: Option<&BTreeMap<String, f64>>) -> SuiteSummary {
    let patterns: Vec<PatternSummary> = reports
        .iter()
        .map(|r| {
            let f = frozen.and_then(|m| m.get(&r.id).copied());
            PatternSummary {
                id: r.id.clone(),
                max_residual: r.max_residual,
                growth: r.growth,
                frozen: f,
                regression: f.is_some_and(|f| r.max_residual > 2.0 * f),
            }
        })
        .collect();
    let regressions = patterns.iter().filter(|p| p.regression).count();
    SuiteSummary { patterns, regressions }
}

pub fn frozen_from_reports(reports: &[PatternReport]) -> BTreeMap<String, f64> {
    reports.iter().map(|r| (r.id.clone(), r.max_residual)).collect()
}
