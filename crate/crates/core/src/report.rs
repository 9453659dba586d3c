//! CSV and JSON reports of a sweep.
//!
//! One row per test ε, columns in a fixed order. A failed point keeps its
//! identifying columns and leaves the rest empty; the JSON form carries the
//! error message.

use std::io::Write;

use serde::Serialize;

use crate::detector::{DetectionConfig, SweepPoint};
use crate::error::{Error, Result};
use crate::types::format_real;

/// Column names, in output order.
pub const COLUMNS: [&str; 15] = [
    "mechanism",
    "epsilon0",
    "test_epsilon",
    "category",
    "d1",
    "d2",
    "args",
    "event",
    "c1",
    "c2",
    "n",
    "p_top",
    "p_bot",
    "min_p",
    "seconds",
];

/// Flat report row; `None` fields render empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub mechanism: String,
    pub epsilon0: f64,
    pub test_epsilon: f64,
    pub category: Option<String>,
    pub d1: Option<String>,
    pub d2: Option<String>,
    pub args: Option<String>,
    pub event: Option<String>,
    pub c1: Option<u64>,
    pub c2: Option<u64>,
    pub n: Option<u64>,
    pub p_top: Option<f64>,
    pub p_bot: Option<f64>,
    pub min_p: Option<f64>,
    pub seconds: Option<f64>,
}

/// Rendering options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    /// Leave the `seconds` column empty so output is byte-reproducible.
    pub omit_timing: bool,
}

pub fn rows(config: &DetectionConfig, points: &[SweepPoint], options: ReportOptions) -> Vec<Row> {
    points
        .iter()
        .map(|p| {
            let mut row = Row {
                mechanism: config.mechanism.clone(),
                epsilon0: config.epsilon0,
                test_epsilon: p.test_epsilon,
                category: None,
                d1: None,
                d2: None,
                args: None,
                event: None,
                c1: None,
                c2: None,
                n: None,
                p_top: None,
                p_bot: None,
                min_p: None,
                seconds: None,
            };
            if let Ok(r) = &p.outcome {
                row.category = Some(r.pair.category().to_string());
                row.d1 = Some(r.pair.d1().to_string());
                row.d2 = Some(r.pair.d2().to_string());
                row.args = Some(r.args.to_string());
                row.event = Some(r.event.to_string());
                row.c1 = Some(r.counts.c1);
                row.c2 = Some(r.counts.c2);
                row.n = Some(r.counts.n);
                row.p_top = Some(r.pvalues.p_top);
                row.p_bot = Some(r.pvalues.p_bot);
                row.min_p = Some(r.min_p());
                row.seconds = (!options.omit_timing).then_some(r.seconds);
            }
            row
        })
        .collect()
}

/// Reals as in [`format_real`], switching to exponent form below `1e-4`.
fn format_small(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format_real(v)
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("cannot write report: {e}"))
}

/// Writes the CSV report, header included.
pub fn write_csv<W: Write>(
    out: W,
    config: &DetectionConfig,
    points: &[SweepPoint],
    options: ReportOptions,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(io)?;
    for row in rows(config, points, options) {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let num = |v: Option<f64>| v.map(format_small).unwrap_or_default();
        let int = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            row.mechanism,
            format_real(row.epsilon0),
            format_real(row.test_epsilon),
            opt(row.category),
            opt(row.d1),
            opt(row.d2),
            opt(row.args),
            opt(row.event),
            int(row.c1),
            int(row.c2),
            int(row.n),
            num(row.p_top),
            num(row.p_bot),
            num(row.min_p),
            num(row.seconds),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Serialize)]
struct JsonRow {
    #[serde(flatten)]
    row: Row,
    exploratory_pvalue: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a DetectionConfig,
    violation_detected: bool,
    results: Vec<JsonRow>,
}

/// JSON mirror of the CSV, with the full config echoed for replay.
pub fn to_json(
    config: &DetectionConfig,
    points: &[SweepPoint],
    options: ReportOptions,
) -> Result<String> {
    let results = rows(config, points, options)
        .into_iter()
        .zip(points)
        .map(|(row, p)| JsonRow {
            row,
            exploratory_pvalue: p.outcome.as_ref().ok().map(|r| r.exploratory_pvalue),
            error: p.outcome.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let report = JsonReport {
        config,
        violation_detected: crate::detector::violation_detected(
            points,
            config.epsilon0,
            config.alpha,
        ),
        results,
    };
    serde_json::to_string_pretty(&report).map_err(io)
}
