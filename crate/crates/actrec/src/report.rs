//! Evaluation report output: a readable confusion table and a
//! tab-separated record file.
//!
//! The record file has one record per line, fields separated by tabs:
//!
//! ```text
//! actrec-report   1
//! d               <features>
//! fps             <frames per second>
//! window_sec      <seconds>
//! seed            <u64 or ->
//! skipped         <windows without a subject>
//! total           <classified windows>
//! overall         <percent>
//! class           <index>  <name>          (one per class, in model order)
//! counts          <name>   <c_0> ... <c_p-1>   (row = probe class)
//! rates           <name>   <r_0> ... <r_p-1>
//! ```
//!
//! Reals are written in shortest round-trip form, so parsing recovers the
//! exact values.

use std::fmt::Write as _;

use actrec_core::evaluation::{ConfusionMatrix, EvaluationReport, ReportConfig};
use actrec_core::Protocol;

pub const FORMAT_TAG: &str = "actrec-report";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReportParseError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("missing record `{0}`")]
    Missing(&'static str),
    #[error("stored {field} disagrees with the counts")]
    Inconsistent { field: &'static str },
}

pub fn to_tsv(report: &EvaluationReport) -> String {
    let cm = &report.confusion;
    let cfg = &report.config;
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG}\t{FORMAT_VERSION}");
    let _ = writeln!(out, "d\t{}", cfg.d);
    let _ = writeln!(out, "fps\t{}", cfg.protocol.fps);
    let _ = writeln!(out, "window_sec\t{}", cfg.protocol.window_sec);
    match cfg.seed {
        Some(s) => {
            let _ = writeln!(out, "seed\t{s}");
        }
        None => out.push_str("seed\t-\n"),
    }
    let _ = writeln!(out, "skipped\t{}", report.skipped);
    let _ = writeln!(out, "total\t{}", cm.total());
    let _ = writeln!(out, "overall\t{}", cm.overall_rate());
    for (i, name) in cm.class_names().iter().enumerate() {
        let _ = writeln!(out, "class\t{i}\t{name}");
    }
    for (name, row) in cm.class_names().iter().zip(cm.counts()) {
        let _ = write!(out, "counts\t{name}");
        row.iter().for_each(|c| {
            let _ = write!(out, "\t{c}");
        });
        out.push('\n');
    }
    for (name, row) in cm.class_names().iter().zip(cm.rates()) {
        let _ = write!(out, "rates\t{name}");
        row.iter().for_each(|r| {
            let _ = write!(out, "\t{r}");
        });
        out.push('\n');
    }
    out
}

/// Parses a record file and checks that the stored rates match the counts.
pub fn parse_tsv(text: &str) -> Result<EvaluationReport, ReportParseError> {
    let mut d = None;
    let mut fps = None;
    let mut window_sec = None;
    let mut seed = None;
    let mut skipped = None;
    let mut overall = None;
    let mut names = Vec::new();
    let mut counts = Vec::new();
    let mut rates = Vec::new();
    let mut tagged = false;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: String| ReportParseError::Line { line: line_no, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        let value = |i: usize| fields.get(i).copied().ok_or_else(|| err(format!("missing field {i}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
        match fields[0] {
            "" => continue,
            FORMAT_TAG => {
                if value(1)? != FORMAT_VERSION.to_string() {
                    return Err(err(format!("unsupported version {}", value(1)?)));
                }
                tagged = true;
            }
            "d" => d = Some(int(value(1)?)? as usize),
            "fps" => fps = Some(num(value(1)?)?),
            "window_sec" => window_sec = Some(num(value(1)?)?),
            "seed" => {
                seed = Some(match value(1)? {
                    "-" => None,
                    s => Some(int(s)?),
                })
            }
            "skipped" => skipped = Some(int(value(1)?)? as usize),
            "total" => {}
            "overall" => overall = Some(num(value(1)?)?),
            "class" => {
                if int(value(1)?)? as usize != names.len() {
                    return Err(err("class records out of order".into()));
                }
                names.push(value(2)?.to_string());
            }
            "counts" => counts.push(fields[2..].iter().map(|s| int(s)).collect::<Result<Vec<_>, _>>()?),
            "rates" => rates.push(fields[2..].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?),
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    if !tagged {
        return Err(ReportParseError::Missing(FORMAT_TAG));
    }
    let confusion = ConfusionMatrix::from_counts(names, counts)
        .map_err(|e| ReportParseError::Line { line: 0, reason: e.to_string() })?;
    if confusion.rates() != rates {
        return Err(ReportParseError::Inconsistent { field: "rates" });
    }
    if overall.ok_or(ReportParseError::Missing("overall"))? != confusion.overall_rate() {
        return Err(ReportParseError::Inconsistent { field: "overall" });
    }
    let config = ReportConfig {
        d: d.ok_or(ReportParseError::Missing("d"))?,
        protocol: Protocol {
            fps: fps.ok_or(ReportParseError::Missing("fps"))?,
            window_sec: window_sec.ok_or(ReportParseError::Missing("window_sec"))?,
        },
        seed: seed.ok_or(ReportParseError::Missing("seed"))?,
    };
    Ok(EvaluationReport { confusion, config, skipped: skipped.ok_or(ReportParseError::Missing("skipped"))? })
}

/// Confusion table of recognition rates; rows are probe classes, columns
/// gallery classes.
pub fn to_table(report: &EvaluationReport) -> String {
    let cm = &report.confusion;
    let cfg = &report.config;
    let width = cm.class_names().iter().map(String::len).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Recognition rate (%), d = {}, {} s windows at {} fps. Rows: probe class, columns: gallery class.",
        cfg.d, cfg.protocol.window_sec, cfg.protocol.fps
    );
    let _ = write!(out, "{:<width$}", "");
    for name in cm.class_names() {
        let _ = write!(out, "  {name:>width$}");
    }
    out.push('\n');
    for (name, row) in cm.class_names().iter().zip(cm.rates()) {
        let _ = write!(out, "{name:<width$}");
        for r in row {
            let _ = write!(out, "  {r:>width$.2}");
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "overall: {:.2}% ({}/{} windows, {} skipped)",
        cm.overall_rate(),
        cm.correct(),
        cm.total(),
        report.skipped
    );
    out
}
