//! Line-oriented, byte-deterministic run reports.
//!
//! A report is serialized as one `key=value` record per line: the tool
//! version, the configuration echoed verbatim, the outcome, outcome-specific
//! fields, per-K trace lines, witnesses, soundness caveats, and an optional
//! timing record (off by default so that equal inputs give byte-identical
//! output).  `parse(emit(r)) == r` for every report.

use crate::vk::{RecognitionOutcome, RecognitionReport};
use crate::{RhError, Result};

/// A machine-parseable run report.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub version: String,
    /// Configuration echo, verbatim, in emission order.
    pub config: Vec<(String, String)>,
    pub outcome: String,
    /// Outcome-specific records such as `K` or `counterexample`.
    pub fields: Vec<(String, String)>,
    /// Preformatted trace lines, one per loop iteration.
    pub trace: Vec<String>,
    pub witnesses: Vec<String>,
    pub caveats: Vec<String>,
    /// Wall-clock milliseconds; omitted from output when `None`.
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(outcome: impl Into<String>) -> Report {
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            outcome: outcome.into(),
            ..Report::default()
        }
    }

    pub fn config(mut self, key: impl Into<String>, value: impl ToString) -> Report {
        self.config.push((key.into(), value.to_string()));
        self
    }

    pub fn field(mut self, key: impl Into<String>, value: impl ToString) -> Report {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    /// Serialize to the line-oriented format.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version={}\n", self.version));
        for (k, v) in &self.config {
            out.push_str(&format!("config.{k}={v}\n"));
        }
        out.push_str(&format!("outcome={}\n", self.outcome));
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}={v}\n"));
        }
        for t in &self.trace {
            out.push_str(&format!("trace.{t}\n"));
        }
        for w in &self.witnesses {
            out.push_str(&format!("witness={w}\n"));
        }
        for c in &self.caveats {
            out.push_str(&format!("caveat={c}\n"));
        }
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("timing.ms={ms}\n"));
        }
        out
    }

    /// Parse the line-oriented format back into a report.
    pub fn parse(text: &str) -> Result<Report> {
        let mut r = Report::default();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("version=") {
                r.version = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("config.") {
                let (k, v) = split_record(rest)?;
                r.config.push((k, v));
            } else if let Some(rest) = line.strip_prefix("outcome=") {
                r.outcome = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("trace.") {
                r.trace.push(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("witness=") {
                r.witnesses.push(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("caveat=") {
                r.caveats.push(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("timing.ms=") {
                r.timing_ms = Some(rest.parse().map_err(|_| {
                    RhError::MalformedInput(format!("bad timing record {line:?}"))
                })?);
            } else {
                let (k, v) = split_record(line)?;
                r.fields.push((k, v));
            }
        }
        Ok(r)
    }
}

fn split_record(line: &str) -> Result<(String, String)> {
    match line.split_once('=') {
        Some((k, v)) => Ok((k.to_string(), v.to_string())),
        None => Err(RhError::MalformedInput(format!("report line without '=': {line:?}"))),
    }
}

/// Render a recognition run as a report.
pub fn recognition_report(
    pres: &crate::group::RelPresentation,
    rr: &RecognitionReport,
) -> Report {
    let mut report = match &rr.outcome {
        RecognitionOutcome::LinearIsop(k) => Report::new("LinearIsop").field("K", k),
        RecognitionOutcome::NonExact(w) => {
            let word: Vec<crate::group::Letter> =
                w.iter().map(|fe| crate::group::Letter::Par(fe.clone())).collect();
            Report::new("NonExact").field("counterexample", pres.format_relword(&word))
        }
        RecognitionOutcome::Timeout(k) => Report::new("Timeout").field("K", k),
    };
    for t in &rr.trace {
        let ratio = match t.max_ratio {
            Some((a, l)) => format!("{a}/{l}"),
            None => "-".to_string(),
        };
        report.trace.push(format!(
            "K={} V={} D={} maxratio={}",
            t.k, t.v_size, t.d_size, ratio
        ));
    }
    for (w, a, l) in &rr.witnesses {
        report.witnesses.push(format!("{w} area={a} len={l}"));
    }
    report.caveats = rr.caveats.clone();
    report
}
