//! Metric streams: `metrics.jsonl` (one `{"t","label","value"}` record per
//! sample) with a `metrics.csv` mirror.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::monitors::MonitorSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRecord<'a> {
    pub t: f64,
    pub label: &'a str,
    pub value: f64,
}

pub fn metrics_jsonl(series: &[MonitorSeries]) -> Result<String> {
    let mut out = String::new();
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            out.push_str(&serde_json::to_string(&MetricRecord { t: *t, label: &s.label, value: *v })?);
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn metrics_csv(series: &[MonitorSeries]) -> String {
    let mut out = String::from("t,label,value\n");
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            let _ = writeln!(out, "{t:?},{},{v:?}", s.label);
        }
    }
    out
}

/// Writes `metrics.jsonl` and `metrics.csv` into `dir`.
pub fn emit_metrics(series: &[MonitorSeries], dir: &Path) -> Result<()> {
    std::fs::write(dir.join("metrics.jsonl"), metrics_jsonl(series)?)?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(series))?;
    Ok(())
}
