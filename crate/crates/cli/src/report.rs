//! Gap of solver results against a reference table.
//!
//! The gap is `(tc - reference) / reference`; a negative gap means the
//! solver beat the reference.

use std::collections::HashMap;
use std::io::Write;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use crate::record::Row;

pub const GAPS_SCHEMA: &str = "evrp-gaps/1";

pub fn gap(tc: f64, reference: f64) -> f64 {
    (tc - reference) / reference
}

/// Reads `instance` and `column` from a CSV file with `#` comments.
pub fn read_reference(text: &str, column: &str) -> Result<HashMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("reference table has no {name:?} column"))
    };
    let (name_at, value_at) = (find("instance")?, find(column)?);
    let mut out = HashMap::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let value: f64 = record[value_at]
            .trim()
            .parse()
            .with_context(|| format!("reference row {}: bad {column}", k + 1))?;
        out.insert(record[name_at].trim().to_owned(), value);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub instance: String,
    pub best_tc: Option<f64>,
    pub reference_tc: Option<f64>,
    pub gap_percent: Option<f64>,
    /// `ok`, `missing-reference` or `no-solution`.
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Mean over rows with status `ok`.
    pub mean_gap_percent: Option<f64>,
    pub mean_best_tc: Option<f64>,
    pub mean_reference_tc: Option<f64>,
}

/// Best cost per instance: aggregate rows when present, otherwise the
/// minimum over successful run rows.
fn best_per_instance(rows: &[Row]) -> Vec<(String, Option<f64>)> {
    let use_aggregates = rows.iter().any(Row::is_aggregate);
    let mut out: Vec<(String, Option<f64>)> = Vec::new();
    for row in rows.iter().filter(|r| r.is_aggregate() == use_aggregates) {
        let tc = if row.status == "ok" { row.best_tc } else { None };
        match out.iter_mut().find(|(n, _)| *n == row.instance) {
            Some((_, best)) => {
                if let Some(tc) = tc {
                    *best = Some(best.map_or(tc, |b: f64| b.min(tc)));
                }
            }
            None => out.push((row.instance.clone(), tc)),
        }
    }
    out
}

pub fn gap_report(rows: &[Row], reference: &HashMap<String, f64>) -> GapReport {
    let rows: Vec<GapRow> = best_per_instance(rows)
        .into_iter()
        .map(|(instance, best_tc)| {
            let reference_tc = reference.get(&instance).copied();
            let (gap_percent, status) = match (best_tc, reference_tc) {
                (Some(tc), Some(r)) => (Some(100.0 * gap(tc, r)), "ok"),
                (_, None) => (None, "missing-reference"),
                (None, Some(_)) => (None, "no-solution"),
            };
            GapRow {
                instance,
                best_tc,
                reference_tc,
                gap_percent,
                status,
            }
        })
        .collect();
    let ok: Vec<&GapRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let mean = |f: fn(&GapRow) -> Option<f64>| {
        (!ok.is_empty()).then(|| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64)
    };
    GapReport {
        mean_gap_percent: mean(|r| r.gap_percent),
        mean_best_tc: mean(|r| r.best_tc),
        mean_reference_tc: mean(|r| r.reference_tc),
        rows,
    }
}

impl GapReport {
    /// Schema line, one row per instance, then a `mean` row.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema: {GAPS_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.serialize(GapRow {
            instance: "mean".into(),
            best_tc: self.mean_best_tc,
            reference_tc: self.mean_reference_tc,
            gap_percent: self.mean_gap_percent,
            status: "ok",
        })?;
        w.flush()?;
        Ok(())
    }

    pub fn flagged(&self) -> impl Iterator<Item = &GapRow> {
        self.rows.iter().filter(|r| r.status != "ok")
    }
}
