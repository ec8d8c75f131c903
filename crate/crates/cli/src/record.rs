//! Run records and the versioned CSV they are stored in.
//!
//! A runs file starts with the line `# schema: evrp-runs/1`, followed by a
//! header and one row per run. Aggregate rows (`kind = aggregate`) follow
//! the run rows, one per instance, in first-appearance order.
//!
//! | column | run rows | aggregate rows |
//! |---|---|---|
//! | `kind` | `run` | `aggregate` |
//! | `instance` | instance name | instance name |
//! | `seed` | run seed | empty |
//! | `status` | `ok`, `infeasible` or `error: ...` | `ok` if any run succeeded |
//! | `runs` | empty | runs attempted |
//! | `best_tc` | final total cost | best over successful runs |
//! | `avg_tc`, `std_tc` | empty | mean and sample deviation |
//! | `vehicles` | vehicles used | vehicles of the best run |
//! | `time_to_best` | seconds until the final solution was found | mean |
//! | `wall_time` | total seconds | mean |
//! | `ecr_psi`, `ecr_ssi` | share of station insertions only one branch produced | mean |
//! | `tar_psi`, `tar_ssi` | share of wall time spent in each branch | mean |
//! | `log` | convergence log path, if written | empty |
//!
//! `time_to_best`, `wall_time`, `tar_psi` and `tar_ssi` depend on the
//! machine and are left out of [`Row::without_timing`].

use std::io::Write;

use anyhow::{bail, Context, Result};
use evrp_core::hma::HmaResult;
use serde::{Deserialize, Serialize};

pub const RUNS_SCHEMA: &str = "evrp-runs/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub seed: u64,
    pub status: String,
    pub best_tc: Option<f64>,
    pub vehicles: Option<usize>,
    pub time_to_best: Option<f64>,
    pub wall_time: Option<f64>,
    pub ecr_psi: Option<f64>,
    pub ecr_ssi: Option<f64>,
    pub tar_psi: Option<f64>,
    pub tar_ssi: Option<f64>,
    pub log: String,
}

impl RunRecord {
    pub fn from_result(instance: &str, seed: u64, result: &HmaResult, cost: f64, feasible: bool) -> Self {
        let s = &result.stats;
        let produced = s.psi_only + s.ssi_only + s.psi_better + s.ssi_better + s.equal;
        let share = |n: u64| (produced > 0).then(|| n as f64 / produced as f64);
        let of_wall = |t: std::time::Duration| (result.elapsed > 0.0).then(|| t.as_secs_f64() / result.elapsed);
        RunRecord {
            instance: instance.to_owned(),
            seed,
            status: if feasible { "ok" } else { "infeasible" }.to_owned(),
            best_tc: Some(cost),
            vehicles: Some(result.solution.vehicle_count()),
            time_to_best: Some(result.time_to_best),
            wall_time: Some(result.elapsed),
            ecr_psi: share(s.psi_only + s.psi_better),
            ecr_ssi: share(s.ssi_only + s.ssi_better),
            tar_psi: of_wall(s.psi_time),
            tar_ssi: of_wall(s.ssi_time),
            log: String::new(),
        }
    }

    pub fn failed(instance: &str, seed: u64, message: &str) -> Self {
        RunRecord {
            instance: instance.to_owned(),
            seed,
            status: format!("error: {message}"),
            best_tc: None,
            vehicles: None,
            time_to_best: None,
            wall_time: None,
            ecr_psi: None,
            ecr_ssi: None,
            tar_psi: None,
            tar_ssi: None,
            log: String::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Per-instance statistics over its successful runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub instance: String,
    pub runs: usize,
    pub ok_runs: usize,
    pub best_tc: Option<f64>,
    pub avg_tc: Option<f64>,
    pub std_tc: Option<f64>,
    pub vehicles: Option<usize>,
    pub time_to_best: Option<f64>,
    pub wall_time: Option<f64>,
    pub ecr_psi: Option<f64>,
    pub ecr_ssi: Option<f64>,
    pub tar_psi: Option<f64>,
    pub tar_ssi: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn sample_std(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn mean_of(ok: &[&RunRecord], field: impl Fn(&RunRecord) -> Option<f64>) -> Option<f64> {
    let values: Vec<f64> = ok.iter().filter_map(|r| field(r)).collect();
    mean(&values)
}

pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.instance.as_str()) {
            order.push(&r.instance);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let all: Vec<&RunRecord> = records.iter().filter(|r| r.instance == name).collect();
            let ok: Vec<&RunRecord> = all.iter().copied().filter(|r| r.is_ok()).collect();
            let costs: Vec<f64> = ok.iter().filter_map(|r| r.best_tc).collect();
            let best = ok
                .iter()
                .filter(|r| r.best_tc.is_some())
                .min_by(|a, b| a.best_tc.unwrap().total_cmp(&b.best_tc.unwrap()));
            Aggregate {
                instance: name.to_owned(),
                runs: all.len(),
                ok_runs: ok.len(),
                best_tc: best.and_then(|r| r.best_tc),
                avg_tc: mean(&costs),
                std_tc: sample_std(&costs),
                vehicles: best.and_then(|r| r.vehicles),
                time_to_best: mean_of(&ok, |r| r.time_to_best),
                wall_time: mean_of(&ok, |r| r.wall_time),
                ecr_psi: mean_of(&ok, |r| r.ecr_psi),
                ecr_ssi: mean_of(&ok, |r| r.ecr_ssi),
                tar_psi: mean_of(&ok, |r| r.tar_psi),
                tar_ssi: mean_of(&ok, |r| r.tar_ssi),
            }
        })
        .collect()
}

/// One CSV line of a runs file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: String,
    pub instance: String,
    pub seed: Option<u64>,
    pub status: String,
    pub runs: Option<usize>,
    pub best_tc: Option<f64>,
    pub avg_tc: Option<f64>,
    pub std_tc: Option<f64>,
    pub vehicles: Option<usize>,
    pub time_to_best: Option<f64>,
    pub wall_time: Option<f64>,
    pub ecr_psi: Option<f64>,
    pub ecr_ssi: Option<f64>,
    pub tar_psi: Option<f64>,
    pub tar_ssi: Option<f64>,
    pub log: String,
}

impl Row {
    pub fn run(r: &RunRecord) -> Self {
        Row {
            kind: "run".into(),
            instance: r.instance.clone(),
            seed: Some(r.seed),
            status: r.status.clone(),
            runs: None,
            best_tc: r.best_tc,
            avg_tc: None,
            std_tc: None,
            vehicles: r.vehicles,
            time_to_best: r.time_to_best,
            wall_time: r.wall_time,
            ecr_psi: r.ecr_psi,
            ecr_ssi: r.ecr_ssi,
            tar_psi: r.tar_psi,
            tar_ssi: r.tar_ssi,
            log: r.log.clone(),
        }
    }

    pub fn aggregate(a: &Aggregate) -> Self {
        Row {
            kind: "aggregate".into(),
            instance: a.instance.clone(),
            seed: None,
            status: if a.ok_runs > 0 { "ok" } else { "failed" }.into(),
            runs: Some(a.runs),
            best_tc: a.best_tc,
            avg_tc: a.avg_tc,
            std_tc: a.std_tc,
            vehicles: a.vehicles,
            time_to_best: a.time_to_best,
            wall_time: a.wall_time,
            ecr_psi: a.ecr_psi,
            ecr_ssi: a.ecr_ssi,
            tar_psi: a.tar_psi,
            tar_ssi: a.tar_ssi,
            log: String::new(),
        }
    }

    pub fn is_aggregate(&self) -> bool {
        self.kind == "aggregate"
    }

    /// The row with machine-dependent columns cleared.
    pub fn without_timing(&self) -> Self {
        Row {
            time_to_best: None,
            wall_time: None,
            tar_psi: None,
            tar_ssi: None,
            ..self.clone()
        }
    }
}

/// Writes the schema line, the run rows and one aggregate row per instance.
pub fn write_runs<W: Write>(mut out: W, records: &[RunRecord]) -> Result<()> {
    writeln!(out, "# schema: {RUNS_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(Row::run(r))?;
    }
    for a in aggregate(records) {
        w.serialize(Row::aggregate(&a))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs(text: &str) -> Result<Vec<Row>> {
    let first = text.lines().next().unwrap_or_default();
    match first.strip_prefix("# schema: ") {
        Some(RUNS_SCHEMA) => {}
        Some(other) => bail!("unsupported runs schema {other:?}, expected {RUNS_SCHEMA}"),
        None => bail!("missing schema line, expected \"# schema: {RUNS_SCHEMA}\""),
    }
    let mut rows = Vec::new();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    for (k, row) in reader.deserialize().enumerate() {
        rows.push(row.with_context(|| format!("runs row {}", k + 1))?);
    }
    Ok(rows)
}
