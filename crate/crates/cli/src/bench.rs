//! Batch runs over a manifest of instances.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use evrp_core::hma::{hma_solve, HmaParams, HmaResult};
use evrp_core::{check_feasibility, Instance};
use rayon::prelude::*;

use crate::load::load_instance;
use crate::record::RunRecord;

/// Instance paths, one per line. Blank lines and `#` comments are
/// ignored; relative paths are taken from the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<PathBuf>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Self {
        let entries = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| base.join(l))
            .collect();
        Manifest { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(Manifest::parse(&text, path.parent().unwrap_or(Path::new("."))))
    }
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub params: HmaParams,
    pub repetitions: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Directory for per-run convergence logs; none are written if absent.
    pub log_dir: Option<PathBuf>,
}

/// Seed of repetition `rep` on the `index`-th manifest entry.
pub fn derive_seed(base: u64, index: usize, rep: usize) -> u64 {
    // splitmix64 finaliser over a packed key
    let mut z = base ^ ((index as u64) << 32 | rep as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Worker cap: the flag, else `EVRP_WORKERS`, else the available cores.
pub fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("EVRP_WORKERS").ok()?.trim().parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Convergence log as `elapsed,cost,vehicles` lines.
pub fn render_log(result: &HmaResult) -> String {
    let mut out = String::from("elapsed,cost,vehicles\n");
    for e in &result.log {
        out.push_str(&format!("{},{},{}\n", e.elapsed, e.cost, e.vehicles));
    }
    out
}

fn solve_one(instance: &Instance, seed: u64, plan: &BenchPlan) -> RunRecord {
    let params = HmaParams {
        seed,
        ..plan.params.clone()
    };
    let result = match hma_solve(instance, &params) {
        Ok(r) => r,
        Err(e) => return RunRecord::failed(&instance.name, seed, &e.to_string()),
    };
    let report = check_feasibility(instance, &result.solution);
    let mut record = RunRecord::from_result(&instance.name, seed, &result, report.total_cost, report.is_feasible());
    if let Some(dir) = &plan.log_dir {
        let path = dir.join(format!("{}_{seed}.csv", instance.name));
        match std::fs::write(&path, render_log(&result)) {
            Ok(()) => record.log = path.display().to_string(),
            Err(e) => record.status = format!("error: writing {}: {e}", path.display()),
        }
    }
    record
}

/// Runs every repetition of every entry, at most `plan.workers` at a
/// time. Records come back in manifest order, repetitions in order, so
/// the output does not depend on the worker count. An entry that cannot
/// be loaded yields failed records and the batch goes on.
pub fn run_bench(manifest: &Manifest, plan: &BenchPlan) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(plan.workers).build()?;
    let loaded: Vec<(String, Result<Instance, String>)> = manifest
        .entries
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            (name, load_instance(p).map_err(|f| f.message))
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..loaded.len())
        .flat_map(|i| (0..plan.repetitions).map(move |r| (i, r)))
        .collect();
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, rep)| {
                let seed = derive_seed(plan.base_seed, i, rep);
                match &loaded[i].1 {
                    Ok(instance) => solve_one(instance, seed, plan),
                    Err(message) => RunRecord::failed(&loaded[i].0, seed, message),
                }
            })
            .collect()
    });
    Ok(records)
}
