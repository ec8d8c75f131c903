use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evrp_cli::bench::{render_log, run_bench, worker_count, BenchPlan, Manifest};
use evrp_cli::record::{read_runs, write_runs};
use evrp_cli::{gap_report, load_instance, load_profile, read_reference, Failure, Overrides, RunRecord};
use evrp_core::hma::hma_solve;
use evrp_core::io::{generate_jd_like, read_solution, write_jd, write_solution, GeneratorConfig, SolutionError};
use evrp_core::check_feasibility;

const AKB_REFERENCE: &str = include_str!("../data/akb_reference.csv");

/// Electric vehicle routing with time windows, simultaneous pickup and
/// delivery, and partial recharging.
#[derive(Parser)]
#[command(name = "evrp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the solution file.
    Solve {
        instance: PathBuf,
        /// Solution file; defaults to `<instance stem>.sol`.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the run record as a runs CSV.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Also write the convergence log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Check a solution file against its instance.
    Validate { instance: PathBuf, solution: PathBuf },
    /// Run every instance of a manifest several times.
    Bench {
        manifest: PathBuf,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Parallel runs; defaults to EVRP_WORKERS, then the core count.
        #[arg(long)]
        workers: Option<usize>,
        /// Runs CSV; defaults to stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Directory for per-run convergence logs.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Gap of a runs CSV against a reference table.
    Report {
        runs: PathBuf,
        /// Reference CSV with an `instance` column; defaults to the
        /// bundled akb table.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "reference_tc")]
        column: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a jd-style instance.
    Gen {
        #[arg(long)]
        customers: usize,
        #[arg(long)]
        stations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Generator settings as TOML; missing keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    /// Shipped profile name (akb_small, akb_medium, jd) or a profile file.
    #[arg(long, default_value = "akb_small")]
    profile: String,
    /// Run seed for `solve`, base seed for `bench`.
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds per run.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    g1: Option<usize>,
    #[arg(long)]
    g2: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long)]
    subproblems: Option<usize>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<evrp_core::hma::HmaParams, Failure> {
        let base = load_profile(&self.profile).map_err(|e| Failure::new(Failure::INPUT, "profile", format!("{e:#}")))?;
        Ok(Overrides {
            seed: self.seed,
            time_limit: self.time_limit,
            g1: self.g1,
            g2: self.g2,
            population: self.population,
            sr: self.sr,
            subproblems: self.subproblems,
        }
        .apply(base))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new(Failure::INPUT, "output", format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(Failure::INPUT, "output", e.to_string())),
    }
}

fn runs_csv(records: &[RunRecord]) -> Result<String, Failure> {
    let mut buf = Vec::new();
    write_runs(&mut buf, records).map_err(|e| Failure::new(Failure::INPUT, "output", e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn solve(
    instance_path: &Path,
    out: Option<PathBuf>,
    record: Option<PathBuf>,
    log: Option<PathBuf>,
    params: &ParamArgs,
) -> Result<(), Failure> {
    let instance = load_instance(instance_path)?;
    let params = params.resolve()?;
    let result = hma_solve(&instance, &params).map_err(|e| Failure::new(Failure::SOLVER, "solve", e.to_string()))?;
    let report = check_feasibility(&instance, &result.solution);
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.sol", instance.name)));
    write(&out, &write_solution(&result.solution, &instance))?;
    let mut run = RunRecord::from_result(&instance.name, params.seed, &result, report.total_cost, report.is_feasible());
    if let Some(path) = &log {
        write(path, &render_log(&result))?;
        run.log = path.display().to_string();
    }
    if let Some(path) = &record {
        write(path, &runs_csv(std::slice::from_ref(&run))?)?;
    }
    println!(
        "instance={} seed={} tc={:.2} vehicles={} time_to_best={:.3} wall_time={:.3} feasible={} solution={}",
        instance.name,
        params.seed,
        report.total_cost,
        report.vehicle_count,
        result.time_to_best,
        result.elapsed,
        report.is_feasible(),
        out.display()
    );
    if report.is_feasible() {
        Ok(())
    } else {
        Err(Failure::new(Failure::INFEASIBLE, "infeasible", "solver returned an infeasible solution"))
    }
}

fn validate(instance_path: &Path, solution_path: &Path) -> Result<(), Failure> {
    let instance = load_instance(instance_path)?;
    let text = read(solution_path)?;
    let solution = read_solution(&text, &instance).map_err(|e| match e {
        SolutionError::Checksum { .. } => Failure::new(Failure::CHECKSUM, "checksum", e.to_string()),
        other => Failure::new(Failure::INPUT, "parse", format!("{}: {other}", solution_path.display())),
    })?;
    let report = check_feasibility(&instance, &solution);
    for (constraint, holds) in report.verdicts() {
        println!("{constraint}: {}", if holds { "ok" } else { "violated" });
    }
    for v in &report.violations {
        if v.position == usize::MAX {
            println!("violation {} route {}", v.constraint, v.route);
        } else {
            println!("violation {} route {} position {}", v.constraint, v.route, v.position);
        }
    }
    println!("vehicles {}", report.vehicle_count);
    println!("distance {:.6}", report.total_distance);
    println!("tc {:.6}", report.total_cost);
    if report.is_feasible() {
        println!("feasible");
        Ok(())
    } else {
        Err(Failure::new(
            Failure::INFEASIBLE,
            "infeasible",
            format!("{} violation(s)", report.violations.len()),
        ))
    }
}

#[allow(clippy::too_many_arguments)]
fn bench(
    manifest: &Path,
    reps: usize,
    workers: Option<usize>,
    out: Option<PathBuf>,
    log_dir: Option<PathBuf>,
    params: &ParamArgs,
) -> Result<(), Failure> {
    let manifest = Manifest::load(manifest).map_err(|e| Failure::input(format!("{e:#}")))?;
    if let Some(dir) = &log_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    let resolved = params.resolve()?;
    let plan = BenchPlan {
        base_seed: resolved.seed,
        params: resolved,
        repetitions: reps,
        workers: worker_count(workers),
        log_dir,
    };
    let records = run_bench(&manifest, &plan).map_err(|e| Failure::new(Failure::SOLVER, "bench", e.to_string()))?;
    for r in records.iter().filter(|r| !r.is_ok()) {
        eprintln!("warning: {} seed {}: {}", r.instance, r.seed, r.status);
    }
    emit(out.as_deref(), &runs_csv(&records)?)
}

fn report(runs: &Path, reference: Option<PathBuf>, column: &str, out: Option<PathBuf>) -> Result<(), Failure> {
    let rows = read_runs(&read(runs)?).map_err(|e| Failure::new(Failure::INPUT, "parse", format!("{e:#}")))?;
    let table = match &reference {
        Some(path) => read(path)?,
        None => AKB_REFERENCE.to_owned(),
    };
    let reference = read_reference(&table, column).map_err(|e| Failure::new(Failure::INPUT, "parse", format!("{e:#}")))?;
    let gaps = gap_report(&rows, &reference);
    for row in gaps.flagged() {
        eprintln!("warning: {}: {}", row.instance, row.status);
    }
    let mut buf = Vec::new();
    gaps.write(&mut buf).map_err(|e| Failure::new(Failure::INPUT, "output", e.to_string()))?;
    emit(out.as_deref(), &String::from_utf8(buf).expect("csv output is utf-8"))
}

fn generate(customers: usize, stations: usize, seed: u64, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), Failure> {
    let config: GeneratorConfig = match &config {
        Some(path) => toml::from_str(&read(path)?).map_err(|e| Failure::new(Failure::INPUT, "parse", format!("{}: {e}", path.display())))?,
        None => GeneratorConfig::default(),
    };
    let instance = generate_jd_like(customers, stations, seed, &config);
    emit(out.as_deref(), &write_jd(&instance))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            instance,
            out,
            record,
            log,
            params,
        } => solve(&instance, out, record, log, &params),
        Command::Validate { instance, solution } => validate(&instance, &solution),
        Command::Bench {
            manifest,
            reps,
            workers,
            out,
            log_dir,
            params,
        } => bench(&manifest, reps, workers, out, log_dir, &params),
        Command::Report {
            runs,
            reference,
            column,
            out,
        } => report(&runs, reference, &column, out),
        Command::Gen {
            customers,
            stations,
            seed,
            config,
            out,
        } => generate(customers, stations, seed, config, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.code as u8)
        }
    }
}
