//! Solver front end: instance loading, parameter profiles, batch runs and
//! gap reports. The `evrp` binary is a thin clap layer over this crate.

pub mod bench;
pub mod config;
pub mod load;
pub mod record;
pub mod report;

pub use bench::{derive_seed, run_bench, worker_count, BenchPlan, Manifest};
pub use config::{load_profile, Overrides, PROFILES};
pub use load::{load_instance, Failure};
pub use record::{aggregate, Aggregate, Row, RunRecord, RUNS_SCHEMA};
pub use report::{gap, gap_report, read_reference, GapReport, GapRow};
