//! Instance and solution files.
//!
//! Two instance formats are supported: a Cartesian text format with named
//! columns and `/value/` scalar lines (`akb`), and a versioned line format
//! with explicit distance and time matrices and geographic coordinates
//! (`jd`). Solutions are written with their station charges and a checksum
//! of the instance they belong to.

mod akb;
mod generate;
mod jd;
mod solution;

pub use akb::{parse_akb, write_akb, AkbNode, AkbInstanceFile};
pub use generate::{generate_jd_like, GeneratorConfig, RegionBox};
pub use jd::{parse_jd, write_jd, JD_MAGIC};
pub use solution::{instance_checksum, read_solution, write_solution, SolutionFile, SOLUTION_MAGIC};

use thiserror::Error;

use crate::error::{InstanceError, RouteError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl ParseError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolutionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("solution was written for instance checksum {expected}, this instance has {found}")]
    Checksum { expected: String, found: String },
    #[error("line {line}: unknown node id {id}")]
    UnknownNode { line: usize, id: usize },
    #[error("line {line}: {source}")]
    Route { line: usize, source: RouteError },
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn number(line: usize, token: &str) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::at(line, format!("`{token}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::at(line, format!("`{token}` is not finite")))
    }
}

pub(crate) fn index(line: usize, token: &str) -> Result<usize, ParseError> {
    token
        .parse()
        .map_err(|_| ParseError::at(line, format!("`{token}` is not a non-negative integer")))
}
