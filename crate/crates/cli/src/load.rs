//! Instance files and exit codes.

use std::fmt;
use std::path::Path;

use evrp_core::io::{parse_akb, parse_jd, JD_MAGIC};
use evrp_core::Instance;

/// A command failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub const INFEASIBLE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const CHECKSUM: i32 = 3;
    pub const SOLVER: i32 = 4;

    pub fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure::new(Failure::INPUT, "input", message)
    }
}

/// One line, `key=value` fields, for scripts reading stderr.
impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error kind={} code={} message={:?}", self.kind, self.code, self.message)
    }
}

impl std::error::Error for Failure {}

/// Reads an akb or jd instance; the format is recognised by the jd header.
/// akb instances are named after the file stem.
pub fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with(JD_MAGIC) {
        parse_jd(&text)
    } else {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
        parse_akb(name, &text)
    };
    parsed.map_err(|e| Failure::new(Failure::INPUT, "parse", format!("{}: {e}", path.display())))
}
