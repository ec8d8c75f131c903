//! Solution files.
//!
//! ```text
//! EVRPTWSPD-SOLUTION 1
//! instance <name>
//! checksum <sha256 of the instance data, hex>
//! vehicles <K>
//! cost <TC>
//! route 0 5 12@3.25 3 0
//! END
//! ```
//!
//! A `@amount` suffix gives the energy charged at a station visit; a bare
//! station id means zero.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{content_lines, index, number, ParseError, SolutionError};
use crate::model::{CoordMode, Instance, NodeKind, Route, Solution};

pub const SOLUTION_MAGIC: &str = "EVRPTWSPD-SOLUTION 1";

/// Hex SHA-256 over every field of the instance that affects feasibility
/// or cost. The name is left out so renamed copies still match.
pub fn instance_checksum(instance: &Instance) -> String {
    let mut h = Sha256::new();
    let mut put = |v: f64| h.update(v.to_bits().to_le_bytes());
    put(instance.n_customers as f64);
    put(instance.n_stations as f64);
    for n in &instance.nodes {
        put(match n.kind {
            NodeKind::Depot => 0.0,
            NodeKind::Customer => 1.0,
            NodeKind::Station => 2.0,
        });
        for v in [n.x, n.y, n.delivery, n.pickup, n.ready, n.due, n.service] {
            put(v);
        }
    }
    for m in [&instance.dist, &instance.time] {
        for i in 0..m.size() {
            m.row(i).iter().for_each(|&v| put(v));
        }
    }
    for v in [
        instance.load_capacity,
        instance.battery_capacity,
        instance.charge_rate,
        instance.consume_rate,
        instance.dispatch_cost,
        instance.distance_cost,
    ] {
        put(v);
    }
    put(match instance.coord_mode {
        CoordMode::Cartesian => 0.0,
        CoordMode::Geographic => 1.0,
    });
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Contents of a solution file before it is bound to an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub instance: String,
    pub checksum: String,
    pub vehicles: usize,
    pub cost: f64,
    /// Visits and per-visit charges of each route.
    pub routes: Vec<(Vec<usize>, Vec<f64>)>,
    /// Source line of each route; empty when built in memory.
    pub lines: Vec<usize>,
}

impl SolutionFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        match lines.next() {
            Some((_, t)) if t == SOLUTION_MAGIC => {}
            Some((line, t)) => {
                return Err(ParseError::at(line, format!("expected `{SOLUTION_MAGIC}`, found `{t}`")))
            }
            None => return Err(ParseError::Missing("format header")),
        }
        let mut field = |key: &'static str| -> Result<(usize, String), ParseError> {
            let (line, t) = lines.next().ok_or(ParseError::Missing(key))?;
            match t.split_once(char::is_whitespace) {
                Some((k, v)) if k == key => Ok((line, v.trim().to_string())),
                _ => Err(ParseError::at(line, format!("expected `{key} <value>`"))),
            }
        };
        let instance = field("instance")?.1;
        let checksum = field("checksum")?.1;
        let (line, v) = field("vehicles")?;
        let vehicles = index(line, &v)?;
        let (line, v) = field("cost")?;
        let cost = number(line, &v)?;

        let mut routes = Vec::with_capacity(vehicles);
        let mut route_lines = Vec::with_capacity(vehicles);
        loop {
            let (line, t) = lines.next().ok_or(ParseError::Missing("END"))?;
            if t == "END" {
                break;
            }
            let mut tokens = t.split_whitespace();
            if tokens.next() != Some("route") {
                return Err(ParseError::at(line, "expected `route` or `END`"));
            }
            let (mut visits, mut charges) = (Vec::new(), Vec::new());
            for tok in tokens {
                let (id, q) = match tok.split_once('@') {
                    Some((id, q)) => (index(line, id)?, number(line, q)?),
                    None => (index(line, tok)?, 0.0),
                };
                visits.push(id);
                charges.push(q);
            }
            routes.push((visits, charges));
            route_lines.push(line);
        }
        if let Some((line, t)) = lines.next() {
            return Err(ParseError::at(line, format!("unexpected content after END: `{t}`")));
        }
        if routes.len() != vehicles {
            return Err(ParseError::at(
                0,
                format!("header declares {vehicles} vehicles but {} routes follow", routes.len()),
            ));
        }
        Ok(SolutionFile {
            instance,
            checksum,
            vehicles,
            cost,
            routes,
            lines: route_lines,
        })
    }

    /// Binds the routes to `instance`, checking the checksum and node ids.
    pub fn into_solution(self, instance: &Instance) -> Result<Solution, SolutionError> {
        let found = instance_checksum(instance);
        if found != self.checksum {
            return Err(SolutionError::Checksum {
                expected: self.checksum,
                found,
            });
        }
        let mut routes = Vec::with_capacity(self.routes.len());
        for (k, (visits, charges)) in self.routes.into_iter().enumerate() {
            let line = self.lines.get(k).copied().unwrap_or(0);
            if let Some(&id) = visits.iter().find(|&&v| v >= instance.n_nodes()) {
                return Err(SolutionError::UnknownNode { line, id });
            }
            routes.push(
                Route::new(instance, visits, charges).map_err(|source| SolutionError::Route { line, source })?,
            );
        }
        Ok(Solution::new(routes))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SOLUTION_MAGIC}");
        let _ = writeln!(out, "instance {}", self.instance);
        let _ = writeln!(out, "checksum {}", self.checksum);
        let _ = writeln!(out, "vehicles {}", self.vehicles);
        let _ = writeln!(out, "cost {}", self.cost);
        for (visits, charges) in &self.routes {
            out.push_str("route");
            for (&v, &q) in visits.iter().zip(charges) {
                if q != 0.0 {
                    let _ = write!(out, " {v}@{q}");
                } else {
                    let _ = write!(out, " {v}");
                }
            }
            out.push('\n');
        }
        out.push_str("END\n");
        out
    }
}

pub fn write_solution(solution: &Solution, instance: &Instance) -> String {
    SolutionFile {
        instance: instance.name.clone(),
        checksum: instance_checksum(instance),
        vehicles: solution.vehicle_count(),
        cost: solution.cost(instance),
        routes: solution
            .routes
            .iter()
            .map(|r| (r.visits().to_vec(), r.charges().to_vec()))
            .collect(),
        lines: Vec::new(),
    }
    .render()
}

pub fn read_solution(text: &str, instance: &Instance) -> Result<Solution, SolutionError> {
    SolutionFile::parse(text)?.into_solution(instance)
}
