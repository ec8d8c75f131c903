//! Geographic instances with explicit matrices.
//!
//! ```text
//! EVRPTWSPD-JD 1
//! name <name>
//! customers <M>
//! stations <P>
//! Q <battery capacity>
//! C <load capacity>
//! g <charging time per unit of energy>
//! h <energy per unit of distance>
//! mu1 <cost per vehicle>         optional, default 300
//! mu2 <cost per unit distance>   optional, default 0.014
//! NODES
//! <id> <d|c|f> <lng> <lat> <delivery> <pickup> <ready> <due> <service>
//! ...                            1 + M + P rows, ids 0..n in order
//! DISTANCE
//! <n rows of n values>
//! TIME
//! <n rows of n values>
//! END
//! ```
//!
//! `#` starts a comment. Matrices are taken verbatim and need not be
//! symmetric or metric.

use std::fmt::Write as _;

use super::{content_lines, index, number, ParseError};
use crate::model::{CoordMode, Instance, Matrix, Node, NodeKind};

pub const JD_MAGIC: &str = "EVRPTWSPD-JD 1";

const DEFAULT_MU1: f64 = 300.0;
const DEFAULT_MU2: f64 = 0.014;

#[derive(Default)]
struct Header {
    name: Option<String>,
    customers: Option<usize>,
    stations: Option<usize>,
    q: Option<f64>,
    c: Option<f64>,
    g: Option<f64>,
    h: Option<f64>,
    mu1: Option<f64>,
    mu2: Option<f64>,
}

fn set<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(ParseError::at(line, format!("`{key}` given twice")));
    }
    *slot = Some(value);
    Ok(())
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    n: usize,
    what: &'static str,
) -> Result<Matrix, ParseError> {
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (line, text) = lines.next().ok_or(ParseError::Missing(what))?;
        let row = text
            .split_whitespace()
            .map(|t| number(line, t))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != n {
            return Err(ParseError::at(
                line,
                format!("{what} row {i} has {} entries, expected {n}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|&v| v < 0.0) {
            return Err(ParseError::at(line, format!("negative {what} entry ({i},{j})")));
        }
        rows.push(row);
    }
    Ok(Matrix::from_rows(rows).expect("rows checked square"))
}

fn expect_keyword<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &'static str,
) -> Result<(), ParseError> {
    match lines.next() {
        Some((_, t)) if t == keyword => Ok(()),
        Some((line, t)) => Err(ParseError::at(line, format!("expected `{keyword}`, found `{t}`"))),
        None => Err(ParseError::Missing(keyword)),
    }
}

pub fn parse_jd(text: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, t)) if t == JD_MAGIC => {}
        Some((line, t)) => return Err(ParseError::at(line, format!("expected `{JD_MAGIC}`, found `{t}`"))),
        None => return Err(ParseError::Missing("format header")),
    }

    let mut h = Header::default();
    loop {
        let (line, text) = lines.next().ok_or(ParseError::Missing("NODES"))?;
        if text == "NODES" {
            break;
        }
        let mut tokens = text.split_whitespace();
        let key = tokens.next().unwrap_or("");
        let value = tokens
            .next()
            .ok_or_else(|| ParseError::at(line, format!("`{key}` has no value")))?;
        if tokens.next().is_some() {
            return Err(ParseError::at(line, format!("`{key}` takes a single value")));
        }
        match key {
            "name" => set(&mut h.name, value.to_string(), line, key)?,
            "customers" => set(&mut h.customers, index(line, value)?, line, key)?,
            "stations" => set(&mut h.stations, index(line, value)?, line, key)?,
            "Q" => set(&mut h.q, number(line, value)?, line, key)?,
            "C" => set(&mut h.c, number(line, value)?, line, key)?,
            "g" => set(&mut h.g, number(line, value)?, line, key)?,
            "h" => set(&mut h.h, number(line, value)?, line, key)?,
            "mu1" => set(&mut h.mu1, number(line, value)?, line, key)?,
            "mu2" => set(&mut h.mu2, number(line, value)?, line, key)?,
            _ => return Err(ParseError::at(line, format!("unknown key `{key}`"))),
        }
    }
    let name = h.name.ok_or(ParseError::Missing("name"))?;
    let m = h.customers.ok_or(ParseError::Missing("customers"))?;
    let p = h.stations.ok_or(ParseError::Missing("stations"))?;
    let n = 1 + m + p;

    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        let (line, text) = lines.next().ok_or(ParseError::Missing("node rows"))?;
        let t: Vec<&str> = text.split_whitespace().collect();
        if t.len() != 9 {
            return Err(ParseError::at(line, format!("node row has {} fields, expected 9", t.len())));
        }
        if index(line, t[0])? != id {
            return Err(ParseError::at(line, format!("node id {} out of order, expected {id}", t[0])));
        }
        let kind = match t[1] {
            "d" => NodeKind::Depot,
            "c" => NodeKind::Customer,
            "f" => NodeKind::Station,
            other => return Err(ParseError::at(line, format!("unknown node kind `{other}`"))),
        };
        let f = |k: usize| number(line, t[k]);
        nodes.push(Node {
            id,
            kind,
            name: id.to_string(),
            x: f(2)?,
            y: f(3)?,
            delivery: f(4)?,
            pickup: f(5)?,
            ready: f(6)?,
            due: f(7)?,
            service: f(8)?,
        });
    }
    expect_keyword(&mut lines, "DISTANCE")?;
    let dist = read_matrix(&mut lines, n, "distance")?;
    expect_keyword(&mut lines, "TIME")?;
    let time = read_matrix(&mut lines, n, "time")?;
    expect_keyword(&mut lines, "END")?;
    if let Some((line, t)) = lines.next() {
        return Err(ParseError::at(line, format!("unexpected content after END: `{t}`")));
    }

    let instance = Instance {
        name,
        nodes,
        n_customers: m,
        n_stations: p,
        dist,
        time,
        battery_capacity: h.q.ok_or(ParseError::Missing("Q"))?,
        load_capacity: h.c.ok_or(ParseError::Missing("C"))?,
        charge_rate: h.g.ok_or(ParseError::Missing("g"))?,
        consume_rate: h.h.ok_or(ParseError::Missing("h"))?,
        dispatch_cost: h.mu1.unwrap_or(DEFAULT_MU1),
        distance_cost: h.mu2.unwrap_or(DEFAULT_MU2),
        coord_mode: CoordMode::Geographic,
        triangle_ok: false,
    };
    instance.validate()?;
    Ok(instance)
}

/// Serializes an instance in the jd grammar. Node names are not stored;
/// ids stand in for them.
pub fn write_jd(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{JD_MAGIC}");
    let _ = writeln!(out, "name {}", instance.name);
    let _ = writeln!(out, "customers {}", instance.n_customers);
    let _ = writeln!(out, "stations {}", instance.n_stations);
    let _ = writeln!(out, "Q {}", instance.battery_capacity);
    let _ = writeln!(out, "C {}", instance.load_capacity);
    let _ = writeln!(out, "g {}", instance.charge_rate);
    let _ = writeln!(out, "h {}", instance.consume_rate);
    let _ = writeln!(out, "mu1 {}", instance.dispatch_cost);
    let _ = writeln!(out, "mu2 {}", instance.distance_cost);
    out.push_str("NODES\n");
    for n in &instance.nodes {
        let kind = match n.kind {
            NodeKind::Depot => "d",
            NodeKind::Customer => "c",
            NodeKind::Station => "f",
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            n.id, kind, n.x, n.y, n.delivery, n.pickup, n.ready, n.due, n.service
        );
    }
    for (title, m) in [("DISTANCE", &instance.dist), ("TIME", &instance.time)] {
        out.push_str(title);
        out.push('\n');
        for i in 0..m.size() {
            let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
EVRPTWSPD-JD 1
# two nodes and nothing else
name toy
customers 1
stations 0
Q 50
C 100
g 1.5
h 0.001
NODES
0 d 116.4 39.9 0 0 0 720 0
1 c 116.41 39.91 5 3 0 600 10
DISTANCE
0 1200.5
1300.25 0
TIME
0 3
3.25 0
END
";

    #[test]
    fn toy_matrices_verbatim() {
        let inst = parse_jd(TOY).unwrap();
        assert_eq!(inst.n_nodes(), 2);
        assert_eq!(inst.d(0, 1), 1200.5);
        assert_eq!(inst.d(1, 0), 1300.25);
        assert_eq!(inst.t(1, 0), 3.25);
        assert_eq!((inst.dispatch_cost, inst.distance_cost), (300.0, 0.014));
        assert!(!inst.triangle_ok);
        assert_eq!(inst.coord_mode, CoordMode::Geographic);
    }

    #[test]
    fn mu_override() {
        let text = TOY.replace("NODES", "mu1 10\nmu2 2\nNODES");
        let inst = parse_jd(&text).unwrap();
        assert_eq!((inst.dispatch_cost, inst.distance_cost), (10.0, 2.0));
    }

    #[test]
    fn rejects_bad_matrices() {
        let short = TOY.replace("0 1200.5\n", "0\n");
        assert!(matches!(parse_jd(&short), Err(ParseError::Syntax { line: 14, .. })));
        let negative = TOY.replace("3.25 0", "-3.25 0");
        assert!(matches!(parse_jd(&negative), Err(ParseError::Syntax { line: 18, .. })));
    }

    #[test]
    fn missing_scalar() {
        let text = TOY.replace("h 0.001\n", "");
        assert_eq!(parse_jd(&text), Err(ParseError::Missing("h")));
    }

    #[test]
    fn round_trip() {
        let inst = parse_jd(TOY).unwrap();
        let text = write_jd(&inst);
        assert_eq!(parse_jd(&text).unwrap(), inst);
        assert_eq!(write_jd(&parse_jd(&text).unwrap()), text);
    }
}
