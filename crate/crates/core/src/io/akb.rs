//! Cartesian instances with one header row of column names, one row per
//! node and `/value/` scalar lines:
//!
//! ```text
//! StringID Type x    y    delivery pickup ReadyTime DueDate ServiceTime
//! D0       d    40.0 50.0 0        0      0         1236    0
//! S0       f    40.0 50.0 0        0      0         1236    0
//! C20      c    30.0 50.0 10       5      912       967     90
//!
//! Q Vehicle fuel tank capacity /77.75/
//! C Vehicle load capacity /200.0/
//! r fuel consumption rate /1.0/
//! g inverse refueling rate /3.39/
//! v average Velocity /1.0/
//! ```
//!
//! Rows may list nodes in any order; ids are assigned depot first, then
//! customers, then stations, each group in file order. Distances are
//! Euclidean and travel time is distance over velocity (1 when absent).

use std::fmt::Write as _;

use super::{content_lines, number, ParseError};
use crate::model::{CoordMode, Instance, Matrix, Node, NodeKind};
use crate::preprocess::euclidean_matrix;

const COLUMNS: [&str; 9] = [
    "stringid",
    "type",
    "x",
    "y",
    "delivery",
    "pickup",
    "readytime",
    "duedate",
    "servicetime",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AkbNode {
    pub name: String,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    pub delivery: f64,
    pub pickup: f64,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AkbInstanceFile {
    /// Rows in file order.
    pub nodes: Vec<AkbNode>,
    pub battery_capacity: f64,
    pub load_capacity: f64,
    pub consume_rate: f64,
    pub charge_rate: f64,
    pub velocity: f64,
}

fn kind_of(token: &str) -> Option<NodeKind> {
    match token {
        "d" => Some(NodeKind::Depot),
        "c" => Some(NodeKind::Customer),
        "f" => Some(NodeKind::Station),
        _ => None,
    }
}

fn kind_token(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Depot => "d",
        NodeKind::Customer => "c",
        NodeKind::Station => "f",
    }
}

impl AkbInstanceFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let (header_line, header) = lines.next().ok_or(ParseError::Missing("header row"))?;
        let names: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
        let mut position = [0usize; 9];
        for (slot, col) in position.iter_mut().zip(COLUMNS) {
            *slot = names
                .iter()
                .position(|n| n == col)
                .ok_or_else(|| ParseError::at(header_line, format!("missing column `{col}`")))?;
        }

        let mut nodes = Vec::new();
        let mut scalars: [Option<f64>; 5] = [None; 5];
        for (line, text) in lines {
            if let Some(open) = text.find('/') {
                let key = text.split_whitespace().next().unwrap_or("");
                let slot = match key {
                    "Q" => 0,
                    "C" => 1,
                    "r" | "h" => 2,
                    "g" => 3,
                    "v" => 4,
                    _ => return Err(ParseError::at(line, format!("unknown parameter `{key}`"))),
                };
                let rest = &text[open + 1..];
                let close = rest
                    .find('/')
                    .ok_or_else(|| ParseError::at(line, "unterminated `/value/`"))?;
                if scalars[slot].is_some() {
                    return Err(ParseError::at(line, format!("parameter `{key}` given twice")));
                }
                scalars[slot] = Some(number(line, rest[..close].trim())?);
                continue;
            }
            let tokens: Vec<&str> = text.split_whitespace().collect();
            if tokens.len() != names.len() {
                return Err(ParseError::at(
                    line,
                    format!("expected {} fields, found {}", names.len(), tokens.len()),
                ));
            }
            let kind = kind_of(tokens[position[1]])
                .ok_or_else(|| ParseError::at(line, format!("unknown node type `{}`", tokens[position[1]])))?;
            let f = |k: usize| number(line, tokens[position[k]]);
            nodes.push(AkbNode {
                name: tokens[position[0]].to_string(),
                kind,
                x: f(2)?,
                y: f(3)?,
                delivery: f(4)?,
                pickup: f(5)?,
                ready: f(6)?,
                due: f(7)?,
                service: f(8)?,
            });
        }
        let need = |slot: usize, name: &'static str| scalars[slot].ok_or(ParseError::Missing(name));
        Ok(AkbInstanceFile {
            nodes,
            battery_capacity: need(0, "Q")?,
            load_capacity: need(1, "C")?,
            consume_rate: need(2, "r")?,
            charge_rate: need(3, "g")?,
            velocity: scalars[4].unwrap_or(1.0),
        })
    }

    pub fn to_instance(&self, name: &str) -> Result<Instance, ParseError> {
        let depots = self.nodes.iter().filter(|n| n.kind == NodeKind::Depot).count();
        if depots != 1 {
            return Err(ParseError::at(0, format!("expected exactly one depot, found {depots}")));
        }
        if !(self.velocity > 0.0) {
            return Err(ParseError::at(0, format!("velocity {} must be positive", self.velocity)));
        }
        let ordered: Vec<&AkbNode> = [NodeKind::Depot, NodeKind::Customer, NodeKind::Station]
            .into_iter()
            .flat_map(|k| self.nodes.iter().filter(move |n| n.kind == k))
            .collect();
        let nodes: Vec<Node> = ordered
            .iter()
            .enumerate()
            .map(|(id, n)| Node {
                id,
                kind: n.kind,
                name: n.name.clone(),
                delivery: n.delivery,
                pickup: n.pickup,
                ready: n.ready,
                due: n.due,
                service: n.service,
                x: n.x,
                y: n.y,
            })
            .collect();
        let points: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
        let dist = euclidean_matrix(&points);
        let time = Matrix::from_fn(dist.size(), |i, j| dist.get(i, j) / self.velocity);
        let n_customers = nodes.iter().filter(|n| n.kind == NodeKind::Customer).count();
        let instance = Instance {
            name: name.to_string(),
            n_stations: nodes.len() - 1 - n_customers,
            n_customers,
            nodes,
            dist,
            time,
            load_capacity: self.load_capacity,
            battery_capacity: self.battery_capacity,
            charge_rate: self.charge_rate,
            consume_rate: self.consume_rate,
            dispatch_cost: 1000.0,
            distance_cost: 1.0,
            coord_mode: CoordMode::Cartesian,
            triangle_ok: true,
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Rows of `instance` in id order. Travel times are not stored, so
    /// the caller supplies the velocity they were derived from.
    pub fn from_instance(instance: &Instance, velocity: f64) -> Self {
        AkbInstanceFile {
            nodes: instance
                .nodes
                .iter()
                .map(|n| AkbNode {
                    name: n.name.clone(),
                    kind: n.kind,
                    x: n.x,
                    y: n.y,
                    delivery: n.delivery,
                    pickup: n.pickup,
                    ready: n.ready,
                    due: n.due,
                    service: n.service,
                })
                .collect(),
            battery_capacity: instance.battery_capacity,
            load_capacity: instance.load_capacity,
            consume_rate: instance.consume_rate,
            charge_rate: instance.charge_rate,
            velocity,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("StringID Type x y delivery pickup ReadyTime DueDate ServiceTime\n");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {}",
                n.name,
                kind_token(n.kind),
                n.x,
                n.y,
                n.delivery,
                n.pickup,
                n.ready,
                n.due,
                n.service
            );
        }
        let _ = write!(
            out,
            "\nQ Vehicle fuel tank capacity /{}/\nC Vehicle load capacity /{}/\n\
             r fuel consumption rate /{}/\ng inverse refueling rate /{}/\nv average Velocity /{}/\n",
            self.battery_capacity, self.load_capacity, self.consume_rate, self.charge_rate, self.velocity
        );
        out
    }
}

pub fn parse_akb(name: &str, text: &str) -> Result<Instance, ParseError> {
    AkbInstanceFile::parse(text)?.to_instance(name)
}

pub fn write_akb(instance: &Instance, velocity: f64) -> String {
    AkbInstanceFile::from_instance(instance, velocity).render()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
StringID   Type  x     y     delivery pickup ReadyTime DueDate ServiceTime
D0         d     40.0  50.0  0        0      0         1236    0
S0         f     40.0  50.0  0        0      0         1236    0
S3         f     10.0  20.0  0        0      0         1236    0
C1         c     43.0  54.0  10       4      100       400     90

Q Vehicle fuel tank capacity /77.75/
C Vehicle load capacity /200.0/
r fuel consumption rate /1.0/
g inverse refueling rate /3.39/
";

    #[test]
    fn minimal_file() {
        let inst = parse_akb("tiny", MINIMAL).unwrap();
        assert_eq!(inst.n_customers, 1);
        assert_eq!(inst.n_stations, 2);
        assert_eq!(inst.nodes[1].name, "C1");
        assert_eq!(inst.nodes[2].name, "S0");
        assert_eq!(inst.d(0, 1), 5.0);
        assert_eq!(inst.t(0, 1), 5.0);
        assert_eq!((inst.dispatch_cost, inst.distance_cost), (1000.0, 1.0));
        assert!(inst.triangle_ok);
        assert_eq!(inst.charge_rate, 3.39);
    }

    #[test]
    fn distances_symmetric_zero_diagonal() {
        let inst = parse_akb("tiny", MINIMAL).unwrap();
        for i in 0..inst.n_nodes() {
            assert_eq!(inst.d(i, i), 0.0);
            for j in 0..inst.n_nodes() {
                assert_eq!(inst.d(i, j), inst.d(j, i));
            }
        }
    }

    #[test]
    fn velocity_scales_time() {
        let text = format!("{MINIMAL}v average Velocity /2.5/\n");
        let inst = parse_akb("tiny", &text).unwrap();
        assert_eq!(inst.t(0, 1), 2.0);
    }

    #[test]
    fn missing_scalar_is_an_error() {
        let text = MINIMAL.replace("g inverse refueling rate /3.39/\n", "");
        assert_eq!(parse_akb("tiny", &text), Err(ParseError::Missing("g")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = MINIMAL.replace("43.0", "4x3");
        assert!(matches!(parse_akb("tiny", &text), Err(ParseError::Syntax { line: 5, .. })));
        let text = MINIMAL.replace(" c ", " z ");
        assert!(matches!(parse_akb("tiny", &text), Err(ParseError::Syntax { line: 5, .. })));
        let text = MINIMAL.replace("pickup", "demand");
        assert!(matches!(parse_akb("tiny", &text), Err(ParseError::Syntax { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let inst = parse_akb("tiny", MINIMAL).unwrap();
        let again = parse_akb("tiny", &write_akb(&inst, 1.0)).unwrap();
        assert_eq!(inst, again);
    }
}
