//! Problem and solution data model.
//!
//! Node ids follow a fixed layout: the depot is `0`, customers are
//! `1..=M` and charging stations are `M+1..=M+P`. Routes store station
//! visits inline; a station may appear several times in one route.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{InstanceError, RouteError};

pub type NodeId = usize;

/// Absolute tolerance used by every feasibility comparison.
pub const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Depot,
    Customer,
    Station,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoordMode {
    /// Planar coordinates in distance units.
    Cartesian,
    /// `x` is longitude and `y` latitude, in degrees.
    Geographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Label carried over from the instance file.
    pub name: String,
    pub delivery: f64,
    pub pickup: f64,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
    pub x: f64,
    pub y: f64,
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// An immutable EVRP-TW-SPD problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub nodes: Vec<Node>,
    pub n_customers: usize,
    pub n_stations: usize,
    pub dist: Matrix,
    pub time: Matrix,
    /// C
    pub load_capacity: f64,
    /// Q
    pub battery_capacity: f64,
    /// g, time needed to charge one unit of energy.
    pub charge_rate: f64,
    /// h, energy consumed per unit of distance.
    pub consume_rate: f64,
    /// mu1, cost per dispatched vehicle.
    pub dispatch_cost: f64,
    /// mu2, cost per unit of distance.
    pub distance_cost: f64,
    pub coord_mode: CoordMode,
    /// Set when travel times are known to satisfy the triangle inequality,
    /// either natively or after hyperarc closure.
    pub triangle_ok: bool,
}

impl Instance {
    pub const DEPOT: NodeId = 0;

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<NodeId> {
        1..=self.n_customers
    }

    pub fn stations(&self) -> std::ops::Range<NodeId> {
        self.n_customers + 1..self.n_customers + 1 + self.n_stations
    }

    #[inline]
    pub fn is_customer(&self, id: NodeId) -> bool {
        id >= 1 && id <= self.n_customers
    }

    #[inline]
    pub fn is_station(&self, id: NodeId) -> bool {
        id > self.n_customers && id < self.nodes.len()
    }

    #[inline]
    pub fn d(&self, i: NodeId, j: NodeId) -> f64 {
        self.dist.get(i, j)
    }

    #[inline]
    pub fn t(&self, i: NodeId, j: NodeId) -> f64 {
        self.time.get(i, j)
    }

    /// Depot opening time, e_0.
    pub fn start_time(&self) -> f64 {
        self.nodes[0].ready
    }

    /// Depot closing time, l_0.
    pub fn horizon(&self) -> f64 {
        self.nodes[0].due
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(InstanceError::NoDepot);
        }
        if n != 1 + self.n_customers + self.n_stations {
            return Err(InstanceError::NodeOrder {
                index: n,
                id: 1 + self.n_customers + self.n_stations,
            });
        }
        for (index, node) in self.nodes.iter().enumerate() {
            if node.id != index {
                return Err(InstanceError::NodeOrder { index, id: node.id });
            }
            let expected = if index == 0 {
                NodeKind::Depot
            } else if index <= self.n_customers {
                NodeKind::Customer
            } else {
                NodeKind::Station
            };
            if node.kind != expected {
                return Err(InstanceError::NodeKind(index));
            }
            let bad = |reason: &str| InstanceError::NodeAttribute {
                id: index,
                reason: reason.to_string(),
            };
            let values = [node.delivery, node.pickup, node.ready, node.due, node.service];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite attribute"));
            }
            if node.delivery < 0.0 || node.pickup < 0.0 || node.service < 0.0 {
                return Err(bad("negative demand or service time"));
            }
            if node.ready > node.due {
                return Err(bad("time window opens after it closes"));
            }
            if expected != NodeKind::Customer {
                if node.delivery != 0.0 || node.pickup != 0.0 || node.service != 0.0 {
                    return Err(bad("depot and stations must have zero demand and service"));
                }
                if index != 0
                    && (node.ready != self.nodes[0].ready || node.due != self.nodes[0].due)
                {
                    return Err(bad("station time window must equal the depot's"));
                }
            }
        }
        for (name, m) in [("distance", &self.dist), ("time", &self.time)] {
            if m.size() != n {
                return Err(InstanceError::MatrixShape {
                    name,
                    rows: m.size(),
                    cols: m.size(),
                    expected: n,
                });
            }
            for i in 0..n {
                for j in 0..n {
                    let value = m.get(i, j);
                    let ok = value.is_finite() && value >= 0.0 && (i != j || value == 0.0);
                    if !ok {
                        return Err(InstanceError::MatrixEntry { name, i, j, value });
                    }
                }
            }
        }
        let positive = [
            ("C", self.load_capacity),
            ("Q", self.battery_capacity),
            ("g", self.charge_rate),
            ("h", self.consume_rate),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(InstanceError::Parameter { name, value });
            }
        }
        for (name, value) in [("mu1", self.dispatch_cost), ("mu2", self.distance_cost)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(InstanceError::Parameter { name, value });
            }
        }
        Ok(())
    }
}

/// Constraint tags, numbered as in the mathematical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Routes start and end at the depot.
    Endpoints,
    /// Every customer served exactly once.
    Coverage,
    /// Load within [0, C].
    Capacity,
    /// Arrival no later than the window close.
    TimeWindow,
    /// Depot departure and return within the depot window.
    Depot,
    /// Battery within [0, Q] and never decreasing at a visit.
    Battery,
}

impl Constraint {
    pub const ALL: [Constraint; 6] = [
        Constraint::Endpoints,
        Constraint::Coverage,
        Constraint::Capacity,
        Constraint::TimeWindow,
        Constraint::Depot,
        Constraint::Battery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::Endpoints => "endpoints",
            Constraint::Coverage => "coverage",
            Constraint::Capacity => "capacity",
            Constraint::TimeWindow => "time-window",
            Constraint::Depot => "depot",
            Constraint::Battery => "battery",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluation trace of one route.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEval {
    /// Total distance.
    pub td: f64,
    pub arrive: Vec<f64>,
    pub depart: Vec<f64>,
    pub batt_arrive: Vec<f64>,
    pub batt_depart: Vec<f64>,
    /// Load on arrival.
    pub load: Vec<f64>,
    /// True iff capacity, time window, depot and battery constraints hold.
    pub feasible: bool,
    pub violations: Vec<(usize, Constraint)>,
}

impl RouteEval {
    pub fn violates(&self, c: Constraint) -> bool {
        self.violations.iter().any(|&(_, v)| v == c)
    }

    /// Number of visits arriving with a negative battery level.
    pub fn negative_battery_count(&self) -> usize {
        self.batt_arrive.iter().filter(|&&y| y < -EPS).count()
    }

    /// Feasible when the battery constraint is ignored.
    pub fn feasible_without_battery(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|&(_, c)| c != Constraint::Battery)
    }
}

fn check_structure(
    instance: &Instance,
    visits: &[NodeId],
    charges: &[f64],
) -> Result<(), RouteError> {
    if visits.len() < 2 || visits[0] != Instance::DEPOT || visits[visits.len() - 1] != Instance::DEPOT
    {
        return Err(RouteError::Endpoints);
    }
    if charges.len() != visits.len() {
        return Err(RouteError::ChargeLength {
            visits: visits.len(),
            charges: charges.len(),
        });
    }
    let mut seen = vec![false; instance.n_customers + 1];
    for (pos, &v) in visits.iter().enumerate() {
        if v >= instance.n_nodes() {
            return Err(RouteError::UnknownNode(v));
        }
        if v == Instance::DEPOT && pos != 0 && pos != visits.len() - 1 {
            return Err(RouteError::InteriorDepot(pos));
        }
        if instance.is_customer(v) {
            if seen[v] {
                return Err(RouteError::DuplicateCustomer(v));
            }
            seen[v] = true;
        }
        if !instance.is_station(v) && charges[pos] != 0.0 {
            return Err(RouteError::ChargeAtNonStation {
                position: pos,
                amount: charges[pos],
            });
        }
    }
    Ok(())
}

/// Evaluates a route with the given charge amounts using the battery,
/// time and load recurrences. `charges[p]` is the amount charged at
/// position `p` and must be zero everywhere except station visits.
pub fn evaluate_route(
    instance: &Instance,
    visits: &[NodeId],
    charges: &[f64],
) -> Result<RouteEval, RouteError> {
    check_structure(instance, visits, charges)?;
    let len = visits.len();
    let q_cap = instance.battery_capacity;
    let mut eval = RouteEval {
        td: 0.0,
        arrive: vec![0.0; len],
        depart: vec![0.0; len],
        batt_arrive: vec![0.0; len],
        batt_depart: vec![0.0; len],
        load: vec![0.0; len],
        feasible: true,
        violations: Vec::new(),
    };
    let start = instance.start_time();
    eval.arrive[0] = start;
    eval.depart[0] = start;
    eval.batt_arrive[0] = q_cap;
    eval.batt_depart[0] = q_cap;
    eval.load[0] = visits.iter().map(|&v| instance.nodes[v].delivery).sum();

    for p in 1..len {
        let (prev, cur) = (visits[p - 1], visits[p]);
        let node = &instance.nodes[cur];
        let pnode = &instance.nodes[prev];
        eval.td += instance.d(prev, cur);
        eval.arrive[p] = eval.depart[p - 1] + instance.t(prev, cur);
        eval.batt_arrive[p] = eval.batt_depart[p - 1] - instance.consume_rate * instance.d(prev, cur);
        eval.load[p] = eval.load[p - 1] - pnode.delivery + pnode.pickup;
        if instance.is_station(cur) {
            eval.depart[p] = eval.arrive[p] + instance.charge_rate * charges[p];
            eval.batt_depart[p] = eval.batt_arrive[p] + charges[p];
        } else {
            eval.depart[p] = eval.arrive[p].max(node.ready) + node.service;
            eval.batt_depart[p] = eval.batt_arrive[p];
        }
    }

    for p in 0..len {
        let node = &instance.nodes[visits[p]];
        if eval.load[p] < -EPS || eval.load[p] > instance.load_capacity + EPS {
            eval.violations.push((p, Constraint::Capacity));
        }
        if p > 0 && eval.arrive[p] > node.due + EPS {
            eval.violations.push((p, Constraint::TimeWindow));
        }
        let (y, yy) = (eval.batt_arrive[p], eval.batt_depart[p]);
        if y < -EPS || yy < y - EPS || yy > q_cap + EPS {
            eval.violations.push((p, Constraint::Battery));
        }
    }
    if eval.arrive[len - 1] > instance.horizon() + EPS {
        eval.violations.push((len - 1, Constraint::Depot));
    }
    eval.feasible = eval.violations.is_empty();
    Ok(eval)
}

/// A vehicle route with its charge plan and a cached evaluation.
///
/// Routes are only built through constructors that evaluate them, so the
/// cache always matches the visit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    visits: Vec<NodeId>,
    charges: Vec<f64>,
    eval: RouteEval,
}

impl Route {
    pub fn new(
        instance: &Instance,
        visits: Vec<NodeId>,
        charges: Vec<f64>,
    ) -> Result<Route, RouteError> {
        let eval = evaluate_route(instance, &visits, &charges)?;
        Ok(Route {
            visits,
            charges,
            eval,
        })
    }

    /// A route with every charge amount set to zero.
    pub fn uncharged(instance: &Instance, visits: Vec<NodeId>) -> Result<Route, RouteError> {
        let charges = vec![0.0; visits.len()];
        Route::new(instance, visits, charges)
    }

    pub fn visits(&self) -> &[NodeId] {
        &self.visits
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn eval(&self) -> &RouteEval {
        &self.eval
    }

    pub fn distance(&self) -> f64 {
        self.eval.td
    }

    pub fn is_feasible(&self) -> bool {
        self.eval.feasible
    }

    pub fn customers<'a>(&'a self, instance: &'a Instance) -> impl Iterator<Item = NodeId> + 'a {
        self.visits
            .iter()
            .copied()
            .filter(move |&v| instance.is_customer(v))
    }

    pub fn customer_count(&self, instance: &Instance) -> usize {
        self.customers(instance).count()
    }

    pub fn has_stations(&self, instance: &Instance) -> bool {
        self.visits.iter().any(|&v| instance.is_station(v))
    }

    /// Visit sequence with every station removed.
    pub fn stripped_visits(&self, instance: &Instance) -> Vec<NodeId> {
        self.visits
            .iter()
            .copied()
            .filter(|&v| !instance.is_station(v))
            .collect()
    }

    pub fn into_parts(self) -> (Vec<NodeId>, Vec<f64>) {
        (self.visits, self.charges)
    }
}

/// A set of routes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub routes: Vec<Route>,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Self {
        Solution { routes }
    }

    pub fn vehicle_count(&self) -> usize {
        self.routes.len()
    }

    pub fn total_distance(&self) -> f64 {
        self.routes.iter().map(Route::distance).sum()
    }

    pub fn cost(&self, instance: &Instance) -> f64 {
        total_cost(instance, self)
    }

    /// True iff every route is feasible. Coverage is not checked.
    pub fn routes_feasible(&self) -> bool {
        self.routes.iter().all(Route::is_feasible)
    }

    /// Customers in route order.
    pub fn customers<'a>(&'a self, instance: &'a Instance) -> impl Iterator<Item = NodeId> + 'a {
        self.routes.iter().flat_map(move |r| r.customers(instance))
    }
}

/// mu1 * K + mu2 * sum of route distances.
pub fn total_cost(instance: &Instance, solution: &Solution) -> f64 {
    instance.dispatch_cost * solution.vehicle_count() as f64
        + instance.distance_cost * solution.total_distance()
}

/// Cost of a single route as it contributes to the total.
pub fn route_cost(instance: &Instance, distance: f64) -> f64 {
    instance.dispatch_cost + instance.distance_cost * distance
}

/// Removes every station visit. The result is evaluated with zero charges,
/// so its battery trace is meaningless; only the non-battery constraints matter.
pub fn strip_stations(instance: &Instance, solution: &Solution) -> Solution {
    let routes = solution
        .routes
        .iter()
        .map(|r| {
            Route::uncharged(instance, r.stripped_visits(instance))
                .expect("removing stations keeps a route well formed")
        })
        .collect();
    Solution { routes }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Depot at the origin, customers and stations on a line, Euclidean
    /// distances, unit speed.
    pub(crate) fn line_instance(customers: &[(f64, f64, f64)], stations: &[f64]) -> Instance {
        let mut nodes = vec![Node {
            id: 0,
            kind: NodeKind::Depot,
            name: "D0".into(),
            delivery: 0.0,
            pickup: 0.0,
            ready: 0.0,
            due: 1000.0,
            service: 0.0,
            x: 0.0,
            y: 0.0,
        }];
        for (k, &(x, u, v)) in customers.iter().enumerate() {
            nodes.push(Node {
                id: k + 1,
                kind: NodeKind::Customer,
                name: format!("C{}", k + 1),
                delivery: u,
                pickup: v,
                ready: 0.0,
                due: 1000.0,
                service: 1.0,
                x,
                y: 0.0,
            });
        }
        for &x in stations {
            let id = nodes.len();
            nodes.push(Node {
                id,
                kind: NodeKind::Station,
                name: format!("S{id}"),
                delivery: 0.0,
                pickup: 0.0,
                ready: 0.0,
                due: 1000.0,
                service: 0.0,
                x,
                y: 0.0,
            });
        }
        let n = nodes.len();
        let dist = Matrix::from_fn(n, |i, j| (nodes[i].x - nodes[j].x).abs());
        Instance {
            name: "line".into(),
            n_customers: customers.len(),
            n_stations: stations.len(),
            time: dist.clone(),
            dist,
            nodes,
            load_capacity: 100.0,
            battery_capacity: 50.0,
            charge_rate: 1.0,
            consume_rate: 1.0,
            dispatch_cost: 1000.0,
            distance_cost: 1.0,
            coord_mode: CoordMode::Cartesian,
            triangle_ok: true,
        }
    }

    #[test]
    fn depot_only_route() {
        let inst = line_instance(&[(10.0, 1.0, 1.0)], &[]);
        let eval = evaluate_route(&inst, &[0, 0], &[0.0, 0.0]).unwrap();
        assert_eq!(eval.td, 0.0);
        assert!(eval.feasible);
    }

    #[test]
    fn negative_battery_is_tagged() {
        let inst = line_instance(&[(30.0, 1.0, 1.0)], &[]);
        let eval = evaluate_route(&inst, &[0, 1, 0], &[0.0; 3]).unwrap();
        assert!(!eval.feasible);
        assert!(eval.violates(Constraint::Battery));
        assert_eq!(eval.violations, vec![(2, Constraint::Battery)]);
        assert!(eval.feasible_without_battery());
    }

    #[test]
    fn recurrences_hold_between_positions() {
        let inst = line_instance(&[(20.0, 3.0, 1.0), (30.0, 2.0, 5.0)], &[25.0]);
        let visits = [0, 1, 3, 2, 0];
        let charges = [0.0, 0.0, 12.5, 0.0, 0.0];
        let e = evaluate_route(&inst, &visits, &charges).unwrap();
        assert_eq!(e.load[0], 5.0);
        assert_eq!(e.load[1], 5.0);
        assert_eq!(e.load[2], 3.0);
        assert_eq!(e.load[4], 6.0);
        for p in 1..visits.len() {
            let (i, j) = (visits[p - 1], visits[p]);
            assert_eq!(e.arrive[p], e.depart[p - 1] + inst.t(i, j));
            assert_eq!(e.batt_arrive[p], e.batt_depart[p - 1] - inst.d(i, j));
        }
        assert_eq!(e.depart[2], e.arrive[2] + 12.5);
        assert_eq!(e.batt_arrive[2], 50.0 - 25.0);
        assert_eq!(e.batt_depart[2], 37.5);
        assert_eq!(e.td, 60.0);
        assert!(e.feasible);
    }

    #[test]
    fn late_arrival_is_a_window_violation() {
        let mut inst = line_instance(&[(10.0, 1.0, 1.0), (20.0, 1.0, 1.0)], &[]);
        inst.nodes[2].due = 5.0;
        let e = evaluate_route(&inst, &[0, 1, 2, 0], &[0.0; 4]).unwrap();
        assert_eq!(e.violations, vec![(2, Constraint::TimeWindow)]);
    }

    #[test]
    fn structural_errors() {
        let inst = line_instance(&[(10.0, 1.0, 1.0)], &[5.0]);
        assert_eq!(
            evaluate_route(&inst, &[1, 0], &[0.0; 2]),
            Err(RouteError::Endpoints)
        );
        assert_eq!(
            evaluate_route(&inst, &[0, 1, 1, 0], &[0.0; 4]),
            Err(RouteError::DuplicateCustomer(1))
        );
        assert_eq!(
            evaluate_route(&inst, &[0, 9, 0], &[0.0; 3]),
            Err(RouteError::UnknownNode(9))
        );
        assert!(matches!(
            evaluate_route(&inst, &[0, 1, 0], &[0.0, 1.0, 0.0]),
            Err(RouteError::ChargeAtNonStation { .. })
        ));
        // stations may repeat
        assert!(evaluate_route(&inst, &[0, 2, 1, 2, 0], &[0.0; 5]).is_ok());
    }

    #[test]
    fn total_cost_examples() {
        let inst = line_instance(&[(10.0, 1.0, 1.0)], &[]);
        assert_eq!(total_cost(&inst, &Solution::default()), 0.0);

        let mut inst = inst;
        inst.dispatch_cost = 300.0;
        inst.distance_cost = 0.014;
        inst.nodes[1].x = 50.0;
        inst.dist = Matrix::from_fn(2, |i, j| if i == j { 0.0 } else { 50.0 });
        inst.time = inst.dist.clone();
        inst.battery_capacity = 500.0;
        let r = Route::uncharged(&inst, vec![0, 1, 0]).unwrap();
        let s = Solution::new(vec![r]);
        assert!((total_cost(&inst, &s) - 301.4).abs() < 1e-9);
    }

    #[test]
    fn strip_removes_stations_only() {
        let inst = line_instance(&[(20.0, 3.0, 1.0), (30.0, 2.0, 5.0)], &[25.0]);
        let r = Route::new(&inst, vec![0, 1, 3, 2, 0], vec![0.0, 0.0, 12.5, 0.0, 0.0]).unwrap();
        let s = strip_stations(&inst, &Solution::new(vec![r]));
        assert_eq!(s.routes[0].visits(), &[0, 1, 2, 0]);
        assert_eq!(s.routes[0].charges(), &[0.0; 4]);
    }

    #[test]
    fn validate_catches_bad_station_window() {
        let mut inst = line_instance(&[(10.0, 1.0, 1.0)], &[5.0]);
        assert!(inst.validate().is_ok());
        inst.nodes[2].due = 10.0;
        assert!(matches!(
            inst.validate(),
            Err(InstanceError::NodeAttribute { id: 2, .. })
        ));
    }
}
