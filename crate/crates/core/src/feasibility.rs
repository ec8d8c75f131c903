//! Solution validator.
//!
//! Recomputes every trace from the raw visit and charge sequences without
//! touching any cached evaluation, so it can serve as the reference check
//! for all search components.

use crate::model::{Constraint, Instance, NodeKind, Solution, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub route: usize,
    /// Position within the route; `usize::MAX` for solution-level
    /// violations such as a missing customer.
    pub position: usize,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    /// Total cost recomputed from scratch.
    pub total_cost: f64,
    pub vehicle_count: usize,
    pub total_distance: f64,
}

impl FeasibilityReport {
    pub fn holds(&self, c: Constraint) -> bool {
        !self.violations.iter().any(|v| v.constraint == c)
    }

    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Feasibility with the battery constraint ignored.
    pub fn is_feasible_without_battery(&self) -> bool {
        self.violations
            .iter()
            .all(|v| v.constraint == Constraint::Battery)
    }

    pub fn verdicts(&self) -> [(Constraint, bool); 6] {
        Constraint::ALL.map(|c| (c, self.holds(c)))
    }
}

/// Checks every constraint for the whole solution.
pub fn check_feasibility(instance: &Instance, solution: &Solution) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut push = |route: usize, position: usize, constraint: Constraint| {
        violations.push(Violation {
            route,
            position,
            constraint,
        })
    };
    let n = instance.nodes.len();
    let mut served = vec![0usize; n];
    let mut total_distance = 0.0;

    for (r, route) in solution.routes.iter().enumerate() {
        let visits = route.visits();
        let charges = route.charges();
        let len = visits.len();
        if len < 2 || visits[0] != 0 || visits[len - 1] != 0 {
            push(r, 0, Constraint::Endpoints);
        }
        if visits.iter().any(|&v| v >= n) || charges.len() != len {
            push(r, 0, Constraint::Endpoints);
            continue;
        }
        for (p, &v) in visits.iter().enumerate() {
            match instance.nodes[v].kind {
                NodeKind::Customer => served[v] += 1,
                NodeKind::Depot if p != 0 && p != len - 1 => push(r, p, Constraint::Endpoints),
                _ => {}
            }
        }

        let mut load: f64 = visits
            .iter()
            .filter(|&&v| instance.nodes[v].kind == NodeKind::Customer)
            .map(|&v| instance.nodes[v].delivery)
            .sum();
        let mut time = instance.nodes[0].ready;
        let mut battery = instance.battery_capacity;
        if load > instance.load_capacity + EPS {
            push(r, 0, Constraint::Capacity);
        }
        if time < instance.nodes[0].ready - EPS {
            push(r, 0, Constraint::Depot);
        }
        for p in 1..len {
            let (i, j) = (visits[p - 1], visits[p]);
            let prev = &instance.nodes[i];
            let node = &instance.nodes[j];
            total_distance += instance.dist.get(i, j);
            load += prev.pickup - prev.delivery;
            let arrival = time + instance.time.get(i, j);
            battery -= instance.consume_rate * instance.dist.get(i, j);

            if load < -EPS || load > instance.load_capacity + EPS {
                push(r, p, Constraint::Capacity);
            }
            if arrival > node.due + EPS {
                push(r, p, Constraint::TimeWindow);
            }
            if battery < -EPS {
                push(r, p, Constraint::Battery);
            }
            let q = charges[p];
            match node.kind {
                NodeKind::Station => {
                    if q < -EPS || battery + q > instance.battery_capacity + EPS {
                        push(r, p, Constraint::Battery);
                    }
                    battery += q;
                    time = arrival + instance.charge_rate * q;
                }
                _ => {
                    if q != 0.0 {
                        push(r, p, Constraint::Battery);
                    }
                    time = arrival.max(node.ready) + node.service;
                }
            }
            if p == len - 1 && arrival > instance.nodes[0].due + EPS {
                push(r, p, Constraint::Depot);
            }
        }
    }
    for c in 1..=instance.n_customers {
        if served[c] != 1 {
            push(usize::MAX, c, Constraint::Coverage);
        }
    }
    let vehicle_count = solution.routes.len();
    FeasibilityReport {
        violations,
        total_cost: instance.dispatch_cost * vehicle_count as f64
            + instance.distance_cost * total_distance,
        vehicle_count,
        total_distance,
    }
}
