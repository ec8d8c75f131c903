//! Partial-recharge amounts.
//!
//! A route is cut into paths between consecutive anchors (the depot start
//! or a charging station). The amount charged at an anchor is the minimal
//! energy needed to reach the next anchor, plus whatever extra charge fits
//! into downstream waiting time without delaying the arrival at the next
//! anchor, capped by the battery capacity.

use crate::error::{ChargeError, RouteError};
use crate::model::{Instance, NodeId, Route, EPS};

/// One anchor-to-anchor path with the state on arrival at its anchor.
#[derive(Debug, Clone, Copy)]
pub struct PathSegment<'a> {
    /// Station or depot the path starts from.
    pub anchor: NodeId,
    /// Arrival time at the anchor. For the depot start this is e_0.
    pub arrive: f64,
    /// Battery on arrival at the anchor.
    pub battery: f64,
    pub customers: &'a [NodeId],
    /// Next station, or the depot.
    pub end: NodeId,
}

impl PathSegment<'_> {
    fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.anchor)
            .chain(self.customers.iter().copied())
            .chain(std::iter::once(self.end))
    }

    pub fn distance(&self, instance: &Instance) -> f64 {
        let mut prev = self.anchor;
        let mut total = 0.0;
        for v in self.nodes().skip(1) {
            total += instance.d(prev, v);
            prev = v;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargePlan {
    pub q0: f64,
    pub q1: f64,
    pub q: f64,
    /// Slack used at each customer.
    pub delta: Vec<f64>,
    /// Remaining usable slack after each customer.
    pub tau: Vec<f64>,
    /// Arrival times at each customer and finally at `end`, given `q`.
    pub arrive: Vec<f64>,
    /// Departure times at each customer, given `q`.
    pub depart: Vec<f64>,
}

/// Energy needed to reach the end of the segment beyond what is on board.
pub fn minimal_charge(instance: &Instance, seg: &PathSegment<'_>) -> f64 {
    (instance.consume_rate * seg.distance(instance) - seg.battery).max(0.0)
}

/// Slack-based extra charge. Returns the extra energy and the slack used at
/// each visited customer; the recursion stops once no slack remains.
pub fn additional_charge(instance: &Instance, seg: &PathSegment<'_>, q0: f64) -> (f64, Vec<f64>) {
    let (total, delta, _) = slack_recursion(instance, seg, q0, true);
    (total / instance.charge_rate, delta)
}

/// Runs the slack recursion; returns the summed slack (time units), the
/// per-customer slack and the tau trace.
pub(crate) fn slack_recursion(
    instance: &Instance,
    seg: &PathSegment<'_>,
    q0: f64,
    early_stop: bool,
) -> (f64, Vec<f64>, Vec<f64>) {
    let infinity = instance.horizon() + 1.0;
    let mut tau = infinity;
    let mut depart = seg.arrive + instance.charge_rate * q0;
    let mut prev = seg.anchor;
    let mut total = 0.0;
    let mut deltas = Vec::with_capacity(seg.customers.len());
    let mut taus = Vec::with_capacity(seg.customers.len());
    for &c in seg.customers {
        if early_stop && tau <= 0.0 {
            break;
        }
        let node = &instance.nodes[c];
        let arrive = depart + instance.t(prev, c);
        let delta = tau.min((node.ready - arrive).max(0.0));
        depart = node.ready.max(arrive + delta) + node.service;
        tau = tau.min(node.due - arrive) - delta;
        total += delta;
        deltas.push(delta);
        taus.push(tau);
        prev = c;
    }
    (total, deltas, taus)
}

/// Charge amount at the anchor of `seg`.
pub fn charge_amount(instance: &Instance, seg: &PathSegment<'_>) -> Result<ChargePlan, ChargeError> {
    let q0 = minimal_charge(instance, seg);
    let available = instance.battery_capacity - seg.battery;
    if q0 > available + EPS {
        return Err(ChargeError::InfeasibleSegment {
            station: seg.anchor,
            needed: q0,
            available,
        });
    }
    let (slack, delta, tau) = slack_recursion(instance, seg, q0, true);
    let q1 = slack / instance.charge_rate;
    let q = (q0 + q1).min(available).max(0.0);

    let mut arrive = Vec::with_capacity(seg.customers.len() + 1);
    let mut depart = Vec::with_capacity(seg.customers.len());
    let mut time = seg.arrive + instance.charge_rate * q;
    let mut prev = seg.anchor;
    for &c in seg.customers {
        let node = &instance.nodes[c];
        let a = time + instance.t(prev, c);
        time = a.max(node.ready) + node.service;
        arrive.push(a);
        depart.push(time);
        prev = c;
    }
    arrive.push(time + instance.t(prev, seg.end));
    Ok(ChargePlan {
        q0,
        q1,
        q,
        delta,
        tau,
        arrive,
        depart,
    })
}

/// Running state on arrival at an anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AnchorState {
    pub arrive: f64,
    pub battery: f64,
    /// Load on arrival.
    pub load: f64,
}

impl AnchorState {
    pub fn start(instance: &Instance, total_delivery: f64) -> Self {
        AnchorState {
            arrive: instance.start_time(),
            battery: instance.battery_capacity,
            load: total_delivery,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SegmentOutcome {
    pub charge: f64,
    pub next: AnchorState,
    pub battery_ok: bool,
    pub time_ok: bool,
    pub load_ok: bool,
    /// Visits after the anchor arriving with negative battery.
    pub negatives: usize,
}

impl SegmentOutcome {
    pub fn ok(&self) -> bool {
        self.battery_ok && self.time_ok && self.load_ok
    }
}

/// Charges at `path[0]` and propagates the trace up to `path.last()`.
///
/// Works on infeasible input too: when the next anchor is out of reach the
/// vehicle charges to full and the trace continues with negative battery.
pub(crate) fn run_segment(
    instance: &Instance,
    state: AnchorState,
    path: &[NodeId],
) -> SegmentOutcome {
    let anchor = path[0];
    let end = path[path.len() - 1];
    let customers = &path[1..path.len() - 1];
    let seg = PathSegment {
        anchor,
        arrive: state.arrive,
        battery: state.battery,
        customers,
        end,
    };
    let is_start = anchor == Instance::DEPOT;
    let available = instance.battery_capacity - state.battery;
    let q0 = minimal_charge(instance, &seg);
    let mut battery_ok = state.battery >= -EPS && q0 <= available + EPS;
    let charge = if is_start {
        0.0
    } else if q0 > available {
        available.max(0.0)
    } else {
        let (slack, _, _) = slack_recursion(instance, &seg, q0, true);
        (q0 + slack / instance.charge_rate).min(available)
    };
    if is_start && q0 > EPS {
        battery_ok = false;
    }

    let mut time = if is_start {
        instance.start_time()
    } else {
        state.arrive + instance.charge_rate * charge
    };
    let mut battery = state.battery + charge;
    let mut load = state.load;
    let mut time_ok = true;
    let mut load_ok = true;
    let mut negatives = 0;
    let mut prev = anchor;
    for &v in &path[1..] {
        let pnode = &instance.nodes[prev];
        let node = &instance.nodes[v];
        let arrive = time + instance.t(prev, v);
        battery -= instance.consume_rate * instance.d(prev, v);
        load += pnode.pickup - pnode.delivery;
        if arrive > node.due + EPS {
            time_ok = false;
        }
        if battery < -EPS {
            negatives += 1;
            battery_ok = false;
        }
        if load > instance.load_capacity + EPS || load < -EPS {
            load_ok = false;
        }
        time = if v == end {
            arrive
        } else {
            arrive.max(node.ready) + node.service
        };
        prev = v;
    }
    SegmentOutcome {
        charge,
        next: AnchorState {
            arrive: time,
            battery,
            load,
        },
        battery_ok,
        time_ok,
        load_ok,
        negatives,
    }
}

/// Result of planning charges over a whole visit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSchedule {
    pub charges: Vec<f64>,
    pub battery_ok: bool,
    pub time_ok: bool,
    pub load_ok: bool,
    pub negatives: usize,
}

impl ChargeSchedule {
    pub fn feasible(&self) -> bool {
        self.battery_ok && self.time_ok && self.load_ok
    }
}

/// Plans charges for every station of a depot-to-depot visit sequence,
/// left to right. The sequence is assumed structurally valid.
pub fn plan_charges(instance: &Instance, visits: &[NodeId]) -> ChargeSchedule {
    let total_delivery: f64 = visits
        .iter()
        .filter(|&&v| instance.is_customer(v))
        .map(|&v| instance.nodes[v].delivery)
        .sum();
    let mut state = AnchorState::start(instance, total_delivery);
    let mut out = ChargeSchedule {
        charges: vec![0.0; visits.len()],
        battery_ok: true,
        time_ok: true,
        load_ok: total_delivery <= instance.load_capacity + EPS,
        negatives: 0,
    };
    let mut anchor = 0;
    while anchor + 1 < visits.len() {
        let mut end = anchor + 1;
        while end + 1 < visits.len() && !instance.is_station(visits[end]) {
            end += 1;
        }
        let seg = run_segment(instance, state, &visits[anchor..=end]);
        out.charges[anchor] = seg.charge;
        out.battery_ok &= seg.battery_ok;
        out.time_ok &= seg.time_ok;
        out.load_ok &= seg.load_ok;
        out.negatives += seg.negatives;
        state = seg.next;
        anchor = end;
    }
    out
}

/// Fills in the charge amounts of a route with a fixed visit order and
/// evaluates it. Infeasibility is reported through the route's evaluation.
pub fn schedule_route(instance: &Instance, visits: Vec<NodeId>) -> Result<Route, RouteError> {
    let plan = plan_charges(instance, &visits);
    Route::new(instance, visits, plan.charges)
}
