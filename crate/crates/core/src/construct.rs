//! Initial construction, regret repair and destroy-repair perturbation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charge::{plan_charges, schedule_route};
use crate::error::SolveError;
use crate::model::{evaluate_route, Instance, NodeId, Route, Solution, EPS};
use crate::pssi::Electrifier;

/// Weights of the residual-capacity and radial-surcharge terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcrsParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for RcrsParams {
    fn default() -> Self {
        RcrsParams {
            lambda: 0.5,
            gamma: 0.5,
        }
    }
}

/// Bounds on the removed share of customers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DestroyParams {
    pub omega1: f64,
    pub omega2: f64,
}

fn inserted(visits: &[NodeId], pos: usize, u: NodeId, buf: &mut Vec<NodeId>) {
    buf.clear();
    buf.extend_from_slice(&visits[..pos]);
    buf.push(u);
    buf.extend_from_slice(&visits[pos..]);
}

/// Largest on-board load along a visit sequence.
pub fn peak_load(instance: &Instance, visits: &[NodeId]) -> f64 {
    let mut load: f64 = visits.iter().map(|&v| instance.nodes[v].delivery).sum();
    let mut peak = load;
    for &v in visits {
        load += instance.nodes[v].pickup - instance.nodes[v].delivery;
        peak = peak.max(load);
    }
    peak
}

fn strip(instance: &Instance, visits: &[NodeId]) -> Vec<NodeId> {
    visits
        .iter()
        .copied()
        .filter(|&v| !instance.is_station(v))
        .collect()
}

/// Stations tried in pairs by the dedicated-route fallback, per side.
/// Positions per base handed to sequential repair in regret insertion.
const REPAIR_POSITIONS: usize = 3;

const CHAIN_CANDIDATES: usize = 10;

/// Station sequences of length at most two to place between `from` and
/// `to`: every single station, and ordered pairs among the stations with
/// the smallest detour.
fn station_chains(instance: &Instance, from: NodeId, to: NodeId) -> Vec<Vec<NodeId>> {
    let mut chains: Vec<Vec<NodeId>> = vec![vec![]];
    chains.extend(instance.stations().map(|s| vec![s]));
    let mut near: Vec<NodeId> = instance.stations().collect();
    near.sort_by(|&a, &b| {
        let da = instance.d(from, a) + instance.d(a, to);
        let db = instance.d(from, b) + instance.d(b, to);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    near.truncate(CHAIN_CANDIDATES);
    for &a in &near {
        for &b in &near {
            if a != b {
                chains.push(vec![a, b]);
            }
        }
    }
    chains
}

/// Route serving one customer, with stations if it needs them: the
/// shorter of sequential insertion and an exhaustive search over short
/// station chains on either side of the customer.
fn dedicated_route(elec: &Electrifier<'_>, u: NodeId) -> Result<Route, SolveError> {
    let instance = elec.instance;
    let direct = schedule_route(instance, vec![0, u, 0]).expect("well-formed route");
    if direct.is_feasible() {
        return Ok(direct);
    }
    let mut best = elec.repair_sequential(&[0, u, 0]);
    let before = station_chains(instance, 0, u);
    let after = station_chains(instance, u, 0);
    let mut visits = Vec::with_capacity(7);
    for a in &before {
        for b in &after {
            visits.clear();
            visits.push(0);
            visits.extend(a);
            visits.push(u);
            visits.extend(b);
            visits.push(0);
            let length: f64 = visits.windows(2).map(|w| instance.d(w[0], w[1])).sum();
            if best.as_ref().is_some_and(|r| length >= r.distance() - EPS) {
                continue;
            }
            if plan_charges(instance, &visits).feasible() {
                best = Some(schedule_route(instance, visits.clone()).expect("well-formed route"));
            }
        }
    }
    best.ok_or(SolveError::UnservableCustomer(u))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    u: NodeId,
    pos: usize,
}

fn rcrs_cost(instance: &Instance, params: &RcrsParams, visits: &[NodeId], pos: usize, u: NodeId, peak: f64) -> f64 {
    let (i, j) = (visits[pos - 1], visits[pos]);
    instance.d(i, u) + instance.d(u, j) - instance.d(i, j)
        - params.lambda * (instance.load_capacity - peak)
        + params.gamma * instance.d(0, u)
}

fn feasible_candidates(
    instance: &Instance,
    params: &RcrsParams,
    visits: &[NodeId],
    open: &[NodeId],
    buf: &mut Vec<NodeId>,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for &u in open {
        for pos in 1..visits.len() {
            inserted(visits, pos, u, buf);
            if plan_charges(instance, buf).feasible() {
                let cost = rcrs_cost(instance, params, visits, pos, u, peak_load(instance, buf));
                out.push(Candidate { cost, u, pos });
            }
        }
    }
    out
}

/// Builds a solution by cheapest insertion under the residual-capacity and
/// radial-surcharge criterion. Insertions that are feasible as they stand
/// come first; failing those, insertions that only break the battery
/// constraint are tried in cost order and fixed by sequential station
/// insertion. A new route is opened when neither kind exists.
pub fn rcrs_construct<R: Rng>(
    elec: &mut Electrifier<'_>,
    params: &RcrsParams,
    rng: &mut R,
) -> Result<Solution, SolveError> {
    let instance = elec.instance;
    let mut open: Vec<NodeId> = instance.customers().collect();
    open.shuffle(rng);
    let mut routes: Vec<Vec<NodeId>> = Vec::new();
    let mut cands: Vec<Vec<Candidate>> = Vec::new();
    let mut buf = Vec::new();

    while !open.is_empty() {
        let best = cands
            .iter()
            .enumerate()
            .flat_map(|(r, list)| list.iter().map(move |c| (r, *c)))
            .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost));
        let (route_idx, u) = if let Some((r, c)) = best {
            inserted(&routes[r], c.pos, c.u, &mut buf);
            routes[r] = buf.clone();
            (r, c.u)
        } else if let Some((r, u, visits)) = electric_fix(elec, params, &routes, &open) {
            routes[r] = visits;
            (r, u)
        } else {
            let u = *open
                .iter()
                .min_by(|&&a, &&b| {
                    let cost = |u: NodeId| rcrs_cost(instance, params, &[0, 0], 1, u, peak_load(instance, &[0, u, 0]));
                    cost(a).total_cmp(&cost(b))
                })
                .expect("open is non-empty");
            routes.push(dedicated_route(elec, u)?.visits().to_vec());
            cands.push(Vec::new());
            (routes.len() - 1, u)
        };
        open.retain(|&v| v != u);
        for list in cands.iter_mut() {
            list.retain(|c| c.u != u);
        }
        cands[route_idx] = feasible_candidates(instance, params, &routes[route_idx], &open, &mut buf);
    }
    Ok(Solution::new(
        routes
            .into_iter()
            .map(|v| schedule_route(instance, v).expect("well-formed route"))
            .collect(),
    ))
}

fn electric_fix(
    elec: &Electrifier<'_>,
    params: &RcrsParams,
    routes: &[Vec<NodeId>],
    open: &[NodeId],
) -> Option<(usize, NodeId, Vec<NodeId>)> {
    let instance = elec.instance;
    let mut buf = Vec::new();
    let mut list = Vec::new();
    for (r, visits) in routes.iter().enumerate() {
        let stripped = strip(instance, visits);
        for &u in open {
            for pos in 1..stripped.len() {
                inserted(&stripped, pos, u, &mut buf);
                let plan = plan_charges(instance, &buf);
                if plan.time_ok && plan.load_ok {
                    let cost = rcrs_cost(instance, params, &stripped, pos, u, peak_load(instance, &buf));
                    list.push((cost, r, u, pos));
                }
            }
        }
    }
    list.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, r, u, pos) in list {
        let stripped = strip(instance, &routes[r]);
        inserted(&stripped, pos, u, &mut buf);
        if let Some(route) = elec.repair_sequential(&buf) {
            return Some((r, u, route.visits().to_vec()));
        }
    }
    None
}

/// Cheapest feasible way to put `u` into `route`: as-is at some position,
/// or by sequential station repair of one of the cheapest positions that
/// only break the battery constraint, with the route's stations kept and
/// with them removed.
fn best_option(elec: &Electrifier<'_>, route: &Route, u: NodeId, buf: &mut Vec<NodeId>) -> Option<(f64, Route)> {
    let instance = elec.instance;
    let visits = route.visits();
    let mut best: Option<(f64, usize)> = None;
    for pos in 1..visits.len() {
        let (i, j) = (visits[pos - 1], visits[pos]);
        let delta = instance.d(i, u) + instance.d(u, j) - instance.d(i, j);
        if best.is_some_and(|b| delta >= b.0) {
            continue;
        }
        inserted(visits, pos, u, buf);
        if plan_charges(instance, buf).feasible() {
            best = Some((delta, pos));
        }
    }
    let mut out = best.map(|(_, pos)| {
        inserted(visits, pos, u, buf);
        let r = schedule_route(instance, buf.clone()).expect("well-formed route");
        (r.distance() - route.distance(), r)
    });

    // repaired insertions, around the existing stations and from scratch,
    // tried only where the bare detour could still beat the best so far
    let stripped = route.stripped_visits(instance);
    let mut bases = vec![stripped];
    if route.has_stations(instance) {
        bases.push(visits.to_vec());
    }
    for base in &bases {
        let base_len: f64 = base.windows(2).map(|w| instance.d(w[0], w[1])).sum();
        let offset = base_len - route.distance();
        let mut options: Vec<(f64, usize)> = Vec::new();
        for pos in 1..base.len() {
            let (i, j) = (base[pos - 1], base[pos]);
            let bound = offset + instance.d(i, u) + instance.d(u, j) - instance.d(i, j);
            if out.as_ref().is_some_and(|o| bound >= o.0 - EPS) {
                continue;
            }
            inserted(base, pos, u, buf);
            let uncharged = evaluate_route(instance, buf, &vec![0.0; buf.len()]).expect("well-formed route");
            if uncharged.feasible_without_battery() && !plan_charges(instance, buf).feasible() {
                options.push((bound, pos));
            }
        }
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (bound, pos) in options.into_iter().take(REPAIR_POSITIONS) {
            if out.as_ref().is_some_and(|o| bound >= o.0 - EPS) {
                break;
            }
            inserted(base, pos, u, buf);
            if let Some(r) = elec.repair_sequential(buf) {
                let delta = r.distance() - route.distance();
                if out.as_ref().map_or(true, |o| delta < o.0 - EPS) {
                    out = Some((delta, r));
                }
            }
        }
    }
    out
}

/// Inserts every customer of `unassigned` into `partial` by regret-2: at
/// each step the customer whose best and second-best routes differ most is
/// placed at its best feasible position. A customer with a single option
/// has infinite regret.
pub fn regret_insert<R: Rng>(
    elec: &mut Electrifier<'_>,
    partial: Solution,
    unassigned: &[NodeId],
    rng: &mut R,
) -> Result<Solution, SolveError> {
    let instance = elec.instance;
    let mut routes = partial.routes;
    let mut open = unassigned.to_vec();
    open.shuffle(rng);
    let mut buf = Vec::new();
    // options[r][k]: best insertion of open[k] into routes[r]
    let mut options: Vec<Vec<Option<(f64, Route)>>> = routes
        .iter()
        .map(|r| open.iter().map(|&u| best_option(elec, r, u, &mut buf)).collect())
        .collect();

    while !open.is_empty() {
        let mut pick: Option<(f64, f64, usize, usize)> = None;
        for k in 0..open.len() {
            let mut first: Option<(f64, usize)> = None;
            let mut second = f64::INFINITY;
            for (r, per_route) in options.iter().enumerate() {
                if let Some((delta, _)) = &per_route[k] {
                    match first {
                        Some((f, _)) if *delta >= f => second = second.min(*delta),
                        Some((f, _)) => {
                            second = f;
                            first = Some((*delta, r));
                        }
                        None => first = Some((*delta, r)),
                    }
                }
            }
            if let Some((best, r)) = first {
                let regret = second - best;
                let better = match pick {
                    None => true,
                    Some((pr, pb, _, _)) => regret > pr || (regret == pr && best < pb),
                };
                if better {
                    pick = Some((regret, best, k, r));
                }
            }
        }

        let (k, r) = match pick {
            Some((_, _, k, r)) => {
                let (_, route) = options[r][k].take().expect("picked option exists");
                routes[r] = route;
                (k, r)
            }
            None => {
                let k = (0..open.len())
                    .max_by(|&a, &b| {
                        instance.d(0, open[a]).total_cmp(&instance.d(0, open[b])).then(b.cmp(&a))
                    })
                    .expect("open is non-empty");
                routes.push(dedicated_route(elec, open[k])?);
                options.push(vec![None; open.len()]);
                (k, routes.len() - 1)
            }
        };
        open.remove(k);
        for per_route in options.iter_mut() {
            per_route.remove(k);
        }
        options[r] = open
            .iter()
            .map(|&u| best_option(elec, &routes[r], u, &mut buf))
            .collect();
    }
    Ok(Solution::new(routes))
}

/// Number of customers to remove: uniform in
/// `[ceil(omega1 * M), floor(omega2 * M)]`, clamped to `[1, M]`.
pub fn removal_count<R: Rng>(n_customers: usize, params: &DestroyParams, rng: &mut R) -> usize {
    let m = n_customers as f64;
    let lo = ((params.omega1 * m - 1e-9).ceil() as usize).clamp(1, n_customers.max(1));
    let hi = ((params.omega2 * m + 1e-9).floor() as usize).clamp(lo, n_customers.max(1));
    rng.gen_range(lo..=hi)
}

/// A random seed customer and the `rho - 1` customers closest to it.
pub fn related_customers<R: Rng>(instance: &Instance, rho: usize, rng: &mut R) -> Vec<NodeId> {
    let seed = rng.gen_range(1..=instance.n_customers);
    let related = |v: NodeId| 0.5 * (instance.d(seed, v) + instance.d(v, seed));
    let mut others: Vec<NodeId> = instance.customers().filter(|&v| v != seed).collect();
    others.sort_by(|&a, &b| related(a).total_cmp(&related(b)).then(a.cmp(&b)));
    let mut out = vec![seed];
    out.extend(others.into_iter().take(rho.saturating_sub(1)));
    out
}

/// Removes related customers and reinserts them by regret repair. Returns
/// the input unchanged when the repair fails.
pub fn destroy_repair<R: Rng>(
    elec: &mut Electrifier<'_>,
    solution: &Solution,
    params: &DestroyParams,
    rng: &mut R,
) -> Solution {
    let instance = elec.instance;
    if instance.n_customers == 0 {
        return solution.clone();
    }
    let rho = removal_count(instance.n_customers, params, rng);
    let removed = related_customers(instance, rho, rng);
    let mut gone = vec![false; instance.n_nodes()];
    for &u in &removed {
        gone[u] = true;
    }
    let mut routes = Vec::with_capacity(solution.routes.len());
    for route in &solution.routes {
        if !route.visits().iter().any(|&v| gone[v]) {
            routes.push(route.clone());
            continue;
        }
        let visits: Vec<NodeId> = route.visits().iter().copied().filter(|&v| !gone[v]).collect();
        if !visits.iter().any(|&v| instance.is_customer(v)) {
            continue;
        }
        // stations that served the removed customers may no longer be
        // needed, so the route is also rebuilt from its customers alone
        let kept = schedule_route(instance, visits).expect("well-formed route");
        let rebuilt = elec.electrify(kept.visits(), rng);
        match (kept.is_feasible(), rebuilt) {
            (true, Some(r)) if r.distance() < kept.distance() - EPS => routes.push(r),
            (true, _) => routes.push(kept),
            (false, Some(r)) => routes.push(r),
            (false, None) => return solution.clone(),
        }
    }
    match regret_insert(elec, Solution::new(routes), &removed, rng) {
        Ok(s) if s.routes_feasible() => s,
        _ => solution.clone(),
    }
}

/// True when both solutions cover the same customers in total.
pub fn same_coverage(instance: &Instance, a: &Solution, b: &Solution) -> bool {
    let mut x: Vec<NodeId> = a.customers(instance).collect();
    let mut y: Vec<NodeId> = b.customers(instance).collect();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}
