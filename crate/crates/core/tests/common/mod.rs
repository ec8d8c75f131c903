//! Instance generators and reference implementations shared by the
//! integration suites. Nothing here calls into the solver's own
//! evaluation code.

#![allow(dead_code)]

pub mod checks;

use evrp_core::{CoordMode, Instance, Matrix, Node, NodeId, NodeKind, Route, Solution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Cartesian instance with unit speed, a 400-unit horizon and a
/// battery small enough that far customers need a station. Every customer
/// can be served alone.
pub fn small_instance(seed: u64, m: usize, p: usize) -> Instance {
    let mut rng = rng(seed);
    loop {
        let inst = draw_small(&mut rng, m, p);
        if inst.customers().all(|u| best_route(&inst, &[u]).is_some()) {
            return inst;
        }
    }
}

fn draw_small(rng: &mut ChaCha8Rng, m: usize, p: usize) -> Instance {
    let horizon = 400.0;
    let point = |rng: &mut ChaCha8Rng| ((rng.gen_range(0.0..100.0f64) * 10.0).round() / 10.0, (rng.gen_range(0.0..100.0f64) * 10.0).round() / 10.0);
    let depot_xy = point(rng);
    let mut nodes = vec![Node {
        id: 0,
        kind: NodeKind::Depot,
        name: "D".into(),
        delivery: 0.0,
        pickup: 0.0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
        x: depot_xy.0,
        y: depot_xy.1,
    }];
    for id in 1..=m {
        let (x, y) = point(rng);
        let back = ((x - depot_xy.0).powi(2) + (y - depot_xy.1).powi(2)).sqrt();
        let service = rng.gen_range(0..=10) as f64;
        let ready = rng.gen_range(0.0..250.0f64).floor();
        let width = rng.gen_range(30.0..300.0f64).floor();
        let due = (ready + width).min((horizon - service - back).floor()).max(ready);
        nodes.push(Node {
            id,
            kind: NodeKind::Customer,
            name: format!("C{id}"),
            delivery: rng.gen_range(0..=30) as f64,
            pickup: rng.gen_range(0..=30) as f64,
            ready,
            due,
            service,
            x,
            y,
        });
    }
    for id in m + 1..=m + p {
        let (x, y) = point(rng);
        nodes.push(Node {
            id,
            kind: NodeKind::Station,
            name: format!("S{id}"),
            delivery: 0.0,
            pickup: 0.0,
            ready: 0.0,
            due: horizon,
            service: 0.0,
            x,
            y,
        });
    }
    let n = nodes.len();
    let dist = Matrix::from_fn(n, |i, j| {
        ((nodes[i].x - nodes[j].x).powi(2) + (nodes[i].y - nodes[j].y).powi(2)).sqrt()
    });
    Instance {
        name: "small".into(),
        n_customers: m,
        n_stations: p,
        time: dist.clone(),
        dist,
        nodes,
        load_capacity: 60.0,
        battery_capacity: rng.gen_range(60.0..120.0f64).round(),
        charge_rate: rng.gen_range(0.2..1.5f64),
        consume_rate: 1.0,
        dispatch_cost: 1000.0,
        distance_cost: 1.0,
        coord_mode: CoordMode::Cartesian,
        triangle_ok: true,
    }
}

/// Outcome of simulating a visit sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim {
    pub distance: f64,
    pub time_ok: bool,
    pub load_ok: bool,
    pub battery_ok: bool,
}

impl Sim {
    pub fn feasible(&self) -> bool {
        self.time_ok && self.load_ok && self.battery_ok
    }
}

/// Arrival time at the end of `path` when leaving `path[0]` at `depart`,
/// and whether every window along the way holds.
fn run_path(inst: &Instance, path: &[NodeId], depart: f64) -> (f64, bool) {
    let mut time = depart;
    let mut ok = true;
    for w in path.windows(2) {
        time += inst.t(w[0], w[1]);
        let node = &inst.nodes[w[1]];
        ok &= time <= node.due + TOL;
        if inst.is_customer(w[1]) {
            time = time.max(node.ready) + node.service;
        }
    }
    (time, ok)
}

/// Charge plan that, at every station, takes the most energy that neither
/// breaks a window nor delays the arrival at the next station or the
/// depot, and at least enough to get there. Found by bisection on the
/// simulated path rather than by any closed form.
///
/// With one charging rate everywhere, energy taken later costs exactly as
/// much time as energy taken earlier beyond that point, so this plan is
/// feasible whenever any plan is.
pub fn oracle_charges(inst: &Instance, visits: &[NodeId]) -> Vec<f64> {
    let mut charges = vec![0.0; visits.len()];
    let mut battery = inst.battery_capacity;
    let mut time = inst.nodes[0].ready;
    let mut p = 0;
    while p + 1 < visits.len() {
        let mut end = p + 1;
        while end + 1 < visits.len() && !inst.is_station(visits[end]) {
            end += 1;
        }
        let path = &visits[p..=end];
        let dist: f64 = path.windows(2).map(|w| inst.d(w[0], w[1])).sum();
        if p > 0 {
            let room = (inst.battery_capacity - battery).max(0.0);
            let q0 = (inst.consume_rate * dist - battery).max(0.0).min(room);
            let (base, ok) = run_path(inst, path, time + inst.charge_rate * q0);
            let fits = |q: f64| {
                let (a, ok) = run_path(inst, path, time + inst.charge_rate * q);
                ok && a <= base + 1e-9
            };
            let q = if !ok {
                q0
            } else if fits(room) {
                room
            } else {
                let (mut lo, mut hi) = (q0, room);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if fits(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            charges[p] = q;
            battery += q;
            time += inst.charge_rate * q;
        }
        time = run_path(inst, path, time).0;
        battery -= inst.consume_rate * dist;
        p = end;
    }
    charges
}

pub fn simulate_oracle(inst: &Instance, visits: &[NodeId]) -> Sim {
    simulate(inst, visits, &oracle_charges(inst, visits))
}

/// Simulates a route under given charge amounts.
pub fn simulate(inst: &Instance, visits: &[NodeId], charges: &[f64]) -> Sim {
    let mut out = Sim {
        distance: 0.0,
        time_ok: true,
        load_ok: true,
        battery_ok: true,
    };
    let mut load: f64 = visits.iter().filter(|&&v| inst.is_customer(v)).map(|&v| inst.nodes[v].delivery).sum();
    out.load_ok &= load <= inst.load_capacity + TOL;
    let mut battery = inst.battery_capacity;
    let mut time = inst.nodes[0].ready;
    for p in 1..visits.len() {
        let (a, b) = (visits[p - 1], visits[p]);
        if p > 1 && inst.is_station(a) {
            time += inst.charge_rate * charges[p - 1];
            battery += charges[p - 1];
            out.battery_ok &= battery <= inst.battery_capacity + TOL && charges[p - 1] >= -TOL;
        }
        out.distance += inst.d(a, b);
        battery -= inst.consume_rate * inst.d(a, b);
        out.battery_ok &= battery >= -TOL;
        time += inst.t(a, b);
        let node = &inst.nodes[b];
        if inst.is_customer(b) {
            out.time_ok &= time <= node.due + TOL;
            time = time.max(node.ready) + node.service;
            load += node.pickup - node.delivery;
            out.load_ok &= load <= inst.load_capacity + TOL;
        } else if p + 1 == visits.len() {
            out.time_ok &= time <= node.due + TOL;
        }
    }
    out
}

/// Every way of placing up to two distinct stations in one gap.
fn gap_patterns(inst: &Instance) -> Vec<Vec<NodeId>> {
    let mut out = vec![vec![]];
    for s in inst.stations() {
        out.push(vec![s]);
    }
    for s in inst.stations() {
        for t in inst.stations() {
            if s != t {
                out.push(vec![s, t]);
            }
        }
    }
    out
}

fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Shortest feasible route over exactly `customers`, trying every order
/// and every station pattern per gap.
pub fn best_route(inst: &Instance, customers: &[NodeId]) -> Option<(f64, Vec<NodeId>)> {
    let patterns = gap_patterns(inst);
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    for order in permutations(customers) {
        let mut bare = vec![0];
        bare.extend(&order);
        bare.push(0);
        let plain = simulate(inst, &bare, &vec![0.0; bare.len()]);
        // stations only add time and distance under the triangle inequality
        if !(plain.time_ok && plain.load_ok) {
            continue;
        }
        if best.as_ref().is_some_and(|b| plain.distance >= b.0 - TOL) {
            continue;
        }
        let gaps = order.len() + 1;
        let mut choice = vec![0usize; gaps];
        loop {
            let mut visits = vec![0];
            for g in 0..gaps {
                visits.extend(&patterns[choice[g]]);
                if g < order.len() {
                    visits.push(order[g]);
                }
            }
            visits.push(0);
            let sim = simulate_oracle(inst, &visits);
            if sim.feasible() && best.as_ref().map_or(true, |b| sim.distance < b.0 - 1e-9) {
                best = Some((sim.distance, visits));
            }
            let mut g = 0;
            while g < gaps {
                choice[g] += 1;
                if choice[g] < patterns.len() {
                    break;
                }
                choice[g] = 0;
                g += 1;
            }
            if g == gaps {
                break;
            }
        }
    }
    best
}

/// Exhaustive optimum: best route per customer subset, then the cheapest
/// partition of all customers into subsets.
pub fn brute_force(inst: &Instance) -> Option<(f64, Vec<Vec<NodeId>>)> {
    let m = inst.n_customers;
    let full = (1usize << m) - 1;
    let mut single: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; full + 1];
    for mask in 1..=full {
        let customers: Vec<NodeId> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        single[mask] = best_route(inst, &customers)
            .map(|(d, v)| (inst.dispatch_cost + inst.distance_cost * d, v));
    }
    let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; full + 1];
    best[0] = Some((0.0, vec![]));
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        while sub > 0 {
            if sub & low != 0 {
                if let (Some((c1, _)), Some((c2, parts))) = (&single[sub], &best[mask ^ sub]) {
                    let c = c1 + c2;
                    if best[mask].as_ref().map_or(true, |b| c < b.0) {
                        let mut parts = parts.clone();
                        parts.push(sub);
                        best[mask] = Some((c, parts));
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
    }
    best[full].clone().map(|(c, parts)| {
        let routes = parts.iter().map(|&s| single[s].clone().unwrap().1).collect();
        (c, routes)
    })
}

/// Extra charge from the slack recursion, run to the end of the path with
/// an infinite initial slack.
pub fn slack_extra(inst: &Instance, arrive: f64, anchor: NodeId, customers: &[NodeId], q0: f64) -> f64 {
    let mut tau = f64::INFINITY;
    let mut depart = arrive + inst.charge_rate * q0;
    let mut prev = anchor;
    let mut sum = 0.0;
    for &c in customers {
        let node = &inst.nodes[c];
        let a = depart + inst.t(prev, c);
        let delta = tau.min((node.ready - a).max(0.0));
        depart = node.ready.max(a + delta) + node.service;
        tau = tau.min(node.due - a) - delta;
        sum += delta;
        prev = c;
    }
    sum / inst.charge_rate
}

/// Shortest travel times where only stations may be passed through.
pub fn station_relayed_times(inst: &Instance) -> Matrix {
    let n = inst.n_nodes();
    let mut out = Matrix::zeros(n);
    for src in 0..n {
        let mut best = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        best[src] = 0.0;
        for _ in 0..n {
            let Some(u) = (0..n).filter(|&v| !done[v]).min_by(|&a, &b| best[a].total_cmp(&best[b])) else {
                break;
            };
            done[u] = true;
            if u != src && !inst.is_station(u) {
                continue;
            }
            for v in 0..n {
                let c = best[u] + inst.t(u, v);
                if c < best[v] {
                    best[v] = c;
                }
            }
        }
        for j in 0..n {
            out.set(src, j, if j == src { 0.0 } else { best[j] });
        }
    }
    out
}

/// Instance with arbitrary, generally non-metric, positive matrices.
pub fn random_matrix_instance(seed: u64, m: usize, p: usize) -> Instance {
    let mut r = rng(seed);
    let mut inst = small_instance(seed, m, p);
    let n = inst.n_nodes();
    inst.time = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { r.gen_range(1.0..100.0f64).round() });
    inst.dist = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { r.gen_range(1.0..100.0f64).round() });
    inst.triangle_ok = false;
    inst
}

/// Random feasible solution: customers shuffled, cut into random-length
/// routes, each made feasible by station insertion or split further.
pub fn random_solution(inst: &Instance, seed: u64) -> Solution {
    let mut r = rng(seed);
    let mut customers: Vec<NodeId> = inst.customers().collect();
    customers.shuffle(&mut r);
    let mut routes = Vec::new();
    let mut rest = &customers[..];
    while !rest.is_empty() {
        let take = r.gen_range(1..=rest.len().min(4));
        let (head, tail) = rest.split_at(take);
        rest = tail;
        match best_route(inst, head) {
            Some((_, visits)) => routes.push(schedule(inst, visits)),
            None => {
                for &c in head {
                    routes.push(schedule(inst, best_route(inst, &[c]).expect("customers are servable alone").1));
                }
            }
        }
    }
    Solution::new(routes)
}

/// Route with the plan of [`oracle_charges`].
pub fn schedule(inst: &Instance, visits: Vec<NodeId>) -> Route {
    let charges = oracle_charges(inst, &visits);
    Route::new(inst, visits, charges).expect("well formed")
}

/// Applies a move from its documented semantics.
pub fn apply_reference(
    routes: &[Vec<NodeId>],
    kind: evrp_core::moves::MoveKind,
    r1: usize,
    r2: usize,
    i: usize,
    j: usize,
    len1: usize,
    len2: usize,
) -> Vec<Vec<NodeId>> {
    use evrp_core::moves::MoveKind::*;
    let mut out = routes.to_vec();
    match kind {
        TwoOpt => out[r1][i..=j].reverse(),
        TwoOptStar => {
            let (a, b) = (&routes[r1], &routes[r2]);
            out[r1] = a[..=i].iter().chain(&b[j + 1..]).copied().collect();
            out[r2] = b[..=j].iter().chain(&a[i + 1..]).copied().collect();
        }
        OrOpt | Relocate => {
            let seg: Vec<NodeId> = routes[r1][i..i + len1].to_vec();
            if r1 == r2 {
                let mut tagged: Vec<Option<NodeId>> = routes[r1].iter().map(|&v| Some(v)).collect();
                for t in &mut tagged[i..i + len1] {
                    *t = None;
                }
                let mut new = Vec::new();
                for (p, v) in tagged.iter().enumerate() {
                    if p == j {
                        new.extend(&seg);
                    }
                    if let Some(v) = v {
                        new.push(*v);
                    }
                }
                out[r1] = new;
            } else {
                out[r1].drain(i..i + len1);
                let tail = out[r2].split_off(j);
                out[r2].extend(&seg);
                out[r2].extend(tail);
            }
        }
        Swap => {
            let s1: Vec<NodeId> = routes[r1][i..i + len1].to_vec();
            let s2: Vec<NodeId> = routes[r2][j..j + len2].to_vec();
            if r1 == r2 {
                let r = &routes[r1];
                let mut new = r[..i].to_vec();
                new.extend(&s2);
                new.extend(&r[i + len1..j]);
                new.extend(&s1);
                new.extend(&r[j + len2..]);
                out[r1] = new;
            } else {
                out[r1].splice(i..i + len1, s2);
                out[r2].splice(j..j + len2, s1);
            }
        }
    }
    out
}
