//! Property checks, each driven by a seed. The proptest suites sample
//! seeds; the acceptance harness sweeps fixed seed ranges.

use evrp_core::cdns::{cdns, SearchMode};
use evrp_core::charge::{additional_charge, minimal_charge, plan_charges, PathSegment};
use evrp_core::construct::same_coverage;
use evrp_core::hma::{hma_solve, HmaParams};
use evrp_core::io::{parse_akb, parse_jd, read_solution, write_akb, write_jd, write_solution};
use evrp_core::moves::{apply_move, for_each_move, Electric, Move, NonElectric};
use evrp_core::pssi::{psi, pssi, ssi, Electrifier, PssiParams};
use evrp_core::{check_feasibility, hyperarc_closure, rank_stations, strip_stations, NodeId, Solution};
use rand::seq::SliceRandom;
use rand::Rng;

use super::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn sized(seed: u64, m: (usize, usize), p: (usize, usize)) -> Instance {
    let mut r = rng(seed ^ 0x5eed);
    let m = r.gen_range(m.0..=m.1);
    let p = r.gen_range(p.0..=p.1);
    small_instance(seed, m, p)
}

/// A feasible solution with stations stays time and load feasible once
/// its stations are removed.
pub fn strip_keeps_feasibility(seed: u64) -> Check {
    let inst = sized(seed, (2, 8), (1, 2));
    let s = random_solution(&inst, seed);
    ensure!(check_feasibility(&inst, &s).is_feasible(), "generator produced an infeasible solution");
    let stripped = strip_stations(&inst, &s);
    for r in &stripped.routes {
        let sim = simulate(&inst, r.visits(), r.charges());
        ensure!(sim.time_ok && sim.load_ok, "stripped route {:?} breaks time or load", r.visits());
        ensure!(r.eval().feasible_without_battery(), "library disagrees on {:?}", r.visits());
    }
    Ok(())
}

/// Planned charges stay within `[0, Q - y]`, feasible plans keep the
/// battery inside `[0, Q]`, and the planner succeeds exactly when the
/// reference plan does.
pub fn charge_plans_bounded(seed: u64) -> Check {
    let inst = sized(seed, (2, 8), (1, 3));
    let mut r = rng(seed);
    let mut visits = vec![0];
    let mut customers: Vec<NodeId> = inst.customers().collect();
    customers.shuffle(&mut r);
    customers.truncate(r.gen_range(1..=customers.len()));
    for c in customers {
        if r.gen_bool(0.4) {
            visits.push(r.gen_range(inst.stations()));
        }
        visits.push(c);
    }
    if r.gen_bool(0.4) {
        visits.push(r.gen_range(inst.stations()));
    }
    visits.push(0);
    // consecutive duplicate stations are legal but pointless
    visits.dedup();

    let plan = plan_charges(&inst, &visits);
    let route = evrp_core::Route::new(&inst, visits.clone(), plan.charges.clone()).map_err(|e| e.to_string())?;
    let eval = route.eval();
    for (p, &q) in plan.charges.iter().enumerate() {
        ensure!(q >= -TOL, "negative charge {q} at {p}");
        if eval.batt_arrive[p] >= 0.0 {
            ensure!(q <= inst.battery_capacity - eval.batt_arrive[p] + TOL, "charge {q} overfills at {p}");
        }
    }
    let reference = simulate_oracle(&inst, &visits);
    ensure!(
        plan.feasible() == reference.feasible(),
        "planner says {} but the reference plan says {} for {:?}",
        plan.feasible(),
        reference.feasible(),
        visits
    );
    if plan.feasible() {
        ensure!(route.is_feasible(), "feasible plan evaluates infeasible");
        for p in 0..visits.len() {
            for y in [eval.batt_arrive[p], eval.batt_depart[p]] {
                ensure!(y >= -TOL && y <= inst.battery_capacity + TOL, "battery {y} at {p}");
            }
        }
    }
    Ok(())
}

/// No charge vector on a coarse grid is feasible when the reference plan
/// is not.
pub fn grid_never_beats_reference(seed: u64) -> Check {
    let inst = sized(seed, (2, 5), (1, 2));
    let mut r = rng(seed);
    let mut customers: Vec<NodeId> = inst.customers().collect();
    customers.shuffle(&mut r);
    customers.truncate(3);
    let mut visits = vec![0, customers[0]];
    visits.push(r.gen_range(inst.stations()));
    visits.extend(&customers[1..]);
    visits.push(r.gen_range(inst.stations()));
    visits.push(0);
    visits.dedup();
    let stations: Vec<usize> = (1..visits.len() - 1).filter(|&p| inst.is_station(visits[p])).collect();
    let steps = 20;
    let grid: Vec<f64> = (0..=steps).map(|k| inst.battery_capacity * k as f64 / steps as f64).collect();
    let min_ok = simulate_oracle(&inst, &visits).feasible();
    let mut charges = vec![0.0; visits.len()];
    let mut idx = vec![0usize; stations.len()];
    loop {
        for (k, &p) in stations.iter().enumerate() {
            charges[p] = grid[idx[k]];
        }
        if simulate(&inst, &visits, &charges).feasible() {
            ensure!(min_ok, "grid plan {charges:?} works on {visits:?} but the reference plan fails");
            ensure!(plan_charges(&inst, &visits).feasible(), "planner misses grid plan {charges:?}");
            return Ok(());
        }
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return Ok(());
        }
    }
}

fn reference_delta(inst: &Instance, before: &[Vec<NodeId>], after: &[Vec<NodeId>], battery: bool) -> (f64, bool) {
    let cost = |routes: &[Vec<NodeId>]| -> f64 {
        routes
            .iter()
            .filter(|r| r.iter().any(|&v| inst.is_customer(v)))
            .map(|r| inst.dispatch_cost + inst.distance_cost * r.windows(2).map(|w| inst.d(w[0], w[1])).sum::<f64>())
            .sum()
    };
    let feasible = after.iter().filter(|r| r.iter().any(|&v| inst.is_customer(v))).all(|r| {
        if battery {
            simulate_oracle(inst, r).feasible()
        } else {
            let sim = simulate(inst, r, &vec![0.0; r.len()]);
            sim.time_ok && sim.load_ok
        }
    });
    (cost(after) - cost(before), feasible)
}

fn sample_moves(lens: &[usize], count: usize, seed: u64) -> Vec<Move> {
    let mut all = Vec::new();
    for_each_move(lens, |mv| all.push(mv));
    let mut r = rng(seed);
    all.shuffle(&mut r);
    all.truncate(count);
    all
}

/// Move evaluation in both spaces agrees with applying the move from its
/// definition and recomputing from scratch. Returns the number of moves
/// checked.
pub fn move_deltas_agree(seed: u64, per_solution: usize) -> Result<usize, String> {
    let inst = sized(seed, (5, 10), (1, 2));
    let s = random_solution(&inst, seed);
    let with_stations: Vec<Vec<NodeId>> = s.routes.iter().map(|r| r.visits().to_vec()).collect();
    let stripped: Vec<Vec<NodeId>> = s.routes.iter().map(|r| r.stripped_visits(&inst)).collect();
    let mut checked = 0;

    let plain = NonElectric::new(&inst, &stripped);
    let lens: Vec<usize> = stripped.iter().map(Vec::len).collect();
    for mut mv in sample_moves(&lens, per_solution / 2, seed) {
        plain.evaluate(&mut mv);
        let after = apply_reference(&stripped, mv.kind, mv.r1, mv.r2, mv.i, mv.j, mv.len1, mv.len2);
        let mut kept = after.clone();
        kept.retain(|r| r.iter().any(|&v| inst.is_customer(v)));
        ensure!(apply_move(&inst, &stripped, &mv) == kept, "{mv:?} applied differently");
        let (delta, feasible) = reference_delta(&inst, &stripped, &after, false);
        ensure!((delta - mv.delta).abs() <= TOL, "{mv:?}: delta {} vs {delta}", mv.delta);
        ensure!(feasible == mv.feasible, "{mv:?}: feasible {} vs {feasible}", mv.feasible);
        checked += 1;
    }

    let electric = Electric::new(&inst, &with_stations);
    let lens: Vec<usize> = with_stations.iter().map(Vec::len).collect();
    for mv in sample_moves(&lens, per_solution - per_solution / 2, seed + 1) {
        let after = apply_reference(&with_stations, mv.kind, mv.r1, mv.r2, mv.i, mv.j, mv.len1, mv.len2);
        let (delta, feasible) = reference_delta(&inst, &with_stations, &after, true);
        let got = electric.delta(&mv);
        ensure!((delta - got).abs() <= TOL, "{mv:?}: electric delta {got} vs {delta}");
        ensure!(feasible == electric.is_feasible(&mv), "{mv:?}: electric feasibility differs");
        checked += 1;
    }
    Ok(checked)
}

/// PSSI returns a feasible route or nothing, and nothing only when both
/// branches fail.
pub fn pssi_feasible_or_joint_failure(seed: u64) -> Check {
    let inst = sized(seed, (3, 9), (1, 3));
    let ranking = rank_stations(&inst, 1.0);
    let mut r = rng(seed);
    let mut customers: Vec<NodeId> = inst.customers().collect();
    customers.shuffle(&mut r);
    customers.truncate(r.gen_range(1..=customers.len()));
    let mut visits = vec![0];
    visits.extend(customers);
    visits.push(0);
    let params = PssiParams::default();
    let out = pssi(&inst, &ranking, &visits, &params, &mut rng(seed + 7));
    let bare = simulate(&inst, &visits, &vec![0.0; visits.len()]);
    match out {
        Some(route) => {
            ensure!(route.is_feasible(), "infeasible route {:?}", route.visits());
            let sim = simulate(&inst, route.visits(), route.charges());
            ensure!(sim.feasible(), "reference rejects {:?}", route.visits());
            ensure!(route.stripped_visits(&inst) == visits, "customer order changed");
            if !bare.feasible() {
                let a = psi(&inst, &ranking, &visits, &params, &mut rng(seed + 7));
                let b = ssi(&inst, &ranking, &visits);
                let best = [a, b].into_iter().flatten().map(|r| r.distance()).fold(f64::INFINITY, f64::min);
                ensure!((route.distance() - best).abs() <= 1e-9, "not the better branch");
            }
        }
        None => {
            if bare.time_ok && bare.load_ok {
                ensure!(psi(&inst, &ranking, &visits, &params, &mut rng(seed + 7)).is_none(), "PSI alone succeeds");
                ensure!(ssi(&inst, &ranking, &visits).is_none(), "SSI alone succeeds");
            }
        }
    }
    Ok(())
}

/// The neighborhood search never increases cost or breaks feasibility.
pub fn cdns_monotone(seed: u64) -> Check {
    let inst = sized(seed, (3, 9), (1, 2));
    let ranking = rank_stations(&inst, 1.0);
    let mut elec = Electrifier::new(&inst, &ranking, PssiParams::default());
    let s = random_solution(&inst, seed);
    let before = s.cost(&inst);
    for mode in [SearchMode::Full, SearchMode::LargeScale] {
        let t = cdns(&mut elec, &s, mode, &mut rng(seed));
        ensure!(t.cost(&inst) <= before + TOL, "{mode:?}: {before} -> {}", t.cost(&inst));
        ensure!(check_feasibility(&inst, &t).is_feasible(), "{mode:?}: infeasible result");
        ensure!(same_coverage(&inst, &s, &t), "{mode:?}: coverage changed");
    }
    Ok(())
}

/// Instances and solutions survive a write/parse cycle exactly.
pub fn round_trips(seed: u64) -> Check {
    let inst = sized(seed, (1, 8), (0, 3));
    let akb = parse_akb(&inst.name, &write_akb(&inst, 1.0)).map_err(|e| e.to_string())?;
    ensure!(akb == inst, "akb round trip differs");

    let mut geo = inst.clone();
    geo.coord_mode = evrp_core::CoordMode::Geographic;
    geo.triangle_ok = false;
    for n in &mut geo.nodes {
        n.name = n.id.to_string();
    }
    let jd = parse_jd(&write_jd(&geo)).map_err(|e| e.to_string())?;
    ensure!(jd == geo, "jd round trip differs");

    let s = random_solution(&inst, seed);
    let back = read_solution(&write_solution(&s, &inst), &inst).map_err(|e| e.to_string())?;
    ensure!(back == s, "solution round trip differs");
    ensure!((back.cost(&inst) - s.cost(&inst)).abs() <= 1e-9, "cost changed");
    let empty = read_solution(&write_solution(&Solution::default(), &inst), &inst).map_err(|e| e.to_string())?;
    ensure!(empty.routes.is_empty(), "empty solution grew routes");
    Ok(())
}

/// Station-relayed closure matches an independent shortest-path search,
/// and relays expand to paths with the closed times and distances.
pub fn closure_matches_apsp(seed: u64) -> Check {
    let inst = random_matrix_instance(seed, 5, 4);
    ensure!(inst.n_nodes() == 10, "expected 10 nodes");
    let (closed, map) = hyperarc_closure(&inst);
    let oracle = station_relayed_times(&inst);
    for i in 0..10 {
        for j in 0..10 {
            ensure!((closed.t(i, j) - oracle.get(i, j)).abs() <= 1e-9, "time ({i},{j}) {} vs {}", closed.t(i, j), oracle.get(i, j));
            let path = map.expand(&[i, j]);
            ensure!(path.first() == Some(&i) && path.last() == Some(&j), "bad expansion");
            ensure!(path[1..path.len() - 1].iter().all(|&k| inst.is_station(k)), "relay through a non-station");
            let t: f64 = path.windows(2).map(|w| inst.t(w[0], w[1])).sum();
            let d: f64 = path.windows(2).map(|w| inst.d(w[0], w[1])).sum();
            ensure!((t - closed.t(i, j)).abs() <= 1e-9 && (d - closed.d(i, j)).abs() <= 1e-9, "expansion of ({i},{j}) mismatched");
        }
    }
    Ok(())
}

/// Stopping the slack recursion once no slack remains gives the same
/// extra charge as running it to the end, on time-feasible paths.
pub fn early_termination_equivalent(seed: u64) -> Check {
    let inst = sized(seed, (2, 8), (1, 2));
    let mut r = rng(seed);
    let mut customers: Vec<NodeId> = inst.customers().collect();
    customers.shuffle(&mut r);
    customers.truncate(r.gen_range(1..=customers.len()));
    let anchor = if r.gen_bool(0.5) { 0 } else { r.gen_range(inst.stations()) };
    let arrive = r.gen_range(0.0..150.0f64);
    let battery = r.gen_range(0.0..inst.battery_capacity);
    let seg = PathSegment {
        anchor,
        arrive,
        battery,
        customers: &customers,
        end: 0,
    };
    let q0 = minimal_charge(&inst, &seg);
    // time feasibility of the path when charging q0
    let mut time = arrive + inst.charge_rate * q0;
    let mut prev = anchor;
    for &c in &customers {
        time += inst.t(prev, c);
        if time > inst.nodes[c].due {
            return Ok(());
        }
        time = time.max(inst.nodes[c].ready) + inst.nodes[c].service;
        prev = c;
    }
    let (q1, _) = additional_charge(&inst, &seg, q0);
    let full = slack_extra(&inst, arrive, anchor, &customers, q0);
    ensure!((q1 - full).abs() <= 1e-9, "early stop {q1} vs full {full}");
    Ok(())
}

fn determinism_params(seed: u64) -> HmaParams {
    HmaParams {
        g1: 4,
        g2: 3,
        population: 4,
        time_limit: None,
        seed,
        ..HmaParams::akb_small()
    }
}

/// Identical parameters give identical solutions and logs, including in
/// large-scale mode with parts solved on several threads.
pub fn seed_determinism(seed: u64) -> Check {
    let inst = sized(seed, (4, 7), (1, 2));
    let params = determinism_params(seed);
    let a = hma_solve(&inst, &params).map_err(|e| e.to_string())?;
    let b = hma_solve(&inst, &params).map_err(|e| e.to_string())?;
    ensure!(a.solution == b.solution, "full mode differs across runs");
    let costs = |r: &evrp_core::hma::HmaResult| r.log.iter().map(|e| (e.cost, e.vehicles)).collect::<Vec<_>>();
    ensure!(costs(&a) == costs(&b), "logs differ");

    let big = evrp_core::io::generate_jd_like(40, 6, seed, &Default::default());
    let params = HmaParams {
        large_scale_threshold: 10,
        subproblems: Some(2),
        g1: 2,
        g2: 2,
        population: 2,
        sr: 0.5,
        ..params
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| hma_solve(&big, &params))
            .map_err(|e| e.to_string())
    };
    let one = run(1)?;
    let four = run(4)?;
    ensure!(one.solution == four.solution, "large-scale result depends on thread count");
    ensure!(check_feasibility(&big, &one.solution).is_feasible(), "large-scale result infeasible");
    Ok(())
}
