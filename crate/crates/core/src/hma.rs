//! The hybrid driver: large neighborhood search with a memetic phase
//! entered on stagnation.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdns::{cdns, SearchMode};
use crate::charge::schedule_route;
use crate::construct::{destroy_repair, rcrs_construct, regret_insert, DestroyParams, RcrsParams};
use crate::decompose::{bcd_decompose, subproblem_count};
use crate::error::SolveError;
use crate::model::{Instance, NodeId, Route, Solution, EPS};
use crate::preprocess::{ensure_triangle, rank_stations};
use crate::pssi::{Electrifier, PssiParams, PssiStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmaParams {
    /// Stagnant LNS iterations before the memetic phase.
    pub g1: usize,
    /// Stagnant generations that end the memetic phase.
    pub g2: usize,
    pub population: usize,
    pub alpha: usize,
    pub generations: usize,
    pub sr: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Wall-clock seconds; unlimited when absent.
    pub time_limit: Option<f64>,
    /// Instances with more customers run in large-scale mode.
    pub large_scale_threshold: usize,
    /// Number of parts in large-scale mode; derived from the size if absent.
    pub subproblems: Option<usize>,
    pub seed: u64,
}

impl Default for HmaParams {
    fn default() -> Self {
        HmaParams::akb_small()
    }
}

impl HmaParams {
    pub fn akb_small() -> Self {
        HmaParams {
            g1: 20,
            g2: 20,
            population: 9,
            alpha: 3,
            generations: 5,
            sr: 1.0,
            omega1: 0.2,
            omega2: 0.4,
            time_limit: None,
            large_scale_threshold: 200,
            subproblems: None,
            seed: 0,
        }
    }

    pub fn akb_medium() -> Self {
        HmaParams {
            population: 4,
            sr: 0.5,
            omega1: 0.1,
            omega2: 0.2,
            ..HmaParams::akb_small()
        }
    }

    pub fn jd() -> Self {
        HmaParams {
            population: 4,
            sr: 0.1,
            omega1: 0.05,
            omega2: 0.05,
            large_scale_threshold: 199,
            ..HmaParams::akb_small()
        }
    }

    pub fn pssi(&self) -> PssiParams {
        PssiParams {
            alpha: self.alpha,
            generations: self.generations,
            ..PssiParams::default()
        }
    }

    pub fn destroy(&self) -> DestroyParams {
        DestroyParams {
            omega1: self.omega1,
            omega2: self.omega2,
        }
    }

    pub fn mode(&self, n_customers: usize) -> SearchMode {
        if n_customers > self.large_scale_threshold {
            SearchMode::LargeScale
        } else {
            SearchMode::Full
        }
    }
}

/// Wall-clock budget, checked between atomic steps.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    start: Instant,
    deadline: Option<Instant>,
}

impl Budget {
    pub fn new(limit: Option<f64>) -> Self {
        let start = Instant::now();
        Budget {
            start,
            deadline: limit.map(|s| start + Duration::from_secs_f64(s.max(0.0))),
        }
    }

    pub fn unlimited() -> Self {
        Budget::new(None)
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub elapsed: f64,
    pub cost: f64,
    pub vehicles: usize,
}

#[derive(Debug, Clone)]
pub struct HmaResult {
    pub solution: Solution,
    pub log: Vec<LogEntry>,
    pub initial_cost: f64,
    pub time_to_best: f64,
    pub elapsed: f64,
    pub lns_iterations: usize,
    pub memetic_rounds: usize,
    pub stats: PssiStats,
}

/// Seeds a population of `n` around the elite: odd members by
/// destroy-repair with a removal share of `i / n`, even members by
/// construction on a grid of weights.
pub fn population_init<R: Rng>(
    elec: &mut Electrifier<'_>,
    elite: &Solution,
    n: usize,
    rng: &mut R,
) -> Vec<Solution> {
    let mut pop = Vec::with_capacity(n);
    pop.push(elite.clone());
    for i in 2..=n {
        let member = if i % 2 == 1 {
            let w = i as f64 / n as f64;
            destroy_repair(elec, elite, &DestroyParams { omega1: w, omega2: w }, rng)
        } else {
            rcrs_construct(elec, &seeding_weights(i, n), rng).unwrap_or_else(|_| elite.clone())
        };
        pop.push(member);
    }
    pop
}

/// Construction weights of the `i`-th member (1-based) on a `ceil(sqrt(n))`
/// grid.
pub fn seeding_weights(i: usize, n: usize) -> RcrsParams {
    let side = (n as f64).sqrt().ceil() as usize;
    let p = i.div_ceil(side);
    let q = i - side * (p - 1);
    let scale = |v: usize| {
        if side > 1 {
            (v - 1) as f64 / (side - 1) as f64
        } else {
            0.0
        }
    };
    RcrsParams {
        lambda: scale(p),
        gamma: scale(q),
    }
}

/// Builds a child from whole parent routes, alternating between parents
/// and taking the cheapest route per customer whose customers are all
/// still free, then inserts the remaining customers by regret.
pub fn rari_crossover<R: Rng>(
    elec: &mut Electrifier<'_>,
    p1: &Solution,
    p2: &Solution,
    rng: &mut R,
) -> Solution {
    let instance = elec.instance;
    let mut taken = vec![false; instance.n_nodes()];
    let mut used = [vec![false; p1.routes.len()], vec![false; p2.routes.len()]];
    let parents = [p1, p2];
    let mut child: Vec<Route> = Vec::new();
    let mut turn = 0;
    loop {
        let pick = |side: usize, used: &[Vec<bool>; 2], taken: &[bool]| {
            parents[side]
                .routes
                .iter()
                .enumerate()
                .filter(|(k, r)| !used[side][*k] && r.customers(instance).all(|c| !taken[c]))
                .map(|(k, r)| {
                    let per = crate::model::route_cost(instance, r.distance()) / r.customer_count(instance).max(1) as f64;
                    (per, k)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, k)| k)
        };
        let (side, k) = match pick(turn, &used, &taken) {
            Some(k) => (turn, k),
            None => match pick(1 - turn, &used, &taken) {
                Some(k) => (1 - turn, k),
                None => break,
            },
        };
        used[side][k] = true;
        let route = &parents[side].routes[k];
        for c in route.customers(instance) {
            taken[c] = true;
        }
        child.push(route.clone());
        turn = 1 - side;
    }
    let missing: Vec<NodeId> = instance.customers().filter(|&c| !taken[c]).collect();
    match regret_insert(elec, Solution::new(child), &missing, rng) {
        Ok(s) if s.routes_feasible() => s,
        _ => p1.clone(),
    }
}

fn best_of(instance: &Instance, pop: &[Solution]) -> usize {
    (0..pop.len())
        .min_by(|&a, &b| pop[a].cost(instance).total_cmp(&pop[b].cost(instance)))
        .expect("population is non-empty")
}

/// Population search started from `elite`; returns the best solution seen.
pub fn memetic_search<R: Rng>(
    elec: &mut Electrifier<'_>,
    elite: &Solution,
    params: &HmaParams,
    mode: SearchMode,
    budget: &Budget,
    rng: &mut R,
) -> Solution {
    let instance = elec.instance;
    let n = params.population.max(1);
    let mut pop = population_init(elec, elite, n, rng);
    let mut best = pop[best_of(instance, &pop)].clone();
    let mut best_cost = best.cost(instance);
    let mut stagnant = 0;
    let mut order: Vec<usize> = (0..n).collect();
    while stagnant < params.g2 && !budget.expired() {
        order.shuffle(rng);
        let mut improved = false;
        for i in 0..n {
            if budget.expired() {
                break;
            }
            let (a, b) = (order[i], order[(i + 1) % n]);
            let child = rari_crossover(elec, &pop[a], &pop[b], rng);
            let child = cdns(elec, &child, mode, rng);
            let cost = child.cost(instance);
            if cost < pop[a].cost(instance) {
                pop[a] = child;
            }
            if cost < best_cost - EPS {
                best = pop[a].clone();
                best_cost = cost;
                improved = true;
            }
        }
        stagnant = if improved { 0 } else { stagnant + 1 };
    }
    best
}

/// Derives a stream seed for part `index` of a run seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Memetic search run independently on each part of a barycenter
/// decomposition; parts are solved in parallel and reassembled.
pub fn decomposed_memetic_search<R: Rng>(
    instance: &Instance,
    elite: &Solution,
    params: &HmaParams,
    budget: &Budget,
    rng: &mut R,
) -> (Solution, PssiStats) {
    let k = params.subproblems.unwrap_or_else(|| subproblem_count(instance.n_customers));
    let parts = bcd_decompose(instance, elite, k, rng);
    let base = rng.gen::<u64>();
    let solved: Vec<(Vec<Vec<NodeId>>, PssiStats)> = parts
        .par_iter()
        .enumerate()
        .map(|(idx, part)| {
            let ranking = rank_stations(&part.instance, params.sr);
            let mut elec = Electrifier::new(&part.instance, &ranking, params.pssi());
            let mut sub_rng = ChaCha8Rng::seed_from_u64(derive_seed(base, idx as u64));
            let s = memetic_search(&mut elec, &part.solution, params, SearchMode::LargeScale, budget, &mut sub_rng);
            let routes = s.routes.iter().map(|r| part.lift(r.visits())).collect();
            (routes, elec.stats)
        })
        .collect();
    let mut stats = PssiStats::default();
    let mut routes = Vec::new();
    for (visits, st) in solved {
        stats.merge(&st);
        for v in visits {
            routes.push(schedule_route(instance, v).expect("lifted route is well formed"));
        }
    }
    (Solution::new(routes), stats)
}

struct Tracker {
    log: Vec<LogEntry>,
    time_to_best: f64,
}

impl Tracker {
    fn record(&mut self, instance: &Instance, s: &Solution, budget: &Budget) {
        self.time_to_best = budget.elapsed();
        self.log.push(LogEntry {
            elapsed: self.time_to_best,
            cost: s.cost(instance),
            vehicles: s.vehicle_count(),
        });
    }
}

/// Solves an instance. Instances whose travel times may break the triangle
/// inequality are solved on their station-relayed closure and the result
/// is expanded back onto the original arcs.
pub fn hma_solve(instance: &Instance, params: &HmaParams) -> Result<HmaResult, SolveError> {
    let budget = Budget::new(params.time_limit);
    let (work, relays) = ensure_triangle(instance);
    let ranking = rank_stations(&work, params.sr);
    let mut elec = Electrifier::new(&work, &ranking, params.pssi());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mode = params.mode(work.n_customers);
    let destroy = params.destroy();

    let mut best = rcrs_construct(&mut elec, &RcrsParams::default(), &mut rng)?;
    let mut best_cost = best.cost(&work);
    let initial_cost = best_cost;
    let mut tracker = Tracker {
        log: Vec::new(),
        time_to_best: 0.0,
    };
    tracker.record(&work, &best, &budget);
    let mut extra = PssiStats::default();
    let (mut lns_iterations, mut memetic_rounds) = (0, 0);

    'outer: loop {
        let mut stagnant = 0;
        while stagnant < params.g1 {
            if budget.expired() {
                break 'outer;
            }
            lns_iterations += 1;
            let s = destroy_repair(&mut elec, &best, &destroy, &mut rng);
            let s = cdns(&mut elec, &s, mode, &mut rng);
            let cost = s.cost(&work);
            if cost < best_cost - EPS {
                best = s;
                best_cost = cost;
                tracker.record(&work, &best, &budget);
                stagnant = 0;
            } else {
                stagnant += 1;
            }
        }
        if budget.expired() {
            break;
        }
        memetic_rounds += 1;
        let s = match mode {
            SearchMode::Full => memetic_search(&mut elec, &best, params, mode, &budget, &mut rng),
            SearchMode::LargeScale => {
                let (s, st) = decomposed_memetic_search(&work, &best, params, &budget, &mut rng);
                extra.merge(&st);
                s
            }
        };
        let cost = s.cost(&work);
        if cost < best_cost - EPS {
            best = s;
            best_cost = cost;
            tracker.record(&work, &best, &budget);
        } else {
            break;
        }
    }

    let solution = if relays.is_identity() {
        best
    } else {
        Solution::new(
            best.routes
                .iter()
                .map(|r| schedule_route(instance, relays.expand(r.visits())).expect("expanded route is well formed"))
                .collect(),
        )
    };
    let mut stats = elec.stats;
    stats.merge(&extra);
    Ok(HmaResult {
        solution,
        log: tracker.log,
        initial_cost,
        time_to_best: tracker.time_to_best,
        elapsed: budget.elapsed(),
        lns_iterations,
        memetic_rounds,
        stats,
    })
}
