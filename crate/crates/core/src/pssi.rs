//! Station insertion for electricity-infeasible routes.
//!
//! Two branches run on the station-free projection of a route: a small
//! genetic search over "charge in this gap" bit strings (PSI) and a greedy
//! sequential repair that fixes the first battery failure at a time (SSI).
//! The shorter of the two results wins.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charge::{plan_charges, run_segment, schedule_route, AnchorState};
use crate::model::{Instance, NodeId, Route, EPS};
use crate::preprocess::StationRanking;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PssiParams {
    /// Population size is `alpha` times the number of gaps.
    pub alpha: usize,
    /// Generations.
    pub generations: usize,
    pub flip_prob: f64,
    pub one_to_zero_prob: f64,
    /// Initial population gets `regen_factor * size` decode attempts.
    pub regen_factor: usize,
}

impl Default for PssiParams {
    fn default() -> Self {
        PssiParams {
            alpha: 3,
            generations: 5,
            flip_prob: 0.02,
            one_to_zero_prob: 0.20,
            regen_factor: 50,
        }
    }
}

/// One bit per gap of the station-free route, plus its decoded route.
#[derive(Debug, Clone, PartialEq)]
pub struct GapChromosome {
    pub bits: Vec<bool>,
    pub route: Route,
}

fn total_delivery(instance: &Instance, visits: &[NodeId]) -> f64 {
    visits
        .iter()
        .filter(|&&v| instance.is_customer(v))
        .map(|&v| instance.nodes[v].delivery)
        .sum()
}

/// Inserts, for every set bit, the best-ranked station that keeps the
/// prefix up to that station feasible. `stripped` must not contain stations.
pub fn decode(
    instance: &Instance,
    ranking: &StationRanking,
    stripped: &[NodeId],
    bits: &[bool],
) -> Option<Route> {
    debug_assert_eq!(bits.len() + 1, stripped.len());
    let load = total_delivery(instance, stripped);
    if load > instance.load_capacity + EPS {
        return None;
    }
    let mut state = AnchorState::start(instance, load);
    let mut visits = Vec::with_capacity(stripped.len() + bits.len());
    let mut charges = Vec::with_capacity(visits.capacity());
    visits.push(stripped[0]);
    charges.push(0.0);
    let mut anchor = 0;
    let mut path = Vec::with_capacity(stripped.len() + 1);
    for (g, &bit) in bits.iter().enumerate() {
        if bit {
            let (i, j) = (stripped[g], stripped[g + 1]);
            let mut placed = false;
            for k in ranking.candidates(i, j) {
                path.clear();
                path.extend_from_slice(&visits[anchor..]);
                path.push(k);
                let seg = run_segment(instance, state, &path);
                if seg.ok() {
                    charges[anchor] = seg.charge;
                    state = seg.next;
                    anchor = visits.len();
                    visits.push(k);
                    charges.push(0.0);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return None;
            }
        }
        visits.push(stripped[g + 1]);
        charges.push(0.0);
    }
    let seg = run_segment(instance, state, &visits[anchor..]);
    if !seg.ok() {
        return None;
    }
    charges[anchor] = seg.charge;
    let route = Route::new(instance, visits, charges).ok()?;
    route.is_feasible().then_some(route)
}

/// Genetic station insertion over gap bit strings.
pub fn psi<R: Rng>(
    instance: &Instance,
    ranking: &StationRanking,
    stripped: &[NodeId],
    params: &PssiParams,
    rng: &mut R,
) -> Option<Route> {
    let gaps = stripped.len() - 1;
    let size = (params.alpha * gaps).max(1);
    let mut population: Vec<GapChromosome> = Vec::with_capacity(size);
    let mut attempts = params.regen_factor * size;
    while population.len() < size && attempts > 0 {
        attempts -= 1;
        let bits: Vec<bool> = (0..gaps).map(|_| rng.gen_bool(0.5)).collect();
        if let Some(route) = decode(instance, ranking, stripped, &bits) {
            population.push(GapChromosome { bits, route });
        }
    }
    if population.is_empty() {
        return None;
    }
    let found = population.len();
    for k in found..size {
        population.push(population[k % found].clone());
    }

    let mut child = vec![false; gaps];
    for _ in 0..params.generations {
        for i in 0..size {
            let p1 = rng.gen_range(0..size);
            let p2 = rng.gen_range(0..size);
            for g in 0..gaps {
                let mut bit = population[p1].bits[g] ^ population[p2].bits[g];
                if rng.gen_bool(params.flip_prob) {
                    bit = !bit;
                }
                if bit && rng.gen_bool(params.one_to_zero_prob) {
                    bit = false;
                }
                child[g] = bit;
            }
            if let Some(route) = decode(instance, ranking, stripped, &child) {
                if route.distance() < population[i].route.distance() {
                    population[i] = GapChromosome {
                        bits: child.clone(),
                        route,
                    };
                }
            }
        }
    }
    population
        .into_iter()
        .reduce(|best, c| {
            if c.route.distance() < best.route.distance() {
                c
            } else {
                best
            }
        })
        .map(|c| c.route)
}

struct Trace {
    feasible: bool,
    negatives: usize,
    /// Total battery shortfall over negative arrivals.
    deficit: f64,
    eval: crate::model::RouteEval,
}

fn trace(instance: &Instance, visits: &[NodeId]) -> Option<Trace> {
    let plan = plan_charges(instance, visits);
    let eval = crate::model::evaluate_route(instance, visits, &plan.charges).ok()?;
    Some(Trace {
        feasible: plan.feasible(),
        negatives: plan.negatives,
        deficit: eval.batt_arrive.iter().map(|&y| (-y).max(0.0)).sum(),
        eval,
    })
}

/// Customers served before the first violation of any constraint.
fn served_before_violation(instance: &Instance, visits: &[NodeId], eval: &crate::model::RouteEval) -> usize {
    let first = eval.violations.iter().map(|&(p, _)| p).min().unwrap_or(visits.len());
    visits[..first.min(visits.len())].iter().filter(|&&v| instance.is_customer(v)).count()
}

/// Greedy sequential station insertion followed by refinement of runs of
/// adjacent stations. Existing stations in `visits` are kept.
///
/// While the battery runs negative somewhere, a station is inserted
/// between the last anchor before the first negative position and that
/// position, choosing the smallest detour among insertions that keep the
/// prefix feasible and reduce the number of negative positions, or keep
/// that number and reduce the total shortfall. When the battery holds but
/// charging time breaks a window, a station is inserted after one of the
/// two anchors before the violation so that a charge can be split,
/// provided more customers are served before the first violation.
pub fn ssi(instance: &Instance, ranking: &StationRanking, visits: &[NodeId]) -> Option<Route> {
    let mut visits = visits.to_vec();
    let mut current = trace(instance, &visits)?;
    let mut budget = 2 * visits.len();
    while !current.feasible {
        if budget == 0 {
            return None;
        }
        budget -= 1;
        let eval = &current.eval;
        let negative = eval.batt_arrive.iter().position(|&y| y < -EPS);
        let (gaps, served) = match negative {
            Some(right) => {
                let left = last_anchor(instance, &visits, right);
                (left..right, 0)
            }
            None => {
                let uncharged = crate::model::evaluate_route(instance, &visits, &vec![0.0; visits.len()]).ok()?;
                if !uncharged.feasible_without_battery() {
                    return None;
                }
                let first = eval.violations.iter().map(|&(p, _)| p).min()?;
                // the charge taken at the anchor before the violation can
                // also be split with a station ahead of that anchor
                let left = last_anchor(instance, &visits, last_anchor(instance, &visits, first));
                (left..visits.len() - 1, served_before_violation(instance, &visits, eval))
            }
        };

        // (tier, detour): fewer negative positions beats a smaller shortfall
        let mut best: Option<((u8, f64), usize, NodeId, Trace)> = None;
        let mut candidate = Vec::with_capacity(visits.len() + 1);
        for g in gaps {
            let (i, j) = (visits[g], visits[g + 1]);
            for k in ranking.candidates(i, j) {
                if k == i || k == j {
                    continue;
                }
                let added = instance.d(i, k) + instance.d(k, j) - instance.d(i, j);
                if best.as_ref().is_some_and(|b| b.0 .0 == 0 && added >= b.0 .1) {
                    continue;
                }
                candidate.clear();
                candidate.extend_from_slice(&visits[..=g]);
                candidate.push(k);
                candidate.extend_from_slice(&visits[g + 1..]);
                let t = trace(instance, &candidate)?;
                let tier = if negative.is_some() {
                    if t.eval.violations.iter().any(|&(p, _)| p <= g + 1) {
                        None
                    } else if t.negatives < current.negatives {
                        Some(0)
                    } else if t.negatives == current.negatives && t.deficit < current.deficit - EPS {
                        Some(1)
                    } else {
                        None
                    }
                } else {
                    (t.feasible || served_before_violation(instance, &candidate, &t.eval) > served).then_some(0)
                };
                if let Some(tier) = tier {
                    let key = (tier, added);
                    if best.as_ref().map_or(true, |b| key.0 < b.0 .0 || (key.0 == b.0 .0 && key.1 < b.0 .1)) {
                        best = Some((key, g, k, t));
                    }
                }
            }
        }
        let (_, g, k, t) = best?;
        visits.insert(g + 1, k);
        current = t;
    }
    refine_station_runs(instance, ranking, &mut visits);
    let route = schedule_route(instance, visits).ok()?;
    route.is_feasible().then_some(route)
}

fn last_anchor(instance: &Instance, visits: &[NodeId], before: usize) -> usize {
    (0..before)
        .rev()
        .find(|&p| p == 0 || instance.is_station(visits[p]))
        .unwrap_or(0)
}

/// Replaces stations inside runs of two or more adjacent stations by
/// better-ranked alternatives when the route stays feasible and shortens.
fn refine_station_runs(instance: &Instance, ranking: &StationRanking, visits: &mut [NodeId]) {
    let mut p = 1;
    while p + 1 < visits.len() {
        if !(instance.is_station(visits[p]) && instance.is_station(visits[p + 1])) {
            p += 1;
            continue;
        }
        let start = p;
        let mut end = p + 1;
        while end + 1 < visits.len() && instance.is_station(visits[end + 1]) {
            end += 1;
        }
        let mut q = start;
        while q <= end {
            let (prev, cur, next) = (visits[q - 1], visits[q], visits[q + 1]);
            let base = instance.d(prev, cur) + instance.d(cur, next);
            let mut improved = false;
            for k in ranking.candidates(prev, next) {
                if k == cur || instance.d(prev, k) + instance.d(k, next) >= base - EPS {
                    continue;
                }
                visits[q] = k;
                if trace(instance, visits).is_some_and(|t| t.feasible) {
                    improved = true;
                    break;
                }
                visits[q] = cur;
            }
            q = if improved { start } else { q + 1 };
        }
        p = end + 1;
    }
}

/// Which branch produced a [`pssi`] result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Psi,
    Ssi,
    /// Both branches returned the same distance.
    Both,
    /// The station-free route was already feasible.
    Direct,
}

/// Runs both branches on the station-free projection of `visits` and
/// keeps the shorter result; SSI wins ties.
pub fn pssi<R: Rng>(
    instance: &Instance,
    ranking: &StationRanking,
    visits: &[NodeId],
    params: &PssiParams,
    rng: &mut R,
) -> Option<Route> {
    pssi_traced(instance, ranking, visits, params, rng, &mut PssiStats::default())
}

/// Counters for how often each branch wins and how long each runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PssiStats {
    pub calls: u64,
    pub direct: u64,
    pub psi_only: u64,
    pub ssi_only: u64,
    pub psi_better: u64,
    pub ssi_better: u64,
    pub equal: u64,
    pub failed: u64,
    pub psi_time: Duration,
    pub ssi_time: Duration,
}

impl PssiStats {
    fn record(&mut self, psi: Option<f64>, ssi: Option<f64>) {
        match (psi, ssi) {
            (None, None) => self.failed += 1,
            (Some(_), None) => self.psi_only += 1,
            (None, Some(_)) => self.ssi_only += 1,
            (Some(a), Some(b)) if a < b => self.psi_better += 1,
            (Some(a), Some(b)) if b < a => self.ssi_better += 1,
            _ => self.equal += 1,
        }
    }

    pub fn merge(&mut self, other: &PssiStats) {
        self.calls += other.calls;
        self.direct += other.direct;
        self.psi_only += other.psi_only;
        self.ssi_only += other.ssi_only;
        self.psi_better += other.psi_better;
        self.ssi_better += other.ssi_better;
        self.equal += other.equal;
        self.failed += other.failed;
        self.psi_time += other.psi_time;
        self.ssi_time += other.ssi_time;
    }

    /// Share of successful calls whose result came from PSI alone.
    pub fn psi_contribution(&self) -> f64 {
        let ok = self.psi_only + self.ssi_only + self.psi_better + self.ssi_better + self.equal;
        if ok == 0 {
            0.0
        } else {
            (self.psi_only + self.psi_better) as f64 / ok as f64
        }
    }

    /// Fraction of branch time spent in PSI.
    pub fn psi_time_ratio(&self) -> f64 {
        let total = (self.psi_time + self.ssi_time).as_secs_f64();
        if total == 0.0 {
            0.0
        } else {
            self.psi_time.as_secs_f64() / total
        }
    }
}

pub fn pssi_traced<R: Rng>(
    instance: &Instance,
    ranking: &StationRanking,
    visits: &[NodeId],
    params: &PssiParams,
    rng: &mut R,
    stats: &mut PssiStats,
) -> Option<Route> {
    stats.calls += 1;
    let stripped: Vec<NodeId> = visits
        .iter()
        .copied()
        .filter(|&v| !instance.is_station(v))
        .collect();
    let direct = schedule_route(instance, stripped.clone()).ok()?;
    if direct.is_feasible() {
        stats.direct += 1;
        return Some(direct);
    }
    if !direct.eval().feasible_without_battery() {
        stats.failed += 1;
        return None;
    }
    let clock = Instant::now();
    let from_psi = psi(instance, ranking, &stripped, params, rng);
    stats.psi_time += clock.elapsed();
    let clock = Instant::now();
    let from_ssi = ssi(instance, ranking, &stripped);
    stats.ssi_time += clock.elapsed();
    stats.record(
        from_psi.as_ref().map(Route::distance),
        from_ssi.as_ref().map(Route::distance),
    );
    match (from_psi, from_ssi) {
        (Some(a), Some(b)) => Some(if a.distance() < b.distance() { a } else { b }),
        (a, b) => b.or(a),
    }
}

/// PSSI with a memo keyed by the station-free visit sequence.
#[derive(Debug, Clone)]
pub struct Electrifier<'a> {
    pub instance: &'a Instance,
    pub ranking: &'a StationRanking,
    pub params: PssiParams,
    pub stats: PssiStats,
    memo: HashMap<Vec<NodeId>, Option<Route>>,
}

const MEMO_LIMIT: usize = 50_000;

impl<'a> Electrifier<'a> {
    pub fn new(instance: &'a Instance, ranking: &'a StationRanking, params: PssiParams) -> Self {
        Electrifier {
            instance,
            ranking,
            params,
            stats: PssiStats::default(),
            memo: HashMap::new(),
        }
    }

    pub fn electrify<R: Rng>(&mut self, visits: &[NodeId], rng: &mut R) -> Option<Route> {
        let key: Vec<NodeId> = visits
            .iter()
            .copied()
            .filter(|&v| !self.instance.is_station(v))
            .collect();
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let out = pssi_traced(
            self.instance,
            self.ranking,
            &key,
            &self.params,
            rng,
            &mut self.stats,
        );
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(key, out.clone());
        out
    }

    /// Sequential repair only; used where a fast fix is enough.
    pub fn repair_sequential(&self, visits: &[NodeId]) -> Option<Route> {
        ssi(self.instance, self.ranking, visits)
    }
}
