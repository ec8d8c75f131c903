//! Cross-domain neighborhood search.
//!
//! The aggressive phase searches the station-free space, where moves are
//! cheap to evaluate, and restores electric feasibility by station
//! insertion after every step. The conservative phase then runs steepest
//! descent directly on routes with stations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::charge::schedule_route;
use crate::model::{NodeId, Solution, EPS};
use crate::moves::{apply_move, Electric, NonElectric};
use crate::pssi::Electrifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    Full,
    /// Skips the electric-space descent.
    LargeScale,
}

/// Aggressive local search. Never returns a solution costlier than the
/// input.
pub fn als<R: Rng>(elec: &mut Electrifier<'_>, solution: &Solution, rng: &mut R) -> Solution {
    let instance = elec.instance;
    let mut incumbent = solution.clone();
    let mut best_cost = incumbent.cost(instance);
    let mut current: Vec<Vec<NodeId>> = solution
        .routes
        .iter()
        .map(|r| r.stripped_visits(instance))
        .collect();
    loop {
        let Some(mv) = NonElectric::new(instance, &current).best_move() else {
            break;
        };
        current = apply_move(instance, &current, &mv);
        let mut routes = Vec::with_capacity(current.len());
        for visits in &current {
            match elec.electrify(visits, rng) {
                Some(r) => routes.push(r),
                None => return incumbent,
            }
        }
        let candidate = Solution::new(routes);
        let cost = candidate.cost(instance);
        if cost < best_cost - EPS {
            incumbent = candidate;
            best_cost = cost;
        }
    }
    incumbent
}

/// Conservative local search: steepest descent over routes with stations.
pub fn cls(instance: &crate::model::Instance, solution: &Solution) -> Solution {
    let mut routes: Vec<Vec<NodeId>> = solution.routes.iter().map(|r| r.visits().to_vec()).collect();
    let mut changed = false;
    while let Some(mv) = Electric::new(instance, &routes).best_move() {
        routes = apply_move(instance, &routes, &mv);
        changed = true;
    }
    if !changed {
        return solution.clone();
    }
    Solution::new(
        routes
            .into_iter()
            .map(|v| schedule_route(instance, v).expect("moves keep routes well formed"))
            .collect(),
    )
}

pub fn cdns<R: Rng>(
    elec: &mut Electrifier<'_>,
    solution: &Solution,
    mode: SearchMode,
    rng: &mut R,
) -> Solution {
    let s = als(elec, solution, rng);
    match mode {
        SearchMode::Full => cls(elec.instance, &s),
        SearchMode::LargeScale => s,
    }
}
