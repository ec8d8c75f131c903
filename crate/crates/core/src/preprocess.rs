//! Instance-level precomputation: coordinate projection, hyperarc closure
//! and station detour rankings.

use rayon::prelude::*;

use crate::error::PreprocessError;
use crate::model::{CoordMode, Instance, Matrix, NodeId};

/// Semi-major axis of the WGS84 ellipsoid, in meters.
pub const WGS84_SEMI_MAJOR: f64 = 6_378_137.0;

/// Spherical Mercator projection of a longitude/latitude pair (degrees)
/// to planar meters.
pub fn mercator_project(lng: f64, lat: f64) -> Result<(f64, f64), PreprocessError> {
    if !(lat > -90.0 && lat < 90.0) {
        return Err(PreprocessError::Latitude(lat));
    }
    let pi = std::f64::consts::PI;
    let x = WGS84_SEMI_MAJOR * pi * lng / 180.0;
    let y = WGS84_SEMI_MAJOR * (pi / 4.0 + pi * lat / 360.0).tan().ln();
    Ok((x, y))
}

/// Planar position of a node: raw coordinates in Cartesian mode, Mercator
/// projection in geographic mode.
pub fn planar_position(instance: &Instance, id: NodeId) -> (f64, f64) {
    let node = &instance.nodes[id];
    match instance.coord_mode {
        CoordMode::Cartesian => (node.x, node.y),
        CoordMode::Geographic => {
            mercator_project(node.x, node.y).unwrap_or((f64::NAN, f64::NAN))
        }
    }
}

const DIRECT: u32 = u32::MAX;

/// Station relay sequences produced by [`hyperarc_closure`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperArcMap {
    n: usize,
    /// Some intermediate station on the shortest path, or `DIRECT`.
    via: Vec<u32>,
}

impl HyperArcMap {
    pub fn direct(n: usize) -> Self {
        HyperArcMap {
            n,
            via: vec![DIRECT; n * n],
        }
    }

    /// Intermediate stations on the path from `i` to `j`, in travel order.
    pub fn relay(&self, i: NodeId, j: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.collect(i, j, &mut out);
        out
    }

    fn collect(&self, i: NodeId, j: NodeId, out: &mut Vec<NodeId>) {
        let k = self.via[i * self.n + j];
        if k != DIRECT {
            let k = k as usize;
            self.collect(i, k, out);
            out.push(k);
            self.collect(k, j, out);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.via.iter().all(|&v| v == DIRECT)
    }

    /// Replaces every hyperarc of a visit sequence by its explicit relay
    /// stations.
    pub fn expand(&self, visits: &[NodeId]) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(visits.len());
        for (p, &v) in visits.iter().enumerate() {
            if p > 0 {
                self.collect(visits[p - 1], v, &mut out);
            }
            out.push(v);
        }
        out
    }
}

/// Replaces every arc by the fastest path that may pass through charging
/// stations (but not through the depot or customers). Distances follow the
/// chosen paths. The returned instance has `triangle_ok` set.
pub fn hyperarc_closure(instance: &Instance) -> (Instance, HyperArcMap) {
    let n = instance.n_nodes();
    let mut time = instance.time.clone();
    let mut dist = instance.dist.clone();
    let mut map = HyperArcMap::direct(n);
    for k in instance.stations() {
        for i in 0..n {
            if i == k {
                continue;
            }
            let tik = time.get(i, k);
            let dik = dist.get(i, k);
            for j in 0..n {
                if j == k || j == i {
                    continue;
                }
                let candidate = tik + time.get(k, j);
                if candidate < time.get(i, j) {
                    time.set(i, j, candidate);
                    dist.set(i, j, dik + dist.get(k, j));
                    map.via[i * n + j] = k as u32;
                }
            }
        }
    }
    // Later relaxations can reroute the sub-paths a recorded `via` refers to,
    // so re-derive both matrices from the paths that `relay` will expand to.
    let mut path = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || map.via[i * n + j] == DIRECT {
                continue;
            }
            path.clear();
            path.push(i);
            map.collect(i, j, &mut path);
            path.push(j);
            let (mut t, mut d) = (0.0, 0.0);
            for w in path.windows(2) {
                t += instance.t(w[0], w[1]);
                d += instance.d(w[0], w[1]);
            }
            time.set(i, j, t);
            dist.set(i, j, d);
        }
    }
    let mut closed = instance.clone();
    closed.time = time;
    closed.dist = dist;
    closed.triangle_ok = true;
    (closed, map)
}

/// Closes the instance only when it is not already known to satisfy the
/// triangle inequality.
pub fn ensure_triangle(instance: &Instance) -> (Instance, HyperArcMap) {
    if instance.triangle_ok {
        (instance.clone(), HyperArcMap::direct(instance.n_nodes()))
    } else {
        hyperarc_closure(instance)
    }
}

/// For every ordered node pair, the stations with the smallest insertion
/// detour `d(i,k) + d(k,j) - d(i,j)`, ascending, ties by station id.
#[derive(Debug, Clone, PartialEq)]
pub struct StationRanking {
    n: usize,
    width: usize,
    stations: Vec<u32>,
}

impl StationRanking {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn candidates(&self, i: NodeId, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let start = (i * self.n + j) * self.width;
        self.stations[start..start + self.width]
            .iter()
            .map(|&k| k as usize)
    }

    /// Candidates with their detour costs.
    pub fn entries<'a>(
        &'a self,
        instance: &'a Instance,
        i: NodeId,
        j: NodeId,
    ) -> impl Iterator<Item = (NodeId, f64)> + 'a {
        self.candidates(i, j)
            .map(move |k| (k, detour(instance, i, k, j)))
    }
}

#[inline]
pub fn detour(instance: &Instance, i: NodeId, k: NodeId, j: NodeId) -> f64 {
    instance.d(i, k) + instance.d(k, j) - instance.d(i, j)
}

/// Number of stations kept per pair for a selection range `sr`.
pub fn selection_width(sr: f64, n_stations: usize) -> usize {
    ((sr * n_stations as f64) - 1e-9).ceil().clamp(0.0, n_stations as f64) as usize
}

pub fn rank_stations(instance: &Instance, sr: f64) -> StationRanking {
    assert!(sr > 0.0 && sr <= 1.0, "selection range must lie in (0, 1]");
    let n = instance.n_nodes();
    let width = selection_width(sr, instance.n_stations);
    let stations: Vec<NodeId> = instance.stations().collect();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(n * width);
            let mut scored: Vec<(f64, NodeId)> = Vec::with_capacity(stations.len());
            for j in 0..n {
                scored.clear();
                scored.extend(stations.iter().map(|&k| (detour(instance, i, k, j), k)));
                let cmp = |a: &(f64, NodeId), b: &(f64, NodeId)| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                };
                if width < scored.len() && width > 0 {
                    scored.select_nth_unstable_by(width - 1, cmp);
                    scored.truncate(width);
                }
                scored.sort_by(cmp);
                row.extend(scored.iter().take(width).map(|&(_, k)| k as u32));
            }
            row
        })
        .collect();
    StationRanking {
        n,
        width,
        stations: rows.into_iter().flatten().collect(),
    }
}

/// Planar distance matrix helper used by generators and tests.
pub fn euclidean_matrix(points: &[(f64, f64)]) -> Matrix {
    Matrix::from_fn(points.len(), |i, j| {
        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
        (dx * dx + dy * dy).sqrt()
    })
}
