//! Barycenter clustering decomposition.

use rand::Rng;

use crate::model::{Instance, Matrix, Node, NodeId, Route, Solution};
use crate::preprocess::planar_position;

/// A route's index and the mean planar position of its visits, counting
/// the start depot once and the closing depot not at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barycenter {
    pub route: usize,
    pub x: f64,
    pub y: f64,
}

pub fn barycenters(instance: &Instance, solution: &Solution) -> Vec<Barycenter> {
    solution
        .routes
        .iter()
        .enumerate()
        .map(|(route, r)| {
            let visits = &r.visits()[..r.visits().len() - 1];
            let (mut x, mut y) = (0.0, 0.0);
            for &v in visits {
                let (px, py) = planar_position(instance, v);
                x += px;
                y += py;
            }
            let n = visits.len() as f64;
            Barycenter {
                route,
                x: x / n,
                y: y / n,
            }
        })
        .collect()
}

fn sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Lloyd's k-means with k-means++ seeding, best of `restarts`. Returns a
/// cluster label per point; every label in `0..k` is used.
pub fn kmeans<R: Rng>(points: &[(f64, f64)], k: usize, restarts: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let k = k.clamp(1, n.max(1));
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let mut centers = vec![points[rng.gen_range(0..n)]];
        let mut d2: Vec<f64> = points.iter().map(|&p| sq(p, centers[0])).collect();
        while centers.len() < k {
            let total: f64 = d2.iter().sum();
            let next = if total <= 0.0 {
                rng.gen_range(0..n)
            } else {
                let mut target = rng.gen::<f64>() * total;
                let mut pick = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if target < w {
                        pick = i;
                        break;
                    }
                    target -= w;
                }
                pick
            };
            centers.push(points[next]);
            for (i, &p) in points.iter().enumerate() {
                d2[i] = d2[i].min(sq(p, points[next]));
            }
        }

        let mut labels = vec![usize::MAX; n];
        for _ in 0..100 {
            let mut changed = false;
            for (i, &p) in points.iter().enumerate() {
                let c = (0..k)
                    .min_by(|&a, &b| sq(p, centers[a]).total_cmp(&sq(p, centers[b])))
                    .expect("k >= 1");
                if labels[i] != c {
                    labels[i] = c;
                    changed = true;
                }
            }
            // an empty cluster takes over the point farthest from its center
            for c in 0..k {
                if !labels.contains(&c) {
                    let far = (0..n)
                        .filter(|&i| labels.iter().filter(|&&l| l == labels[i]).count() > 1)
                        .max_by(|&a, &b| {
                            sq(points[a], centers[labels[a]]).total_cmp(&sq(points[b], centers[labels[b]]))
                        });
                    if let Some(i) = far {
                        labels[i] = c;
                        changed = true;
                    }
                }
            }
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<(f64, f64)> = (0..n).filter(|&i| labels[i] == c).map(|i| points[i]).collect();
                if !members.is_empty() {
                    let m = members.len() as f64;
                    *center = (
                        members.iter().map(|p| p.0).sum::<f64>() / m,
                        members.iter().map(|p| p.1).sum::<f64>() / m,
                    );
                }
            }
            if !changed {
                break;
            }
        }
        let sse: f64 = (0..n).map(|i| sq(points[i], centers[labels[i]])).sum();
        if best.as_ref().map_or(true, |b| sse < b.0) {
            best = Some((sse, labels));
        }
    }
    best.expect("at least one restart").1
}

/// One part of a decomposed problem. Node `k` of `instance` is node
/// `nodes[k]` of the original.
#[derive(Debug, Clone, PartialEq)]
pub struct SubProblem {
    pub instance: Instance,
    pub solution: Solution,
    pub nodes: Vec<NodeId>,
}

impl SubProblem {
    /// Maps a visit sequence of the subproblem back to original ids.
    pub fn lift(&self, visits: &[NodeId]) -> Vec<NodeId> {
        visits.iter().map(|&v| self.nodes[v]).collect()
    }
}

/// Instance on the depot, the given customers and every station.
pub fn sub_instance(instance: &Instance, customers: &[NodeId], name: String) -> (Instance, Vec<NodeId>) {
    let mut ids = vec![0];
    ids.extend_from_slice(customers);
    ids.extend(instance.stations());
    let nodes: Vec<Node> = ids
        .iter()
        .enumerate()
        .map(|(k, &v)| Node {
            id: k,
            ..instance.nodes[v].clone()
        })
        .collect();
    let n = ids.len();
    let sub = Instance {
        name,
        nodes,
        n_customers: customers.len(),
        n_stations: instance.n_stations,
        dist: Matrix::from_fn(n, |i, j| instance.d(ids[i], ids[j])),
        time: Matrix::from_fn(n, |i, j| instance.t(ids[i], ids[j])),
        ..instance.clone()
    };
    (sub, ids)
}

/// Splits the problem into `k` parts by clustering route barycenters.
/// Routes are never split; every part keeps the depot and all stations.
pub fn bcd_decompose<R: Rng>(instance: &Instance, solution: &Solution, k: usize, rng: &mut R) -> Vec<SubProblem> {
    let centers = barycenters(instance, solution);
    let points: Vec<(f64, f64)> = centers.iter().map(|b| (b.x, b.y)).collect();
    let k = k.clamp(1, points.len().max(1));
    let labels = kmeans(&points, k, 50, rng);
    let mut parts = Vec::with_capacity(k);
    for c in 0..k {
        let routes: Vec<&Route> = solution
            .routes
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r)
            .collect();
        if routes.is_empty() {
            continue;
        }
        let customers: Vec<NodeId> = routes.iter().flat_map(|r| r.customers(instance)).collect();
        let (sub, ids) = sub_instance(instance, &customers, format!("{}-part{}", instance.name, c));
        let mut back = vec![usize::MAX; instance.n_nodes()];
        for (k, &v) in ids.iter().enumerate() {
            back[v] = k;
        }
        let sub_routes = routes
            .iter()
            .map(|r| {
                let visits = r.visits().iter().map(|&v| back[v]).collect();
                Route::new(&sub, visits, r.charges().to_vec()).expect("mapped route stays well formed")
            })
            .collect();
        parts.push(SubProblem {
            instance: sub,
            solution: Solution::new(sub_routes),
            nodes: ids,
        });
    }
    parts
}

/// Number of parts for `n_customers`: `M / 100` rounded to the nearest of
/// 2, 4, 6, 8, 10.
pub fn subproblem_count(n_customers: usize) -> usize {
    let target = n_customers as f64 / 100.0;
    [2usize, 4, 6, 8, 10]
        .into_iter()
        .min_by(|&a, &b| (a as f64 - target).abs().total_cmp(&(b as f64 - target).abs()))
        .expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::line_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn count_mapping() {
        assert_eq!(subproblem_count(200), 2);
        assert_eq!(subproblem_count(400), 4);
        assert_eq!(subproblem_count(1000), 10);
        assert_eq!(subproblem_count(50), 2);
        assert_eq!(subproblem_count(5000), 10);
    }

    #[test]
    fn planted_clusters_are_recovered() {
        let inst = line_instance(
            &[(-40.0, 1.0, 1.0), (-42.0, 1.0, 1.0), (-45.0, 1.0, 1.0), (40.0, 1.0, 1.0), (41.0, 1.0, 1.0), (44.0, 1.0, 1.0)],
            &[0.5],
        );
        let routes = (1..=6).map(|c| Route::uncharged(&inst, vec![0, c, 0]).unwrap()).collect();
        let s = Solution::new(routes);
        let parts = bcd_decompose(&inst, &s, 2, &mut ChaCha8Rng::seed_from_u64(1));
        let mut sets: Vec<Vec<NodeId>> = parts.iter().map(|p| p.nodes[1..=p.instance.n_customers].to_vec()).collect();
        sets.sort();
        assert_eq!(sets, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        for p in &parts {
            assert_eq!(p.instance.n_stations, 1);
            assert!(p.instance.validate().is_ok());
            assert_eq!(*p.nodes.last().unwrap(), 7);
        }
    }

    #[test]
    fn single_part_keeps_everything() {
        let inst = line_instance(&[(1.0, 1.0, 1.0), (2.0, 1.0, 1.0)], &[]);
        let s = Solution::new(vec![Route::uncharged(&inst, vec![0, 1, 2, 0]).unwrap()]);
        let parts = bcd_decompose(&inst, &s, 1, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].instance.dist, inst.dist);
        assert_eq!(parts[0].lift(parts[0].solution.routes[0].visits()), vec![0, 1, 2, 0]);
    }
}
