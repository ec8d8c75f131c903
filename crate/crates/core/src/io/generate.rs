//! Synthetic city-scale instances in the jd style.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{CoordMode, Instance, Matrix, Node, NodeKind};
use crate::preprocess::mercator_project;

/// Longitude/latitude rectangle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBox {
    pub lng_min: f64,
    pub lng_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl Default for RegionBox {
    fn default() -> Self {
        RegionBox {
            lng_min: 116.30,
            lng_max: 116.50,
            lat_min: 39.85,
            lat_max: 40.00,
        }
    }
}

/// Distributions used by [`generate_jd_like`]. Ranges are inclusive
/// `[low, high]` pairs sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub region: RegionBox,
    /// Ratio of road distance to projected straight-line distance.
    pub road_factor: f64,
    /// Each arc is scaled by `1 + noise * U(-1, 1)`, independently per
    /// ordered pair.
    pub noise: f64,
    /// Distance units per time unit.
    pub speed: f64,
    pub horizon: f64,
    pub battery_capacity: f64,
    pub load_capacity: f64,
    pub consume_rate: f64,
    pub charge_rate: f64,
    pub dispatch_cost: f64,
    pub distance_cost: f64,
    pub delivery: (f64, f64),
    pub pickup: (f64, f64),
    pub service: (f64, f64),
    pub window_width: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            region: RegionBox::default(),
            road_factor: 1.3,
            noise: 0.15,
            speed: 400.0,
            horizon: 720.0,
            battery_capacity: 50.0,
            load_capacity: 200.0,
            consume_rate: 0.001,
            charge_rate: 1.0,
            dispatch_cost: 300.0,
            distance_cost: 0.014,
            delivery: (5.0, 30.0),
            pickup: (0.0, 20.0),
            service: (5.0, 15.0),
            window_width: (60.0, 180.0),
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

struct Arcs<'a> {
    cfg: &'a GeneratorConfig,
    planar: Vec<(f64, f64)>,
}

impl Arcs<'_> {
    fn draw<R: Rng>(&self, rng: &mut R, i: usize, j: usize) -> (f64, f64) {
        if i == j {
            return (0.0, 0.0);
        }
        let (a, b) = (self.planar[i], self.planar[j]);
        let straight = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let scale = 1.0 + self.cfg.noise * rng.gen_range(-1.0..=1.0);
        let d = round_to(straight * self.cfg.road_factor * scale, 0.1);
        (d, round_to(d / self.cfg.speed, 0.001))
    }
}

/// Random instance with `m` customers and `p` stations inside
/// `config.region`, deterministic in `seed`. The depot sits at the box
/// center. Every customer can be served by a dedicated vehicle without
/// recharging.
pub fn generate_jd_like(m: usize, p: usize, seed: u64, config: &GeneratorConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = config;
    let r = cfg.region;
    let n = 1 + m + p;
    let mut coords = vec![((r.lng_min + r.lng_max) / 2.0, (r.lat_min + r.lat_max) / 2.0)];
    let sample = |rng: &mut ChaCha8Rng| {
        (
            round_to(uniform(rng, (r.lng_min, r.lng_max)), 1e-6),
            round_to(uniform(rng, (r.lat_min, r.lat_max)), 1e-6),
        )
    };
    let project = |c: (f64, f64)| mercator_project(c.0, c.1).expect("region latitude inside (-90, 90)");

    let mut dist = Matrix::zeros(n);
    let mut time = Matrix::zeros(n);
    let mut arcs = Arcs {
        cfg,
        planar: vec![project(coords[0])],
    };
    // customers are redrawn until a dedicated route needs no charging and
    // leaves room for service inside the horizon
    for u in 1..=m {
        loop {
            let c = sample(&mut rng);
            arcs.planar.push(project(c));
            let (d_out, t_out) = arcs.draw(&mut rng, 0, u);
            let (d_back, t_back) = arcs.draw(&mut rng, u, 0);
            let energy_ok = cfg.consume_rate * (d_out + d_back) <= cfg.battery_capacity;
            let time_ok = t_out + t_back + cfg.service.1 + cfg.window_width.0 <= cfg.horizon;
            if energy_ok && time_ok {
                coords.push(c);
                dist.set(0, u, d_out);
                dist.set(u, 0, d_back);
                time.set(0, u, t_out);
                time.set(u, 0, t_back);
                break;
            }
            arcs.planar.pop();
        }
    }
    for _ in 0..p {
        let c = sample(&mut rng);
        coords.push(c);
        arcs.planar.push(project(c));
    }
    for i in 0..n {
        for j in 0..n {
            let depot_customer = (i == 0 && (1..=m).contains(&j)) || (j == 0 && (1..=m).contains(&i));
            if !depot_customer {
                let (d, t) = arcs.draw(&mut rng, i, j);
                dist.set(i, j, d);
                time.set(i, j, t);
            }
        }
    }

    let depot = |id: usize, kind: NodeKind, (x, y): (f64, f64)| Node {
        id,
        kind,
        name: id.to_string(),
        delivery: 0.0,
        pickup: 0.0,
        ready: 0.0,
        due: cfg.horizon,
        service: 0.0,
        x,
        y,
    };
    let mut nodes = vec![depot(0, NodeKind::Depot, coords[0])];
    for u in 1..=m {
        let service = uniform(&mut rng, cfg.service).round();
        let back = time.get(u, 0);
        let latest_start = cfg.horizon - service - back;
        let width = uniform(&mut rng, cfg.window_width).round();
        let ready = uniform(&mut rng, (0.0, (latest_start - cfg.window_width.0).max(0.0))).floor();
        let due = (ready + width).min(latest_start.floor()).max(time.get(0, u).ceil());
        nodes.push(Node {
            id: u,
            kind: NodeKind::Customer,
            name: u.to_string(),
            delivery: uniform(&mut rng, cfg.delivery).round(),
            pickup: uniform(&mut rng, cfg.pickup).round(),
            ready,
            due,
            service,
            x: coords[u].0,
            y: coords[u].1,
        });
    }
    for s in m + 1..n {
        nodes.push(depot(s, NodeKind::Station, coords[s]));
    }

    Instance {
        name: format!("jd{m}-{seed}"),
        nodes,
        n_customers: m,
        n_stations: p,
        dist,
        time,
        load_capacity: cfg.load_capacity,
        battery_capacity: cfg.battery_capacity,
        charge_rate: cfg.charge_rate,
        consume_rate: cfg.consume_rate,
        dispatch_cost: cfg.dispatch_cost,
        distance_cost: cfg.distance_cost,
        coord_mode: CoordMode::Geographic,
        triangle_ok: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_jd, write_jd};
    use crate::model::Route;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::default();
        let a = write_jd(&generate_jd_like(30, 10, 7, &cfg));
        let b = write_jd(&generate_jd_like(30, 10, 7, &cfg));
        let c = write_jd(&generate_jd_like(30, 10, 8, &cfg));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn node_count_and_validity() {
        let inst = generate_jd_like(200, 100, 1, &GeneratorConfig::default());
        assert_eq!(inst.n_nodes(), 301);
        inst.validate().unwrap();
        assert_eq!(parse_jd(&write_jd(&inst)).unwrap(), inst);
        for u in inst.customers() {
            assert!(Route::uncharged(&inst, vec![0, u, 0]).unwrap().is_feasible(), "customer {u}");
        }
    }

    #[test]
    fn noise_breaks_triangle_inequality() {
        let inst = generate_jd_like(20, 5, 3, &GeneratorConfig::default());
        let n = inst.n_nodes();
        let mut broken = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k && inst.d(i, k) > inst.d(i, j) + inst.d(j, k) + 1e-9 {
                        broken += 1;
                    }
                }
            }
        }
        assert!(broken > 0);
    }
}
