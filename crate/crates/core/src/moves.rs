//! The five move operators and their evaluation in both search spaces.
//!
//! A move is described by the pieces of the current routes that make up
//! each modified route. The non-electric evaluator folds precomputed
//! segment aggregates (duration, time warp, earliest/latest start, load
//! peak) over the pieces; the electric evaluator only sums distances and
//! leaves feasibility to the charge scheduler.

use crate::charge::plan_charges;
use crate::model::{Instance, NodeId, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    TwoOpt,
    TwoOptStar,
    OrOpt,
    Swap,
    Relocate,
}

/// Positions index the visit sequence of a route, depot at `0`.
///
/// * `TwoOpt`: reverse `r1[i..=j]`.
/// * `TwoOptStar`: exchange the tails after `r1[i]` and `r2[j]`.
/// * `OrOpt`, `Relocate`: move `r1[i..i+len1]` before `r2[j]`.
/// * `Swap`: exchange `r1[i..i+len1]` and `r2[j..j+len2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub r1: usize,
    pub r2: usize,
    pub i: usize,
    pub j: usize,
    pub len1: usize,
    pub len2: usize,
    /// Change in total cost.
    pub delta: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub route: usize,
    pub from: usize,
    pub to: usize,
    /// Traverse `to` down to `from`.
    pub rev: bool,
}

/// The pieces of one new route.
#[derive(Debug, Clone, Copy)]
pub struct Assembly {
    pub route: usize,
    pieces: [Piece; 5],
    len: usize,
}

impl Assembly {
    fn new(route: usize) -> Self {
        Assembly {
            route,
            pieces: [Piece {
                route: 0,
                from: 0,
                to: 0,
                rev: false,
            }; 5],
            len: 0,
        }
    }

    fn push(mut self, route: usize, from: usize, to: usize) -> Self {
        if from <= to {
            self.pieces[self.len] = Piece {
                route,
                from,
                to,
                rev: false,
            };
            self.len += 1;
        }
        self
    }

    fn push_rev(mut self, route: usize, from: usize, to: usize) -> Self {
        self.pieces[self.len] = Piece {
            route,
            from,
            to,
            rev: true,
        };
        self.len += 1;
        self
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces[..self.len]
    }

    pub fn materialize(&self, routes: &[Vec<NodeId>]) -> Vec<NodeId> {
        let mut out = Vec::new();
        for p in self.pieces() {
            let seq = &routes[p.route][p.from..=p.to];
            if p.rev {
                out.extend(seq.iter().rev());
            } else {
                out.extend_from_slice(seq);
            }
        }
        out
    }
}

impl Move {
    fn new(kind: MoveKind, r1: usize, r2: usize, i: usize, j: usize, len1: usize, len2: usize) -> Self {
        Move {
            kind,
            r1,
            r2,
            i,
            j,
            len1,
            len2,
            delta: 0.0,
            feasible: false,
        }
    }

    /// New routes produced by the move; `lens[r]` is the visit count of
    /// route `r` including both depot visits.
    pub fn assemble(&self, lens: &[usize]) -> ([Assembly; 2], usize) {
        let (r1, r2, i, j) = (self.r1, self.r2, self.i, self.j);
        let last1 = lens[r1] - 1;
        let last2 = lens[r2] - 1;
        let empty = Assembly::new(0);
        match self.kind {
            MoveKind::TwoOpt => {
                let a = Assembly::new(r1)
                    .push(r1, 0, i - 1)
                    .push_rev(r1, i, j)
                    .push(r1, j + 1, last1);
                ([a, empty], 1)
            }
            MoveKind::TwoOptStar => {
                let a = Assembly::new(r1).push(r1, 0, i).push(r2, j + 1, last2);
                let b = Assembly::new(r2).push(r2, 0, j).push(r1, i + 1, last1);
                ([a, b], 2)
            }
            MoveKind::OrOpt | MoveKind::Relocate => {
                let e = i + self.len1 - 1;
                if r1 == r2 {
                    let a = if j < i {
                        Assembly::new(r1)
                            .push(r1, 0, j - 1)
                            .push(r1, i, e)
                            .push(r1, j, i - 1)
                            .push(r1, e + 1, last1)
                    } else {
                        Assembly::new(r1)
                            .push(r1, 0, i - 1)
                            .push(r1, e + 1, j - 1)
                            .push(r1, i, e)
                            .push(r1, j, last1)
                    };
                    ([a, empty], 1)
                } else {
                    let a = Assembly::new(r1).push(r1, 0, i - 1).push(r1, e + 1, last1);
                    let b = Assembly::new(r2)
                        .push(r2, 0, j - 1)
                        .push(r1, i, e)
                        .push(r2, j, last2);
                    ([a, b], 2)
                }
            }
            MoveKind::Swap => {
                let e1 = i + self.len1 - 1;
                let e2 = j + self.len2 - 1;
                if r1 == r2 {
                    let a = Assembly::new(r1)
                        .push(r1, 0, i - 1)
                        .push(r1, j, e2)
                        .push(r1, e1 + 1, j - 1)
                        .push(r1, i, e1)
                        .push(r1, e2 + 1, last1);
                    ([a, empty], 1)
                } else {
                    let a = Assembly::new(r1)
                        .push(r1, 0, i - 1)
                        .push(r2, j, e2)
                        .push(r1, e1 + 1, last1);
                    let b = Assembly::new(r2)
                        .push(r2, 0, j - 1)
                        .push(r1, i, e1)
                        .push(r2, e2 + 1, last2);
                    ([a, b], 2)
                }
            }
        }
    }
}

/// Calls `f` on every applicable move, in a fixed order: by operator, then
/// lexicographically by route and position.
pub fn for_each_move(lens: &[usize], mut f: impl FnMut(Move)) {
    let k = lens.len();
    let n = |r: usize| lens[r] - 2;
    for r in 0..k {
        for i in 1..=n(r) {
            for j in i + 1..=n(r) {
                f(Move::new(MoveKind::TwoOpt, r, r, i, j, 0, 0));
            }
        }
    }
    for r1 in 0..k {
        for r2 in r1 + 1..k {
            for i in 0..=n(r1) {
                for j in 0..=n(r2) {
                    if (i == n(r1) && j == n(r2)) || (i == 0 && j == 0) {
                        continue;
                    }
                    f(Move::new(MoveKind::TwoOptStar, r1, r2, i, j, 0, 0));
                }
            }
        }
    }
    let insertions = |kind: MoveKind, len: usize, f: &mut dyn FnMut(Move)| {
        for r1 in 0..k {
            for i in 1..=(n(r1) + 1).saturating_sub(len) {
                for r2 in 0..k {
                    for j in 1..=n(r2) + 1 {
                        if r1 == r2 && j >= i && j <= i + len {
                            continue;
                        }
                        f(Move::new(kind, r1, r2, i, j, len, 0));
                    }
                }
            }
        }
    };
    for len in 1..=2 {
        insertions(MoveKind::OrOpt, len, &mut f);
    }
    for len1 in 1..=2 {
        for len2 in 1..=2 {
            for r1 in 0..k {
                for i in 1..=(n(r1) + 1).saturating_sub(len1) {
                    for r2 in r1..k {
                        let first = if r1 == r2 { i + len1 } else { 1 };
                        for j in first..=(n(r2) + 1).saturating_sub(len2) {
                            f(Move::new(MoveKind::Swap, r1, r2, i, j, len1, len2));
                        }
                    }
                }
            }
        }
    }
    insertions(MoveKind::Relocate, 1, &mut f);
}

/// Applies a move; routes left without customers are dropped and repeated
/// adjacent station visits are merged.
pub fn apply_move(instance: &Instance, routes: &[Vec<NodeId>], mv: &Move) -> Vec<Vec<NodeId>> {
    let lens: Vec<usize> = routes.iter().map(Vec::len).collect();
    let (asm, count) = mv.assemble(&lens);
    let mut out: Vec<Vec<NodeId>> = routes.to_vec();
    for a in &asm[..count] {
        out[a.route] = a.materialize(routes);
    }
    out.retain(|r| r.iter().any(|&v| instance.is_customer(v)));
    // a station next to itself is one visit
    for r in &mut out {
        r.dedup_by(|a, b| a == b && instance.is_station(*a));
    }
    out
}

/// Aggregate of a visit subsequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seg {
    pub duration: f64,
    pub time_warp: f64,
    pub earliest: f64,
    pub latest: f64,
    pub dist: f64,
    pub delivery: f64,
    pub pickup: f64,
    /// Highest load on board while traversing the segment, counting only
    /// the segment's own demands.
    pub peak: f64,
    pub first: NodeId,
    pub last: NodeId,
    pub customers: usize,
}

impl Seg {
    pub fn node(instance: &Instance, v: NodeId) -> Seg {
        let n = &instance.nodes[v];
        Seg {
            duration: n.service,
            time_warp: 0.0,
            earliest: n.ready,
            latest: n.due,
            dist: 0.0,
            delivery: n.delivery,
            pickup: n.pickup,
            peak: n.delivery.max(n.pickup),
            first: v,
            last: v,
            customers: usize::from(instance.is_customer(v)),
        }
    }

    pub fn concat(&self, other: &Seg, instance: &Instance) -> Seg {
        let t = instance.t(self.last, other.first);
        let delta = self.duration - self.time_warp + t;
        let wait = (other.earliest - delta - self.latest).max(0.0);
        let warp = (self.earliest + delta - other.latest).max(0.0);
        Seg {
            duration: self.duration + other.duration + t + wait,
            time_warp: self.time_warp + other.time_warp + warp,
            earliest: (other.earliest - delta).max(self.earliest) - wait,
            latest: (other.latest - delta).min(self.latest) + warp,
            dist: self.dist + other.dist + instance.d(self.last, other.first),
            delivery: self.delivery + other.delivery,
            pickup: self.pickup + other.pickup,
            peak: (self.peak + other.delivery).max(self.pickup + other.peak),
            first: self.first,
            last: other.last,
            customers: self.customers + other.customers,
        }
    }

    pub fn feasible(&self, instance: &Instance) -> bool {
        self.time_warp <= EPS && self.peak <= instance.load_capacity + EPS
    }
}

struct Tables {
    m: usize,
    fwd: Vec<Seg>,
    rev: Vec<Seg>,
}

impl Tables {
    fn build(instance: &Instance, visits: &[NodeId]) -> Tables {
        let m = visits.len();
        let single: Vec<Seg> = visits.iter().map(|&v| Seg::node(instance, v)).collect();
        let mut fwd = Vec::with_capacity(m * m);
        let mut rev = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                // entries below the diagonal are never read
                let (f, r) = if b <= a {
                    (single[a], single[a])
                } else {
                    let f: Seg = fwd[a * m + b - 1];
                    let r: Seg = rev[a * m + b - 1];
                    (f.concat(&single[b], instance), single[b].concat(&r, instance))
                };
                fwd.push(f);
                rev.push(r);
            }
        }
        Tables { m, fwd, rev }
    }

    fn get(&self, p: &Piece) -> &Seg {
        let idx = p.from * self.m + p.to;
        if p.rev {
            &self.rev[idx]
        } else {
            &self.fwd[idx]
        }
    }
}

/// Evaluates moves on station-free routes, ignoring the battery.
pub struct NonElectric<'a> {
    instance: &'a Instance,
    routes: &'a [Vec<NodeId>],
    lens: Vec<usize>,
    tables: Vec<Tables>,
}

impl<'a> NonElectric<'a> {
    pub fn new(instance: &'a Instance, routes: &'a [Vec<NodeId>]) -> Self {
        NonElectric {
            instance,
            routes,
            lens: routes.iter().map(Vec::len).collect(),
            tables: routes.iter().map(|r| Tables::build(instance, r)).collect(),
        }
    }

    pub fn route_seg(&self, r: usize) -> Seg {
        self.tables[r].fwd[self.lens[r] - 1]
    }

    /// Fills in `delta` and `feasible`.
    pub fn evaluate(&self, mv: &mut Move) {
        let (asm, count) = mv.assemble(&self.lens);
        let inst = self.instance;
        let mut delta = 0.0;
        let mut feasible = true;
        for a in &asm[..count] {
            let mut pieces = a.pieces().iter();
            let first = pieces.next().expect("routes have pieces");
            let mut seg = *self.tables[first.route].get(first);
            for p in pieces {
                seg = seg.concat(self.tables[p.route].get(p), inst);
            }
            let old = self.route_seg(a.route).dist;
            if seg.customers == 0 {
                delta -= inst.dispatch_cost + inst.distance_cost * old;
            } else {
                delta += inst.distance_cost * (seg.dist - old);
                feasible &= seg.feasible(inst);
            }
        }
        mv.delta = delta;
        mv.feasible = feasible;
    }

    pub fn moves(&self) -> Vec<Move> {
        let mut out = Vec::new();
        for_each_move(&self.lens, |mut mv| {
            self.evaluate(&mut mv);
            out.push(mv);
        });
        out
    }

    /// Best feasible move with a cost decrease; ties go to the move
    /// enumerated first.
    pub fn best_move(&self) -> Option<Move> {
        let mut best: Option<Move> = None;
        for_each_move(&self.lens, |mut mv| {
            self.evaluate(&mut mv);
            if mv.feasible && mv.delta < -EPS && best.map_or(true, |b| mv.delta < b.delta) {
                best = Some(mv);
            }
        });
        best
    }

    pub fn routes(&self) -> &[Vec<NodeId>] {
        self.routes
    }
}

/// Evaluates moves on routes with stations, battery included.
pub struct Electric<'a> {
    instance: &'a Instance,
    routes: &'a [Vec<NodeId>],
    lens: Vec<usize>,
    /// Prefix distances, forward and backward, and prefix customer counts.
    fwd: Vec<Vec<f64>>,
    rev: Vec<Vec<f64>>,
    cust: Vec<Vec<usize>>,
}

impl<'a> Electric<'a> {
    pub fn new(instance: &'a Instance, routes: &'a [Vec<NodeId>]) -> Self {
        let mut fwd = Vec::with_capacity(routes.len());
        let mut rev = Vec::with_capacity(routes.len());
        let mut cust = Vec::with_capacity(routes.len());
        for r in routes {
            let (mut f, mut b, mut c) = (vec![0.0], vec![0.0], vec![0]);
            for w in r.windows(2) {
                f.push(f.last().unwrap() + instance.d(w[0], w[1]));
                b.push(b.last().unwrap() + instance.d(w[1], w[0]));
            }
            for &v in r {
                c.push(c.last().unwrap() + usize::from(instance.is_customer(v)));
            }
            fwd.push(f);
            rev.push(b);
            cust.push(c);
        }
        Electric {
            instance,
            routes,
            lens: routes.iter().map(Vec::len).collect(),
            fwd,
            rev,
            cust,
        }
    }

    fn piece_dist(&self, p: &Piece) -> f64 {
        let table = if p.rev { &self.rev } else { &self.fwd };
        table[p.route][p.to] - table[p.route][p.from]
    }

    fn ends(&self, p: &Piece) -> (NodeId, NodeId) {
        let r = &self.routes[p.route];
        if p.rev {
            (r[p.to], r[p.from])
        } else {
            (r[p.from], r[p.to])
        }
    }

    /// Cost change by distance arithmetic, without checking feasibility.
    pub fn delta(&self, mv: &Move) -> f64 {
        let (asm, count) = mv.assemble(&self.lens);
        let inst = self.instance;
        let mut delta = 0.0;
        for a in &asm[..count] {
            let mut dist = 0.0;
            let mut customers = 0;
            let mut prev: Option<NodeId> = None;
            for p in a.pieces() {
                let (first, last) = self.ends(p);
                if let Some(v) = prev {
                    dist += inst.d(v, first);
                }
                dist += self.piece_dist(p);
                customers += self.cust[p.route][p.to + 1] - self.cust[p.route][p.from];
                prev = Some(last);
            }
            let old = self.fwd[a.route][self.lens[a.route] - 1];
            if customers == 0 {
                delta -= inst.dispatch_cost + inst.distance_cost * old;
            } else {
                delta += inst.distance_cost * (dist - old);
            }
        }
        delta
    }

    pub fn is_feasible(&self, mv: &Move) -> bool {
        let (asm, count) = mv.assemble(&self.lens);
        asm[..count].iter().all(|a| {
            let visits = a.materialize(self.routes);
            !visits.iter().any(|&v| self.instance.is_customer(v))
                || plan_charges(self.instance, &visits).feasible()
        })
    }

    pub fn moves(&self) -> Vec<Move> {
        let mut out = Vec::new();
        for_each_move(&self.lens, |mut mv| {
            mv.delta = self.delta(&mv);
            mv.feasible = self.is_feasible(&mv);
            out.push(mv);
        });
        out
    }

    /// Steepest feasible improving move: improving candidates are sorted by
    /// cost change and checked in that order.
    pub fn best_move(&self) -> Option<Move> {
        let mut improving = Vec::new();
        for_each_move(&self.lens, |mut mv| {
            mv.delta = self.delta(&mv);
            if mv.delta < -EPS {
                improving.push(mv);
            }
        });
        improving.sort_by(|a, b| a.delta.total_cmp(&b.delta));
        improving.into_iter().find(|mv| self.is_feasible(mv)).map(|mut mv| {
            mv.feasible = true;
            mv
        })
    }
}
