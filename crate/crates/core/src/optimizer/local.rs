//! Port removal by moving whole demands onto other intermediates.

use std::collections::HashMap;
use std::time::Instant;

use crate::eval::FIT_TOL;
use crate::net::{ArcId, LinkId, Network, NodeId, PortRole};
use crate::spr::{arc_traffic, DemandRouting, FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

const PENALTY_EXP: i32 = 8;
const DESCENT_SWEEPS: usize = 200;

fn segments(table: &FlowFractionTable, u: NodeId, v: NodeId, w: NodeId) -> [&[(ArcId, f64)]; 2] {
    if w == v || w == u {
        [table.fractions(u, v), &[]]
    } else {
        [table.fractions(u, w), table.fractions(w, v)]
    }
}

struct State<'a> {
    network: &'a Network,
    table: &'a FlowFractionTable,
    theta: f64,
    demands: Vec<(NodeId, NodeId, f64)>,
    via: Vec<Vec<(NodeId, f64)>>,
    loads: Vec<f64>,
    /// Link capacity with the `k` largest backbone ports on, per `k`.
    caps: Vec<Vec<f64>>,
    count: Vec<usize>,
    limit: Vec<f64>,
    candidates: Vec<NodeId>,
}

impl State<'_> {
    fn cap_limit(&self, l: usize, k: usize) -> f64 {
        self.theta * self.caps[l][k] * (1.0 + FIT_TOL)
    }

    fn link_load(&self, l: usize) -> f64 {
        let link = &self.network.links()[l];
        self.loads[link.fwd.0].max(self.loads[link.bwd.0])
    }

    fn apply(&mut self, d: usize, sign: f64) {
        let (u, v, t) = self.demands[d];
        for i in 0..self.via[d].len() {
            let (w, x) = self.via[d][i];
            for seg in segments(self.table, u, v, w) {
                for &(a, f) in seg {
                    self.loads[a.0] += sign * t * x * f;
                }
            }
        }
    }

    fn share_on(&self, d: usize, l: usize) -> f64 {
        let (u, v, _) = self.demands[d];
        let link = &self.network.links()[l];
        let mut s = 0.0;
        for &(w, x) in &self.via[d] {
            for seg in segments(self.table, u, v, w) {
                for &(a, f) in seg {
                    if a == link.fwd || a == link.bwd {
                        s += x * f;
                    }
                }
            }
        }
        s
    }

    /// Best single intermediate for demand `d` that avoids link `avoid`, by
    /// lowest resulting peak ratio. When `strict`, it must also fit every
    /// limit.
    fn reroute(&self, d: usize, avoid: Option<usize>, strict: bool) -> Option<NodeId> {
        let (u, v, t) = self.demands[d];
        let arcs = self.network.arcs();
        let mut best: Option<(f64, NodeId)> = None;
        let options = self.candidates.iter().copied().filter(|&w| w != u).chain([v]);
        'w: for w in options {
            if w != v && !(self.table.is_reachable(u, w) && self.table.is_reachable(w, v)) {
                continue;
            }
            let mut peak = 0.0f64;
            for seg in segments(self.table, u, v, w) {
                for &(a, f) in seg {
                    let link = arcs[a.0].link.0;
                    let after = self.loads[a.0] + t * f;
                    if avoid == Some(link) || (strict && after > self.limit[link]) {
                        continue 'w;
                    }
                    peak = peak.max(after / self.limit[link]);
                }
            }
            if best.is_none_or(|b| peak < b.0) {
                best = Some((peak, w));
            }
        }
        best.map(|b| b.1)
    }

    fn try_drop(&mut self, l: usize) -> bool {
        let k = self.count[l] - 1;
        if self.relieve(l, self.cap_limit(l, k)) {
            self.count[l] = k;
            true
        } else {
            false
        }
    }

    /// Lowers link `l`'s limit to `target`, moving crossing demands, largest
    /// first, until both directions fit. Undoes every move on failure.
    fn relieve(&mut self, l: usize, target: f64) -> bool {
        let old_limit = self.limit[l];
        self.limit[l] = target;
        if self.link_load(l) <= target {
            return true;
        }
        let mut crossing: Vec<(f64, usize)> = (0..self.demands.len())
            .filter_map(|d| {
                let s = self.share_on(d, l);
                (s > 0.0).then(|| (s * self.demands[d].2, d))
            })
            .collect();
        crossing.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut journal: Vec<(usize, Vec<(NodeId, f64)>)> = Vec::new();
        for &(_, d) in &crossing {
            if self.link_load(l) <= target {
                break;
            }
            self.apply(d, -1.0);
            if let Some(w) = self.reroute(d, Some(l), true) {
                let old = std::mem::replace(&mut self.via[d], vec![(w, 1.0)]);
                journal.push((d, old));
            }
            self.apply(d, 1.0);
        }
        if self.link_load(l) <= target {
            return true;
        }
        for (d, old) in journal.into_iter().rev() {
            self.apply(d, -1.0);
            self.via[d] = old;
            self.apply(d, 1.0);
        }
        self.limit[l] = old_limit;
        false
    }

    /// Clears overloaded link `l` by moving one crossing demand anywhere off
    /// it and then relieving every link that move overloads.
    fn eject(&mut self, l: usize) -> bool {
        let mut crossing: Vec<(f64, usize)> = (0..self.demands.len())
            .filter_map(|d| {
                let s = self.share_on(d, l);
                (s > 0.0).then(|| (s * self.demands[d].2, d))
            })
            .collect();
        crossing.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, d) in crossing {
            let (u, v, _) = self.demands[d];
            let options: Vec<NodeId> = self.candidates.iter().copied().filter(|&w| w != u).chain([v]).collect();
            for w in options {
                if w != v && !(self.table.is_reachable(u, w) && self.table.is_reachable(w, v)) {
                    continue;
                }
                let (via, loads) = (self.via.clone(), self.loads.clone());
                self.apply(d, -1.0);
                self.via[d] = vec![(w, 1.0)];
                self.apply(d, 1.0);
                if self.share_on(d, l) == 0.0 {
                    let over: Vec<usize> =
                        (0..self.limit.len()).filter(|&k| self.link_load(k) > self.limit[k]).collect();
                    if over.into_iter().all(|k| self.relieve(k, self.limit[k])) {
                        return true;
                    }
                }
                self.via = via;
                self.loads = loads;
            }
        }
        false
    }

    fn fits(&self) -> bool {
        (0..self.limit.len()).all(|l| self.link_load(l) <= self.limit[l])
    }

    /// Added penalty of sending demand `d`, currently removed from the loads,
    /// through `w`.
    fn penalty(&self, d: usize, w: NodeId) -> f64 {
        let (u, v, t) = self.demands[d];
        let arcs = self.network.arcs();
        let g = |x: f64, lim: f64| (x / lim).powi(PENALTY_EXP);
        let mut cost = 0.0;
        for seg in segments(self.table, u, v, w) {
            for &(a, f) in seg {
                let lim = self.limit[arcs[a.0].link.0];
                cost += g(self.loads[a.0] + t * f, lim) - g(self.loads[a.0], lim);
            }
        }
        cost
    }

    /// Moves single demands to the intermediate with the lowest smoothed
    /// peak penalty until every link fits or no move helps.
    fn descend(&mut self) -> bool {
        let mut order: Vec<usize> = (0..self.demands.len()).collect();
        order.sort_by(|&a, &b| self.demands[b].2.total_cmp(&self.demands[a].2).then(a.cmp(&b)));
        for _ in 0..DESCENT_SWEEPS {
            if self.fits() {
                return true;
            }
            let mut moved = false;
            for &d in &order {
                let (u, v, _) = self.demands[d];
                self.apply(d, -1.0);
                let current = match self.via[d][..] {
                    [(w, _)] => self.penalty(d, w),
                    _ => f64::INFINITY,
                };
                let mut best = (current, None);
                for w in self.candidates.iter().copied().filter(|&w| w != u).chain([v]) {
                    if w != v && !(self.table.is_reachable(u, w) && self.table.is_reachable(w, v)) {
                        continue;
                    }
                    let c = self.penalty(d, w);
                    if c < best.0 - 1e-12 * best.0.abs() {
                        best = (c, Some(w));
                    }
                }
                if let Some(w) = best.1 {
                    self.via[d] = vec![(w, 1.0)];
                    moved = true;
                }
                self.apply(d, 1.0);
            }
            if !moved {
                break;
            }
        }
        self.fits()
    }
}

impl<'a> State<'a> {
    /// Loads of `routing` with each link at the fewest ports that carry
    /// them, or `None` if some link overflows even with every port on.
    fn new(
        network: &'a Network,
        matrix: &TrafficMatrix,
        table: &'a FlowFractionTable,
        theta: f64,
        candidates: Option<&[NodeId]>,
        routing: &Routing,
    ) -> Option<Self> {
        let loads = arc_traffic(table, matrix, routing).ok()?;
        let index: HashMap<(NodeId, NodeId), &DemandRouting> =
            routing.demands.iter().map(|d| ((d.src, d.dst), d)).collect();
        let demands: Vec<(NodeId, NodeId, f64)> = matrix.demands().collect();
        let via = demands.iter().map(|&(u, v, _)| index[&(u, v)].via.clone()).collect();
        let caps: Vec<Vec<f64>> = network
            .links()
            .iter()
            .enumerate()
            .map(|(l, link)| {
                let mut c: Vec<f64> = link
                    .ports
                    .iter()
                    .map(|p| &network.ports()[p.0])
                    .filter(|p| p.role == PortRole::Backbone)
                    .map(|p| p.capacity)
                    .collect();
                c.sort_by(|a, b| b.total_cmp(a));
                let mut acc = network.access_capacity(LinkId(l));
                let mut out = vec![acc];
                for x in c {
                    acc += x;
                    out.push(acc);
                }
                out
            })
            .collect();
        let mut s = State {
            network,
            table,
            theta,
            demands,
            via,
            loads,
            caps,
            count: Vec::new(),
            limit: Vec::new(),
            candidates: candidates.map_or_else(|| network.nodes().collect(), <[NodeId]>::to_vec),
        };
        for l in 0..network.links().len() {
            let load = s.link_load(l);
            let k = (0..s.caps[l].len()).find(|&k| load <= s.cap_limit(l, k))?;
            s.count.push(k);
            s.limit.push(s.cap_limit(l, k));
        }
        Some(s)
    }

    fn into_routing(self) -> Routing {
        Routing {
            demands: self
                .demands
                .iter()
                .zip(self.via)
                .map(|(&(src, dst, _), via)| DemandRouting { src, dst, via })
                .collect(),
        }
    }
}

/// Moves every split demand, largest first, onto the single intermediate
/// that fits best with every port on, then clears any overloaded link by
/// moving other demands off it, possibly after pushing one demand onto an
/// overloaded detour. Falls back to a penalty descent over all demands. `None` if some overload remains.
pub(super) fn unsplit(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    theta: f64,
    candidates: Option<&[NodeId]>,
    routing: &Routing,
) -> Option<Routing> {
    let mut s = State::new(network, matrix, table, theta, candidates, routing)?;
    for l in 0..network.links().len() {
        s.limit[l] = s.cap_limit(l, s.caps[l].len() - 1);
    }
    let mut split: Vec<usize> = (0..s.demands.len())
        .filter(|&d| s.via[d].iter().filter(|x| x.1 > 0.0).count() > 1)
        .collect();
    split.sort_by(|&a, &b| s.demands[b].2.total_cmp(&s.demands[a].2).then(a.cmp(&b)));
    for d in split {
        s.apply(d, -1.0);
        let w = s.reroute(d, None, true).or_else(|| s.reroute(d, None, false))?;
        s.via[d] = vec![(w, 1.0)];
        s.apply(d, 1.0);
    }
    let mut over: Vec<(f64, usize)> = (0..network.links().len())
        .map(|l| (s.link_load(l) / s.limit[l], l))
        .filter(|x| x.0 > 1.0)
        .collect();
    over.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let ok = over.into_iter().all(|(_, l)| s.relieve(l, s.limit[l]) || s.eject(l));
    if ok || s.descend() {
        Some(s.into_routing())
    } else {
        None
    }
}

/// Repeatedly switches off one port of some link by moving the demands
/// crossing it to other single intermediates that fit the remaining
/// capacity. Returns `routing` unchanged if it already overloads a link.
pub(super) fn remove_ports(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    theta: f64,
    candidates: Option<&[NodeId]>,
    routing: &Routing,
    deadline: Instant,
) -> Routing {
    let Some(mut s) = State::new(network, matrix, table, theta, candidates, routing) else {
        return routing.clone();
    };
    loop {
        let mut order: Vec<(f64, usize)> = (0..network.links().len())
            .filter(|&l| s.count[l] > 0)
            .map(|l| (s.link_load(l) - s.cap_limit(l, s.count[l] - 1), l))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut improved = false;
        for (_, l) in order {
            if Instant::now() >= deadline {
                break;
            }
            while s.count[l] > 0 && s.try_drop(l) {
                improved = true;
            }
        }
        if !improved || Instant::now() >= deadline {
            break;
        }
    }
    s.into_routing()
}
