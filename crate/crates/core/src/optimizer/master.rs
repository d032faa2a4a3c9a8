//! Column-generation master for the two-segment routing relaxation.
//!
//! Every demand starts on its shortest path. A column moves the demand's
//! share `x` onto intermediate `w` and changes each arc's load by
//! `t * (f_uw + f_wv - f_uv) * x`, so the shortest-path share is implicit and
//! the per-demand row `sum x <= 1` is only added once it would be violated.
//! Ports enter as one integer-valued count per link and capacity class.
//! Traffic and capacities are divided by the largest port capacity to keep
//! the coefficients near one.

use std::time::{Duration, Instant};

use greensr_lp::{Simplex, SimplexLimits, SimplexStatus};

use crate::error::{Error, Result};
use crate::net::{LinkId, Network, NodeId, PortRole};
use crate::par::{map_indexed, Exec};
use crate::spr::{arc_traffic, DemandRouting, FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

/// Reduced cost below which a column is worth adding.
const RC_TOL: f64 = 1e-7;
/// Total overflow treated as zero.
const OVERFLOW_TOL: f64 = 1e-7;
/// Splitting fractions below this are dropped when reading a routing.
const CLEAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
    pub volume: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PortVar {
    pub link: LinkId,
    pub count: usize,
    col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Ports { theta: f64 },
    Mlu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, Copy)]
struct Column {
    via: NodeId,
    col: usize,
}

#[derive(Clone)]
pub(crate) struct Master<'a> {
    table: &'a FlowFractionTable,
    demands: Vec<Demand>,
    lp: Simplex,
    num_arcs: usize,
    ports: Vec<PortVar>,
    overflow: Vec<usize>,
    mu: Option<usize>,
    columns: Vec<Column>,
    by_demand: Vec<Vec<usize>>,
    gub: Vec<Option<usize>>,
    fixed: Vec<Option<NodeId>>,
    allowed: Vec<bool>,
    arc_link: Vec<usize>,
    num_links: usize,
    exec: Exec,
}

/// Links touched by the shortest paths between every node pair, one bit
/// per link.
pub(crate) struct LinkMasks {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl LinkMasks {
    pub fn words(&self) -> usize {
        self.words
    }

    fn get(&self, u: usize, w: usize) -> &[u64] {
        let i = (u * self.n + w) * self.words;
        &self.bits[i..i + self.words]
    }
}

fn disjoint(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

impl<'a> Master<'a> {
    fn new(
        network: &Network,
        matrix: &TrafficMatrix,
        table: &'a FlowFractionTable,
        kind: Kind,
        candidates: Option<&[NodeId]>,
        exec: Exec,
    ) -> Self {
        let scale = network
            .ports()
            .iter()
            .map(|p| p.capacity)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let demands: Vec<Demand> = matrix
            .demands()
            .map(|(src, dst, t)| Demand {
                src,
                dst,
                volume: t / scale,
            })
            .collect();
        let num_arcs = network.arcs().len();
        let mut base = vec![0.0; num_arcs];
        for d in &demands {
            table.accumulate(d.src, d.dst, d.volume, &mut base);
        }
        let n = network.num_nodes();
        let allowed = match candidates {
            None => vec![true; n],
            Some(c) => {
                let mut a = vec![false; n];
                for w in c.iter().filter(|w| w.0 < n) {
                    a[w.0] = true;
                }
                a
            }
        };

        let mut lp = Simplex::new();
        let mut ports = Vec::new();
        let mut overflow = Vec::new();
        let mut mu = None;
        let mut link_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); network.links().len()];
        match kind {
            Kind::Ports { .. } => {
                for (l, link) in network.links().iter().enumerate() {
                    let mut caps: Vec<f64> = link
                        .ports
                        .iter()
                        .map(|p| &network.ports()[p.0])
                        .filter(|p| p.role == PortRole::Backbone)
                        .map(|p| p.capacity)
                        .collect();
                    caps.sort_by(|a, b| b.total_cmp(a));
                    let mut i = 0;
                    while i < caps.len() {
                        let j = caps[i..].iter().take_while(|&&c| c == caps[i]).count();
                        let col = lp.add_col(Vec::new(), 0.0, j as f64, 0.0);
                        ports.push(PortVar {
                            link: LinkId(l),
                            count: j,
                            col,
                        });
                        link_cols[l].push((col, caps[i] / scale));
                        i += j;
                    }
                }
                for _ in 0..num_arcs {
                    overflow.push(lp.add_col(Vec::new(), 0.0, 0.0, 0.0));
                }
            }
            Kind::Mlu => {
                mu = Some(lp.add_col(Vec::new(), 0.0, f64::INFINITY, 1.0));
            }
        }
        for (a, arc) in network.arcs().iter().enumerate() {
            let l = arc.link.0;
            let (entries, rhs) = match kind {
                Kind::Ports { theta } => {
                    let mut e: Vec<(usize, f64)> =
                        link_cols[l].iter().map(|&(c, cap)| (c, -theta * cap)).collect();
                    e.push((overflow[a], -1.0));
                    (e, theta * network.access_capacity(arc.link) / scale - base[a])
                }
                Kind::Mlu => {
                    let cap = network.link_capacity(arc.link, None) / scale;
                    (vec![(mu.unwrap_or(0), -cap)], -base[a])
                }
            };
            lp.add_row(f64::NEG_INFINITY, rhs, &entries);
        }
        let nd = demands.len();
        Self {
            table,
            demands,
            lp,
            num_arcs,
            ports,
            overflow,
            mu,
            columns: Vec::new(),
            by_demand: vec![Vec::new(); nd],
            gub: vec![None; nd],
            fixed: vec![None; nd],
            allowed,
            arc_link: network.arcs().iter().map(|a| a.link.0).collect(),
            num_links: network.links().len(),
            exec,
        }
    }

    /// Master minimising the number of active backbone ports subject to
    /// `theta`.
    pub fn ports(
        network: &Network,
        matrix: &TrafficMatrix,
        table: &'a FlowFractionTable,
        theta: f64,
        candidates: Option<&[NodeId]>,
        exec: Exec,
    ) -> Self {
        Self::new(network, matrix, table, Kind::Ports { theta }, candidates, exec)
    }

    pub fn num_demands(&self) -> usize {
        self.demands.len()
    }

    pub fn demand(&self, d: usize) -> Demand {
        self.demands[d]
    }

    pub fn port_vars(&self) -> &[PortVar] {
        &self.ports
    }

    pub fn port_value(&self, k: usize) -> f64 {
        self.lp.value(self.ports[k].col)
    }

    pub fn set_port_bounds(&mut self, k: usize, lo: f64, hi: f64) {
        self.lp.set_bounds(self.ports[k].col, lo, hi);
    }

    pub fn objective(&self) -> f64 {
        self.lp.objective()
    }

    fn set_overflow_phase(&mut self, on: bool) {
        for &o in &self.overflow {
            self.lp.set_bounds(o, 0.0, if on { f64::INFINITY } else { 0.0 });
            self.lp.set_cost(o, if on { 1.0 } else { 0.0 });
        }
        for p in &self.ports {
            self.lp.set_cost(p.col, if on { 0.0 } else { 1.0 });
        }
    }

    /// Solves the relaxation to optimality over all columns.
    pub fn solve(&mut self, deadline: Instant) -> LpStatus {
        if self.mu.is_some() {
            return self.generate(deadline);
        }
        self.set_overflow_phase(false);
        match self.generate(deadline) {
            LpStatus::Infeasible => {}
            done => return done,
        }
        // columns may be missing: minimise overflow first, then retry
        self.set_overflow_phase(true);
        match self.generate(deadline) {
            LpStatus::Optimal => {}
            other => {
                self.set_overflow_phase(false);
                return other;
            }
        }
        let excess = self.lp.objective();
        self.set_overflow_phase(false);
        if excess > OVERFLOW_TOL {
            return LpStatus::Infeasible;
        }
        self.generate(deadline)
    }

    fn generate(&mut self, deadline: Instant) -> LpStatus {
        let limits = SimplexLimits {
            max_iterations: u64::MAX,
            deadline: Some(deadline),
        };
        loop {
            match self.lp.solve(&limits) {
                SimplexStatus::Optimal => {}
                SimplexStatus::Infeasible | SimplexStatus::Unbounded => return LpStatus::Infeasible,
                SimplexStatus::TimeLimit | SimplexStatus::IterationLimit => {
                    return LpStatus::TimeLimit
                }
            }
            if self.add_violated_gubs() {
                continue;
            }
            if Instant::now() >= deadline {
                return LpStatus::TimeLimit;
            }
            if self.price() == 0 {
                return LpStatus::Optimal;
            }
        }
    }

    fn add_violated_gubs(&mut self) -> bool {
        let mut added = false;
        for d in 0..self.demands.len() {
            if self.gub[d].is_some() || self.by_demand[d].len() < 2 {
                continue;
            }
            let cols: Vec<usize> = self.by_demand[d].iter().map(|&c| self.columns[c].col).collect();
            let sum: f64 = cols.iter().map(|&c| self.lp.value(c)).sum();
            if sum > 1.0 + CLEAN_TOL {
                let entries: Vec<(usize, f64)> = cols.iter().map(|&c| (c, 1.0)).collect();
                self.gub[d] = Some(self.lp.add_row(f64::NEG_INFINITY, 1.0, &entries));
                added = true;
            }
        }
        added
    }

    fn price(&mut self) -> usize {
        let prices: Vec<f64> = (0..self.num_arcs)
            .map(|a| (-self.lp.row_dual(a)).max(0.0))
            .collect();
        if prices.iter().all(|&p| p == 0.0) {
            return 0;
        }
        let pp = path_prices(self.table, &prices, self.exec);
        let this = &*self;
        let picks = map_indexed(self.exec, self.demands.len(), |d| this.best_intermediate(d, &pp));
        let mut added = 0;
        for (d, w) in picks.into_iter().enumerate() {
            if let Some(w) = w {
                self.add_column(d, w);
                added += 1;
            }
        }
        added
    }

    fn best_intermediate(&self, d: usize, pp: &[f64]) -> Option<NodeId> {
        if self.fixed[d].is_some() {
            return None;
        }
        let n = self.table.num_nodes();
        let Demand { src, dst, volume } = self.demands[d];
        let (u, v) = (src.0, dst.0);
        let gub_dual = self.gub[d].map_or(0.0, |r| self.lp.row_dual(r));
        let direct = pp[u * n + v];
        let mut best: Option<(f64, usize)> = None;
        for w in 0..n {
            if w == u || w == v || !self.allowed[w] {
                continue;
            }
            let (uw, wv) = (pp[u * n + w], pp[w * n + v]);
            if !uw.is_finite() || !wv.is_finite() {
                continue;
            }
            let rc = volume * (uw + wv - direct) - gub_dual;
            if rc < -RC_TOL
                && best.is_none_or(|(b, _)| rc < b)
                && !self.by_demand[d].iter().any(|&c| self.columns[c].via.0 == w)
            {
                best = Some((rc, w));
            }
        }
        best.map(|(_, w)| NodeId(w))
    }

    fn add_column(&mut self, d: usize, via: NodeId) -> usize {
        let Demand { src, dst, volume } = self.demands[d];
        let mut delta = vec![0.0; self.num_arcs];
        self.table.accumulate(src, via, volume, &mut delta);
        self.table.accumulate(via, dst, volume, &mut delta);
        self.table.accumulate(src, dst, -volume, &mut delta);
        let mut entries: Vec<(usize, f64)> = delta
            .iter()
            .enumerate()
            .filter(|(_, &x)| x.abs() > 1e-14)
            .map(|(a, &x)| (a, x))
            .collect();
        if let Some(r) = self.gub[d] {
            entries.push((r, 1.0));
        }
        let col = self.lp.add_col(entries, 0.0, 1.0, 0.0);
        self.columns.push(Column {
            via,
            col,
        });
        self.by_demand[d].push(self.columns.len() - 1);
        col
    }

    pub fn is_fixed(&self, d: usize) -> bool {
        self.fixed[d].is_some()
    }

    /// Forces demand `d` entirely onto `via` (its destination means the
    /// shortest path).
    pub fn link_masks(&self) -> LinkMasks {
        let n = self.table.num_nodes();
        let words = self.num_links.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * n * words];
        for u in 0..n {
            for w in 0..n {
                let base = (u * n + w) * words;
                for &(a, _) in self.table.fractions(NodeId(u), NodeId(w)) {
                    let l = self.arc_link[a.0];
                    bits[base + l / 64] |= 1 << (l % 64);
                }
            }
        }
        LinkMasks { n, words, bits }
    }

    /// Whether every demand keeps some intermediate whose two segments
    /// avoid all `blocked` links. Capacity is ignored, so `false` proves
    /// that closing those links is infeasible.
    pub fn may_avoid(&self, masks: &LinkMasks, blocked: &[u64]) -> bool {
        let n = self.table.num_nodes();
        let ok = |d: usize| {
            let Demand { src, dst, .. } = self.demands[d];
            let (u, v) = (src.0, dst.0);
            let fits = |w: usize| {
                self.table.is_reachable(src, NodeId(w))
                    && disjoint(masks.get(u, w), blocked)
                    && (w == v || (self.table.is_reachable(NodeId(w), dst) && disjoint(masks.get(w, v), blocked)))
            };
            match self.fixed[d] {
                Some(via) => fits(via.0),
                None => fits(v) || (0..n).any(|w| w != u && w != v && self.allowed[w] && fits(w)),
            }
        };
        map_indexed(self.exec, self.demands.len(), ok).into_iter().all(|x| x)
    }

    pub fn fix(&mut self, d: usize, via: NodeId) {
        if via != self.demands[d].dst
            && !self.by_demand[d].iter().any(|&c| self.columns[c].via == via)
        {
            self.add_column(d, via);
        }
        for &c in &self.by_demand[d] {
            let Column { via: w, col, .. } = self.columns[c];
            let v = if w == via { 1.0 } else { 0.0 };
            self.lp.set_bounds(col, v, v);
        }
        self.fixed[d] = Some(via);
    }

    pub fn unfix(&mut self, d: usize) {
        for &c in &self.by_demand[d] {
            self.lp.set_bounds(self.columns[c].col, 0.0, 1.0);
        }
        self.fixed[d] = None;
    }

    /// Current split of demand `d`, destination included, summing to one.
    pub fn split(&self, d: usize) -> Vec<(NodeId, f64)> {
        let dst = self.demands[d].dst;
        let mut via: Vec<(NodeId, f64)> = Vec::new();
        for &c in &self.by_demand[d] {
            let Column { via: w, col, .. } = self.columns[c];
            let x = self.lp.value(col).clamp(0.0, 1.0);
            if x > CLEAN_TOL {
                via.push((w, x));
            }
        }
        let moved: f64 = via.iter().map(|x| x.1).sum();
        if 1.0 - moved > CLEAN_TOL {
            via.push((dst, 1.0 - moved));
        } else if via.is_empty() {
            via.push((dst, 1.0));
        } else {
            for x in &mut via {
                x.1 /= moved;
            }
        }
        via.sort_by_key(|x| x.0);
        via
    }

    pub fn routing(&self) -> Routing {
        Routing {
            demands: (0..self.demands.len())
                .map(|d| DemandRouting {
                    src: self.demands[d].src,
                    dst: self.demands[d].dst,
                    via: self.split(d),
                })
                .collect(),
        }
    }
}

/// `pp[q * n + r] = sum_a prices[a] * f_qr(a)`, infinite when `r` is
/// unreachable from `q`.
pub(crate) fn path_prices(table: &FlowFractionTable, prices: &[f64], exec: Exec) -> Vec<f64> {
    let n = table.num_nodes();
    map_indexed(exec, n, |q| {
        (0..n)
            .map(|r| {
                if q == r {
                    0.0
                } else if !table.is_reachable(NodeId(q), NodeId(r)) {
                    f64::INFINITY
                } else {
                    table
                        .fractions(NodeId(q), NodeId(r))
                        .iter()
                        .map(|&(a, f)| prices[a.0] * f)
                        .sum()
                }
            })
            .collect::<Vec<f64>>()
    })
    .concat()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MluSolution {
    /// Maximum utilisation of `routing` with every port active.
    pub mlu: f64,
    pub routing: Routing,
}

/// Smallest maximum link utilisation any two-segment routing achieves with
/// every port active.
pub fn min_mlu(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    candidates: Option<&[NodeId]>,
    exec: Exec,
    time_limit: Duration,
) -> Result<MluSolution> {
    super::check_inputs(network, matrix, table)?;
    let mut m = Master::new(network, matrix, table, Kind::Mlu, candidates, exec);
    match m.solve(Instant::now() + time_limit) {
        LpStatus::Optimal => {}
        LpStatus::TimeLimit => return Err(Error::TimeLimit),
        LpStatus::Infeasible => {
            return Err(Error::Infeasible {
                theta: f64::INFINITY,
                reason: "utilisation model has no solution".into(),
            })
        }
    }
    let routing = m.routing();
    let traffic = arc_traffic(table, matrix, &routing)?;
    let mlu = network
        .arcs()
        .iter()
        .zip(&traffic)
        .map(|(a, &t)| t / network.link_capacity(a.link, None))
        .fold(0.0, f64::max);
    Ok(MluSolution { mlu, routing })
}
