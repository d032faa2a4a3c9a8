//! Branch and bound over port counts with rounding and diving incumbents.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::explicit::single_path_fallback;
use super::local::{remove_ports, unsplit};
use super::master::{LpStatus, Master};
use super::{round_ports, Mode, OptimizationParams, SearchStatus, SrConfiguration};
use crate::error::{Error, Result};
use crate::net::{Network, NodeId};
use crate::spr::{FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

/// Slack when comparing fractional bounds with integral port counts.
const BOUND_TOL: f64 = 1e-6;
/// A demand whose largest share reaches this is fixed with the first batch.
const BATCH_SHARE: f64 = 0.9;

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    fixes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: best bound, then deepest, then newest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

fn ceil_bound(x: f64) -> f64 {
    (x - BOUND_TOL).ceil().max(0.0)
}

struct Incumbent<'n> {
    network: &'n Network,
    best: Option<SrConfiguration>,
    count: usize,
}

impl<'n> Incumbent<'n> {
    fn offer(&mut self, candidate: Result<SrConfiguration>) -> Result<()> {
        let c = match candidate {
            Ok(c) => c,
            Err(Error::LinkOverload { .. } | Error::Infeasible { .. }) => return Ok(()),
            Err(e) => return Err(e),
        };
        let k = c.active_backbone_ports(self.network);
        if self.best.is_none() || k < self.count {
            self.count = k;
            self.best = Some(c);
        }
        Ok(())
    }

    fn beats(&self, bound: f64) -> bool {
        self.best.is_some() && ceil_bound(bound) >= self.count as f64
    }
}

pub(super) fn run(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    params: &OptimizationParams,
    deadline: Instant,
) -> Result<SrConfiguration> {
    let round = |r: &Routing| round_ports(network, r, matrix, table, params);
    let cands = params.candidates.as_deref();
    let mut inc = Incumbent {
        network,
        best: None,
        count: usize::MAX,
    };
    if matrix.num_demands() == 0 {
        let mut c = round(&Routing::default())?;
        c.lower_bound = Some(0.0);
        return Ok(c);
    }

    let mut master = Master::ports(
        network,
        matrix,
        table,
        params.theta,
        params.candidates.as_deref(),
        params.exec,
    );
    let spr = round(&Routing::shortest_path(matrix));
    match master.solve(deadline) {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible {
                theta: params.theta,
                reason: "no two-segment routing fits with every port active".into(),
            })
        }
        LpStatus::TimeLimit => {
            return match spr {
                Ok(mut c) => {
                    c.status = SearchStatus::BudgetExhausted;
                    Ok(c)
                }
                Err(_) => Err(Error::TimeLimit),
            }
        }
    }
    let root_bound = master.objective();
    let mut shaved = master.clone();
    let shaved_ok = shave(&mut shaved, deadline);
    match params.mode {
        Mode::Splitting => {
            inc.offer(round(&master.routing()))?;
            if shaved_ok {
                inc.offer(round(&shaved.routing()))?;
            }
        }
        Mode::NoSplitting => {
            for start in [&master, &shaved].into_iter().take(1 + shaved_ok as usize) {
                if let Some(r) = dive(start, deadline) {
                    inc.offer(round(&r))?;
                }
                if let Some(r) = unsplit(network, matrix, table, params.theta, cands, &start.routing()) {
                    inc.offer(round(&r))?;
                }
            }
            if inc.best.is_none() {
                if let Some(r) = single_path_fallback(network, matrix, table, params, deadline)? {
                    inc.offer(round(&r))?;
                }
            }
        }
    }
    inc.offer(spr)?;
    if let Some(best) = &inc.best {
        let r = remove_ports(network, matrix, table, params.theta, cands, &best.routing, deadline);
        inc.offer(round(&r))?;
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut leaf_floor = f64::INFINITY;
    let mut complete = true;
    let mut explored = 0usize;
    let mut pending = Some((root_bound, 0usize, Vec::new()));
    loop {
        // branch on the node solved last
        if let Some((bound, depth, fixes)) = pending.take().filter(|p| !inc.beats(p.0)) {
            match most_fractional(&master) {
                None => leaf_floor = leaf_floor.min(ceil_bound(bound)),
                Some((k, v)) => {
                    let (lo, hi) = current_bounds(&master, &fixes, k);
                    for (clo, chi) in [(lo, v.floor()), (v.ceil(), hi)] {
                        let mut f: Vec<(usize, f64, f64)> = fixes.clone();
                        f.push((k, clo, chi));
                        seq += 1;
                        heap.push(Node {
                            bound,
                            depth: depth + 1,
                            seq,
                            fixes: f,
                        });
                    }
                }
            }
        }
        let Some(node) = heap.pop() else { break };
        if inc.beats(node.bound) {
            continue;
        }
        if explored >= params.limits.max_nodes || Instant::now() >= deadline {
            complete = false;
            heap.push(node);
            break;
        }
        explored += 1;
        for k in 0..master.port_vars().len() {
            let c = master.port_vars()[k].count as f64;
            master.set_port_bounds(k, 0.0, c);
        }
        for &(k, lo, hi) in &node.fixes {
            master.set_port_bounds(k, lo, hi);
        }
        match master.solve(deadline) {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::TimeLimit => {
                complete = false;
                heap.push(node);
                break;
            }
        }
        let obj = master.objective();
        if inc.beats(obj) {
            continue;
        }
        let routing = master.routing();
        match params.mode {
            Mode::Splitting => inc.offer(round(&routing))?,
            Mode::NoSplitting => {
                let relaxed = round(&routing);
                let promising = match &relaxed {
                    Ok(c) => inc.best.is_none() || c.active_backbone_ports(network) < inc.count,
                    Err(_) => false,
                };
                if promising {
                    if let Some(r) = dive(&master, deadline) {
                        inc.offer(round(&r))?;
                    }
                }
            }
        }
        pending = Some((obj, node.depth, node.fixes));
    }

    let mut best = inc.best.ok_or(if complete {
        Error::Infeasible {
            theta: params.theta,
            reason: "no integral port assignment found".into(),
        }
    } else {
        Error::TimeLimit
    })?;
    let open = heap
        .iter()
        .map(|n| ceil_bound(n.bound))
        .fold(f64::INFINITY, f64::min);
    let lb = (inc.count as f64).min(open).min(leaf_floor).max(ceil_bound(root_bound));
    best.lower_bound = Some(lb.min(inc.count as f64));
    best.status = if complete {
        SearchStatus::Complete
    } else {
        SearchStatus::BudgetExhausted
    };
    Ok(best)
}

fn most_fractional(master: &Master) -> Option<(usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    for k in 0..master.port_vars().len() {
        let v = master.port_value(k);
        let frac = v - v.floor();
        let score = frac.min(1.0 - frac);
        if score > BOUND_TOL && best.is_none_or(|b| score > b.0) {
            best = Some((score, k, v));
        }
    }
    best.map(|(_, k, v)| (k, v))
}

fn current_bounds(master: &Master, fixes: &[(usize, f64, f64)], k: usize) -> (f64, f64) {
    let mut b = (0.0, master.port_vars()[k].count as f64);
    for &(j, lo, hi) in fixes {
        if j == k {
            b = (lo, hi);
        }
    }
    b
}

/// Lowers each link's port count to the floor of its relaxed value,
/// smallest fractional part first, keeping every step the relaxation
/// survives. Links close entirely when their value is below one; closures
/// that leave some demand without a detour are skipped without solving.
/// Returns `false` if the deadline interrupts a solve.
fn shave(m: &mut Master, deadline: Instant) -> bool {
    let mut by_link: Vec<Vec<usize>> = Vec::new();
    for (k, pv) in m.port_vars().iter().enumerate() {
        if by_link.len() <= pv.link.0 {
            by_link.resize(pv.link.0 + 1, Vec::new());
        }
        by_link[pv.link.0].push(k);
    }
    let masks = m.link_masks();
    let mut closed = vec![0u64; masks.words()];
    let mut tried = vec![false; by_link.len()];
    loop {
        let mut pick: Option<(f64, usize, f64)> = None;
        for (l, ks) in by_link.iter().enumerate() {
            if tried[l] || ks.is_empty() {
                continue;
            }
            let v: f64 = ks.iter().map(|&k| m.port_value(k)).sum();
            let frac = v - (v + BOUND_TOL).floor();
            if frac > BOUND_TOL && pick.is_none_or(|p| frac < p.0) {
                pick = Some((frac, l, v));
            }
        }
        let Some((_, l, v)) = pick else { return true };
        tried[l] = true;
        let closing = v < 1.0;
        if closing {
            let mut blocked = closed.clone();
            blocked[l / 64] |= 1 << (l % 64);
            if !m.may_avoid(&masks, &blocked) {
                continue;
            }
        }
        let backup = m.clone();
        for &k in &by_link[l] {
            let v = m.port_value(k);
            m.set_port_bounds(k, 0.0, (v + BOUND_TOL).floor());
        }
        match m.solve(deadline) {
            LpStatus::Optimal => {
                if closing {
                    closed[l / 64] |= 1 << (l % 64);
                }
            }
            LpStatus::TimeLimit => {
                *m = backup;
                return false;
            }
            LpStatus::Infeasible => *m = backup,
        }
    }
}

/// Fixes demands to single intermediates, largest share first, re-solving
/// the relaxation after every batch. Returns an unsplit routing or `None`
/// when the dive runs into infeasibility it cannot repair or out of time.
fn dive(start: &Master, deadline: Instant) -> Option<Routing> {
    let mut m = start.clone();
    loop {
        if Instant::now() >= deadline {
            return None;
        }
        let mut open: Vec<(usize, Vec<(NodeId, f64)>)> = Vec::new();
        for d in 0..m.num_demands() {
            if m.is_fixed(d) {
                continue;
            }
            let mut split = m.split(d);
            split.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            if split[0].1 >= 1.0 - BOUND_TOL {
                m.fix(d, split[0].0);
            } else {
                open.push((d, split));
            }
        }
        if open.is_empty() {
            return Some(m.routing());
        }
        open.sort_by(|a, b| b.1[0].1.total_cmp(&a.1[0].1).then(a.0.cmp(&b.0)));
        let batch: Vec<usize> = (0..open.len())
            .take_while(|&i| i == 0 || open[i].1[0].1 >= BATCH_SHARE)
            .collect();
        for &i in &batch {
            m.fix(open[i].0, open[i].1[0].0);
        }
        match m.solve(deadline) {
            LpStatus::Optimal => continue,
            LpStatus::TimeLimit => return None,
            LpStatus::Infeasible => {}
        }
        for &i in &batch {
            m.unfix(open[i].0);
        }
        let (d, ref split) = open[0];
        let dst = m.demand(d).dst;
        let mut options: Vec<NodeId> = split.iter().map(|x| x.0).collect();
        if !options.contains(&dst) {
            options.push(dst);
        }
        let mut repaired = false;
        let first = if batch.len() > 1 { 0 } else { 1 };
        for &via in &options[first..] {
            m.fix(d, via);
            match m.solve(deadline) {
                LpStatus::Optimal => {
                    repaired = true;
                    break;
                }
                LpStatus::TimeLimit => return None,
                LpStatus::Infeasible => m.unfix(d),
            }
        }
        if !repaired {
            return None;
        }
    }
}
