//! Shortest-path flow fractions and two-segment routing loads.
//!
//! [`FlowFractionTable`] stores, for every ordered pair `(u, w)`, the share
//! of one unit of `u -> w` traffic that each arc carries under IGP
//! shortest-path forwarding. Only arcs on the shortest-path DAG are stored.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{ArcId, Network, NodeId};
use crate::par::{map_indexed, Exec};
use crate::traffic::TrafficMatrix;

/// Relative slack under which two path lengths count as equal.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EcmpMode {
    /// Split evenly over all shortest-path next hops at every node.
    #[default]
    EvenSplit,
    /// Forward only to the next hop with the smallest node id.
    SinglePath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowFractionTable {
    n: usize,
    num_arcs: usize,
    entries: Vec<Vec<(ArcId, f64)>>,
    dist: Vec<f64>,
    unreachable: Vec<(NodeId, NodeId)>,
}

impl FlowFractionTable {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_arcs(&self) -> usize {
        self.num_arcs
    }

    /// Nonzero `f_uw(a)` sorted by arc.
    pub fn fractions(&self, u: NodeId, w: NodeId) -> &[(ArcId, f64)] {
        &self.entries[u.0 * self.n + w.0]
    }

    pub fn fraction(&self, u: NodeId, w: NodeId, arc: ArcId) -> f64 {
        let row = self.fractions(u, w);
        match row.binary_search_by_key(&arc, |e| e.0) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    /// Shortest-path distance from `u` to `w`; infinite when unreachable.
    pub fn distance(&self, u: NodeId, w: NodeId) -> f64 {
        self.dist[u.0 * self.n + w.0]
    }

    pub fn is_reachable(&self, u: NodeId, w: NodeId) -> bool {
        self.distance(u, w).is_finite()
    }

    /// Ordered pairs with no path between them.
    pub fn unreachable(&self) -> &[(NodeId, NodeId)] {
        &self.unreachable
    }

    /// Adds `scale * f_uw(a)` to `loads[a]` for every arc.
    pub fn accumulate(&self, u: NodeId, w: NodeId, scale: f64, loads: &mut [f64]) {
        for &(a, f) in self.fractions(u, w) {
            loads[a.0] += scale * f;
        }
    }
}

/// `g^w_uv(a) = f_uw(a) + f_wv(a)`: the share of `u -> v` traffic on `arc`
/// when it is steered through `w`. For `w == v` this is the plain
/// shortest-path share.
pub fn two_segment_fraction(
    table: &FlowFractionTable,
    u: NodeId,
    v: NodeId,
    w: NodeId,
    arc: ArcId,
) -> f64 {
    table.fraction(u, w, arc) + table.fraction(w, v, arc)
}

#[derive(Clone, Copy)]
struct HeapItem(f64, usize);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Per-destination shortest-path fractions: `out[u]` is the sparse `f_uw`.
fn toward(
    network: &Network,
    weights: &[f64],
    incoming: &[Vec<ArcId>],
    w: usize,
    mode: EcmpMode,
) -> (Vec<f64>, Vec<Vec<(ArcId, f64)>>) {
    let n = network.num_nodes();
    let arcs = network.arcs();
    let mut dist = vec![f64::INFINITY; n];
    dist[w] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, w));
    while let Some(HeapItem(d, x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &a in &incoming[x] {
            let y = arcs[a.0].from.0;
            let nd = d + weights[a.0];
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(HeapItem(nd, y));
            }
        }
    }
    // next hops of every node on the shortest-path DAG toward w
    let next: Vec<Vec<ArcId>> = (0..n)
        .map(|x| {
            if x == w || !dist[x].is_finite() {
                return Vec::new();
            }
            let mut hops: Vec<ArcId> = network
                .out_arcs(NodeId(x))
                .iter()
                .copied()
                .filter(|a| {
                    let y = arcs[a.0].to.0;
                    dist[y].is_finite() && ties(dist[y] + weights[a.0], dist[x])
                })
                .collect();
            if mode == EcmpMode::SinglePath {
                hops.sort_by_key(|a| (arcs[a.0].to, *a));
                hops.truncate(1);
            }
            hops
        })
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&x| dist[x].is_finite()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    let mut rank = vec![usize::MAX; n];
    for (i, &x) in order.iter().enumerate() {
        rank[x] = i;
    }

    let mut out = vec![Vec::new(); n];
    let mut flow = vec![0.0; n];
    let mut on_arc = vec![0.0; arcs.len()];
    let mut touched: Vec<ArcId> = Vec::new();
    for u in 0..n {
        if u == w || !dist[u].is_finite() {
            continue;
        }
        flow[u] = 1.0;
        for &x in &order[rank[u]..] {
            let fx = flow[x];
            if fx == 0.0 || x == w {
                continue;
            }
            flow[x] = 0.0;
            let share = fx / next[x].len() as f64;
            for &a in &next[x] {
                if on_arc[a.0] == 0.0 {
                    touched.push(a);
                }
                on_arc[a.0] += share;
                flow[arcs[a.0].to.0] += share;
            }
        }
        flow[w] = 0.0;
        touched.sort_unstable();
        out[u] = touched.iter().map(|&a| (a, on_arc[a.0])).collect();
        for a in touched.drain(..) {
            on_arc[a.0] = 0.0;
        }
    }
    (dist, out)
}

/// Builds the fraction table for all ordered pairs. `weights` overrides the
/// network's IGP weights when given (one per arc).
pub fn compute_fractions(
    network: &Network,
    weights: Option<&[f64]>,
    mode: EcmpMode,
    exec: Exec,
) -> Result<FlowFractionTable> {
    let own: Vec<f64>;
    let weights = match weights {
        Some(w) => {
            if w.len() != network.arcs().len() {
                return Err(Error::InvalidInput(format!(
                    "{} weights for {} arcs",
                    w.len(),
                    network.arcs().len()
                )));
            }
            w
        }
        None => {
            own = network.arcs().iter().map(|a| a.weight).collect();
            &own
        }
    };
    if let Some(i) = weights.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!("arc a{i} has weight {}", weights[i])));
    }
    let n = network.num_nodes();
    let mut incoming = vec![Vec::new(); n];
    for (i, a) in network.arcs().iter().enumerate() {
        incoming[a.to.0].push(ArcId(i));
    }
    let per_dest = map_indexed(exec, n, |w| toward(network, weights, &incoming, w, mode));

    let mut entries = vec![Vec::new(); n * n];
    let mut dist = vec![f64::INFINITY; n * n];
    for (w, (d, rows)) in per_dest.into_iter().enumerate() {
        for (u, row) in rows.into_iter().enumerate() {
            entries[u * n + w] = row;
            dist[u * n + w] = d[u];
        }
    }
    let mut unreachable = Vec::new();
    for u in 0..n {
        for w in 0..n {
            if !dist[u * n + w].is_finite() {
                unreachable.push((NodeId(u), NodeId(w)));
            }
        }
    }
    Ok(FlowFractionTable {
        n,
        num_arcs: network.arcs().len(),
        entries,
        dist,
        unreachable,
    })
}

/// Split of one demand over intermediate nodes; `via == dst` is plain
/// shortest-path forwarding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRouting {
    pub src: NodeId,
    pub dst: NodeId,
    pub via: Vec<(NodeId, f64)>,
}

/// Splitting fractions `x^w_uv` for a set of demands.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Routing {
    pub demands: Vec<DemandRouting>,
}

impl Routing {
    /// Every positive demand of `matrix` on its shortest path.
    pub fn shortest_path(matrix: &TrafficMatrix) -> Self {
        Self {
            demands: matrix
                .demands()
                .map(|(u, v, _)| DemandRouting {
                    src: u,
                    dst: v,
                    via: vec![(v, 1.0)],
                })
                .collect(),
        }
    }

    pub fn get(&self, src: NodeId, dst: NodeId) -> Option<&DemandRouting> {
        self.demands.iter().find(|d| d.src == src && d.dst == dst)
    }

    /// Whether every demand uses a single intermediate.
    pub fn is_unsplit(&self) -> bool {
        self.demands
            .iter()
            .all(|d| d.via.iter().filter(|(_, x)| *x > 0.0).count() <= 1)
    }

    /// Demands steered through an intermediate other than the destination.
    pub fn num_steered(&self) -> usize {
        self.demands
            .iter()
            .filter(|d| d.via.iter().any(|&(w, x)| w != d.dst && x > 0.0))
            .count()
    }
}

/// Tolerance on the sum of a demand's splitting fractions.
pub const SPLIT_TOL: f64 = 1e-9;

/// Per-arc traffic `tr(a)` of `matrix` routed by `routing`.
pub fn arc_traffic(
    table: &FlowFractionTable,
    matrix: &TrafficMatrix,
    routing: &Routing,
) -> Result<Vec<f64>> {
    let index: HashMap<(NodeId, NodeId), &DemandRouting> =
        routing.demands.iter().map(|d| ((d.src, d.dst), d)).collect();
    let mut loads = vec![0.0; table.num_arcs()];
    for (u, v, t) in matrix.demands() {
        let d = index.get(&(u, v)).ok_or(Error::MissingRouting { src: u, dst: v })?;
        let sum: f64 = d.via.iter().map(|x| x.1).sum();
        if (sum - 1.0).abs() > SPLIT_TOL || d.via.iter().any(|x| x.1 < 0.0) {
            return Err(Error::FractionSum { src: u, dst: v, sum });
        }
        for &(w, x) in &d.via {
            if x == 0.0 {
                continue;
            }
            if w == u || w.0 >= table.num_nodes() {
                return Err(Error::InvalidInput(format!("demand {u}->{v} uses intermediate {w}")));
            }
            if !table.is_reachable(u, w) || !table.is_reachable(w, v) {
                return Err(Error::Unreachable { src: u, dst: v });
            }
            table.accumulate(u, w, t * x, &mut loads);
            table.accumulate(w, v, t * x, &mut loads);
        }
    }
    Ok(loads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{LinecardSpec, PortRole};

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> Network {
        let mut b = Network::builder();
        for i in 0..n {
            b.add_node(format!("{i}"));
        }
        for &(u, v, w) in edges {
            b.add_link(NodeId(u), NodeId(v), w, w, &[(1.0, PortRole::Backbone)]).unwrap();
        }
        b.build(LinecardSpec::default()).unwrap()
    }

    fn table(net: &Network, mode: EcmpMode) -> FlowFractionTable {
        compute_fractions(net, None, mode, Exec::Sequential).unwrap()
    }

    #[test]
    fn unique_path_on_a_line() {
        let net = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let t = table(&net, EcmpMode::EvenSplit);
        assert_eq!(t.fractions(NodeId(0), NodeId(2)), &[(ArcId(0), 1.0), (ArcId(2), 1.0)]);
        assert!(t.fractions(NodeId(1), NodeId(1)).is_empty());
        assert_eq!(t.distance(NodeId(0), NodeId(2)), 2.0);
    }

    #[test]
    fn square_splits_evenly() {
        // u=0, x=1, w=2, y=3
        let net = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0), (3, 2, 1.0)]);
        let t = table(&net, EcmpMode::EvenSplit);
        let f = t.fractions(NodeId(0), NodeId(2));
        assert_eq!(f.len(), 4);
        assert!(f.iter().all(|&(_, x)| x == 0.5));
        let s = table(&net, EcmpMode::SinglePath);
        assert_eq!(s.fractions(NodeId(0), NodeId(2)), &[(ArcId(0), 1.0), (ArcId(2), 1.0)]);
    }

    #[test]
    fn pendant_detour_crosses_a_link_twice() {
        // 0 - 1 - 2 with a pendant 3 on 1: steering 0->2 via 3 uses 1-3 both ways
        let net = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)]);
        let t = table(&net, EcmpMode::EvenSplit);
        let g = |a| two_segment_fraction(&t, NodeId(0), NodeId(2), NodeId(3), ArcId(a));
        assert_eq!([g(0), g(2), g(4), g(5)], [1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g(1) + g(3), 0.0);
        assert_eq!(two_segment_fraction(&t, NodeId(0), NodeId(2), NodeId(2), ArcId(0)), 1.0);
    }

    #[test]
    fn loop_back_weights_put_both_segments_on_one_arc() {
        // u=0, a=1, b=2, w=3; cheap cycle 1->2->3->1, expensive reverse arcs
        let mut b = Network::builder();
        for i in 0..4 {
            b.add_node(format!("{i}"));
        }
        let p = [(1.0, PortRole::Backbone)];
        b.add_link(NodeId(0), NodeId(1), 1.0, 1.0, &p).unwrap();
        let ab = b.add_link(NodeId(1), NodeId(2), 1.0, 10.0, &p).unwrap();
        b.add_link(NodeId(2), NodeId(3), 1.0, 10.0, &p).unwrap();
        b.add_link(NodeId(3), NodeId(1), 1.0, 10.0, &p).unwrap();
        let net = b.build(LinecardSpec::default()).unwrap();
        let t = table(&net, EcmpMode::EvenSplit);
        let a_to_b = net.link(ab).fwd;
        assert_eq!(two_segment_fraction(&t, NodeId(0), NodeId(2), NodeId(3), a_to_b), 2.0);
    }

    #[test]
    fn unreachable_pairs_are_reported() {
        let net = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let t = table(&net, EcmpMode::EvenSplit);
        assert_eq!(t.unreachable().len(), 8);
        assert!(t.fractions(NodeId(0), NodeId(3)).is_empty());
        let mut m = TrafficMatrix::zeros(4);
        m.set(NodeId(0), NodeId(3), 1.0).unwrap();
        assert!(matches!(
            arc_traffic(&t, &m, &Routing::shortest_path(&m)),
            Err(Error::Unreachable { .. })
        ));
    }

    #[test]
    fn bad_split_is_named() {
        let net = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let t = table(&net, EcmpMode::EvenSplit);
        let mut m = TrafficMatrix::zeros(3);
        m.set(NodeId(0), NodeId(2), 1.0).unwrap();
        let r = Routing {
            demands: vec![DemandRouting {
                src: NodeId(0),
                dst: NodeId(2),
                via: vec![(NodeId(2), 0.5), (NodeId(1), 0.4)],
            }],
        };
        match arc_traffic(&t, &m, &r) {
            Err(Error::FractionSum { src, dst, .. }) => assert_eq!((src, dst), (NodeId(0), NodeId(2))),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            arc_traffic(&t, &m, &Routing::default()),
            Err(Error::MissingRouting { .. })
        ));
        assert!(arc_traffic(&t, &TrafficMatrix::zeros(3), &Routing::default())
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }
}
