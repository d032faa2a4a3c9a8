//! Seeded generators for test instances and traffic time series.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::eval::utilization;
use crate::net::{ActivationPlan, LinecardSpec, Network, NodeId, PortRole};
use crate::optimizer::min_mlu;
use crate::par::Exec;
use crate::spr::{arc_traffic, FlowFractionTable, Routing};
use crate::traffic::{scale_matrix, Sample, TrafficMatrix, TrafficTimeSeries};

/// Shape of [`random_network`].
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    pub nodes: usize,
    /// Mean node degree; the spanning tree alone gives just under 2.
    pub mean_degree: f64,
    /// Integer IGP weights are drawn from `1..=max_weight`.
    pub max_weight: u32,
    pub ports_per_link: usize,
    /// Port capacity of each link, drawn uniformly from this list.
    pub port_capacities: Vec<f64>,
    pub ports_per_linecard: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            nodes: 10,
            mean_degree: 3.0,
            max_weight: 3,
            ports_per_link: 4,
            port_capacities: vec![10.0, 10.0, 40.0],
            ports_per_linecard: 8,
        }
    }
}

/// Connected random network: a random spanning tree plus uniformly chosen
/// extra links up to the requested mean degree.
pub fn random_network<R: Rng>(rng: &mut R, p: &TopologyParams) -> Result<Network> {
    if p.nodes < 2 || p.ports_per_link == 0 || p.port_capacities.is_empty() || p.max_weight == 0 {
        return Err(Error::InvalidInput(format!("bad topology parameters {p:?}")));
    }
    let n = p.nodes;
    let mut b = Network::builder();
    for i in 0..n {
        b.add_node(format!("r{i}"));
    }
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    let mut rest: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|e| !pairs.contains(e))
        .collect();
    rest.shuffle(rng);
    let target = ((p.mean_degree * n as f64 / 2.0).round() as usize).max(n - 1);
    pairs.extend(rest.into_iter().take(target.saturating_sub(n - 1)));
    for (i, j) in pairs {
        let w = rng.random_range(1..=p.max_weight) as f64;
        let c = p.port_capacities[rng.random_range(0..p.port_capacities.len())];
        b.add_link(
            NodeId(i),
            NodeId(j),
            w,
            w,
            &vec![(c, PortRole::Backbone); p.ports_per_link],
        )?;
    }
    b.build(LinecardSpec {
        slots: p.ports_per_linecard,
        ..LinecardSpec::default()
    })
}

/// Gravity matrix over all ordered pairs: exponential node masses times a
/// uniform factor in `[0.5, 1.5)`.
pub fn gravity_matrix<R: Rng>(rng: &mut R, n: usize) -> TrafficMatrix {
    let mass: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let mut m = TrafficMatrix::zeros(n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let t = mass[u] * mass[v] * rng.random_range(0.5..1.5);
                m.set(NodeId(u), NodeId(v), t).expect("valid pair");
            }
        }
    }
    m
}

/// Maximum link utilisation of shortest-path routing with every port on.
pub fn spr_mlu(network: &Network, matrix: &TrafficMatrix, table: &FlowFractionTable) -> Result<f64> {
    let traffic = arc_traffic(table, matrix, &Routing::shortest_path(matrix))?;
    let plan = ActivationPlan::all_active(network);
    Ok(utilization(network, &plan, &traffic)?.1)
}

/// Rescales `matrix` so shortest-path routing peaks at `target`.
pub fn scale_to_spr_mlu(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    target: f64,
) -> Result<TrafficMatrix> {
    let mlu = spr_mlu(network, matrix, table)?;
    if mlu <= 0.0 {
        return Err(Error::InvalidInput("traffic matrix loads no link".into()));
    }
    scale_matrix(matrix, target / mlu)
}

/// Dense gravity matrix scaled so that the best two-segment routing with
/// every port on peaks at `target` utilisation.
pub fn gravity_for_mlu<R: Rng>(
    rng: &mut R,
    network: &Network,
    table: &FlowFractionTable,
    target: f64,
    exec: Exec,
) -> Result<TrafficMatrix> {
    let m = gravity_matrix(rng, network.num_nodes());
    let best = min_mlu(network, &m, table, None, exec, Duration::from_secs(3600))?;
    if best.mlu <= 0.0 {
        return Err(Error::InvalidInput("traffic matrix loads no link".into()));
    }
    scale_matrix(&m, target / best.mlu)
}

/// Deterministic generator for reproducible instances.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `1 + 0.9 sin(2 pi h / 24 + phase) + N(0, sigma)` sampled on the slot grid.
pub fn sinusoid_series<R: Rng>(
    rng: &mut R,
    days: u32,
    slots_per_day: usize,
    phase: f64,
    sigma: f64,
) -> Result<TrafficTimeSeries> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Series(e.to_string()))?;
    let mut samples = Vec::new();
    for day in 0..days {
        for slot in 0..slots_per_day as u32 {
            let h = slot as f64 * 24.0 / slots_per_day as f64;
            let v = 1.0 + 0.9 * (std::f64::consts::TAU * h / 24.0 + phase).sin() + noise.sample(rng);
            samples.push(Sample {
                day,
                slot,
                total_traffic: v.max(0.0),
            });
        }
    }
    TrafficTimeSeries::new(slots_per_day, samples)
}

/// Diurnal profile of a backbone: trough before dawn, evening peak.
const ISP_SHAPE: [(f64, f64); 14] = [
    (0.0, 0.58),
    (0.75, 0.52),
    (1.0, 0.40),
    (3.0, 0.28),
    (5.0, 0.22),
    (7.0, 0.28),
    (8.75, 0.42),
    (9.0, 0.56),
    (12.0, 0.78),
    (15.0, 0.82),
    (18.0, 0.90),
    (21.0, 1.00),
    (23.0, 0.75),
    (24.0, 0.58),
];

fn isp_shape(h: f64) -> f64 {
    let i = ISP_SHAPE.partition_point(|p| p.0 <= h).clamp(1, ISP_SHAPE.len() - 1);
    let (h0, v0) = ISP_SHAPE[i - 1];
    let (h1, v1) = ISP_SHAPE[i];
    v0 + (v1 - v0) * (h - h0) / (h1 - h0)
}

/// Quarter-hour series whose mean stays under half its peak from 01:00 to
/// 09:00, with multiplicative noise of relative deviation `sigma`.
pub fn isp_like_series<R: Rng>(rng: &mut R, days: u32, peak: f64, sigma: f64) -> Result<TrafficTimeSeries> {
    let noise = Normal::new(1.0, sigma).map_err(|e| Error::Series(e.to_string()))?;
    let mut samples = Vec::new();
    for day in 0..days {
        for slot in 0..96 {
            let v = peak * isp_shape(slot as f64 / 4.0) * noise.sample(rng);
            samples.push(Sample {
                day,
                slot,
                total_traffic: v.max(0.0),
            });
        }
    }
    TrafficTimeSeries::new(96, samples)
}
