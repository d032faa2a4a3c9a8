//! Shortest-path baseline, utilisation checks, linecard packing and energy
//! accounting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::{ActivationPlan, ArcId, LinecardId, LinkId, Network, NodeId, PortId, PortRole};
use crate::optimizer::{Method, SearchStatus, SrConfiguration};
use crate::spr::{arc_traffic, FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

/// Relative slack allowed when checking `load <= theta * capacity`.
pub(crate) const FIT_TOL: f64 = 1e-9;

/// Tolerance of the final utilisation check.
pub const LU_TOL: f64 = 1e-6;

fn fits(load: f64, capacity: f64, theta: f64) -> bool {
    load <= theta * capacity * (1.0 + FIT_TOL)
}

/// Smallest set of `link`'s backbone ports, largest capacity first, that
/// together with its access ports keeps `load` within `theta`. Returns the
/// chosen ports, or `None` when even every port is not enough.
pub(crate) fn select_ports(
    network: &Network,
    link: LinkId,
    load: f64,
    theta: f64,
) -> Option<Vec<PortId>> {
    let mut backbone: Vec<PortId> = network
        .link(link)
        .ports
        .iter()
        .copied()
        .filter(|&p| network.ports()[p.0].role == PortRole::Backbone)
        .collect();
    backbone.sort_by(|a, b| {
        let (ca, cb) = (network.ports()[a.0].capacity, network.ports()[b.0].capacity);
        cb.total_cmp(&ca).then(a.cmp(b))
    });
    let mut capacity = network.access_capacity(link);
    let mut chosen = Vec::new();
    for p in backbone {
        if fits(load, capacity, theta) {
            return Some(chosen);
        }
        capacity += network.ports()[p.0].capacity;
        chosen.push(p);
    }
    fits(load, capacity, theta).then_some(chosen)
}

/// Larger of the two directions' traffic for every link.
pub(crate) fn link_loads(network: &Network, traffic: &[f64]) -> Vec<f64> {
    network
        .links()
        .iter()
        .map(|l| traffic[l.fwd.0].max(traffic[l.bwd.0]))
        .collect()
}

/// Per-arc utilisation under `plan` and the maximum over arcs with active
/// capacity. Traffic on an arc without active capacity is an error.
pub fn utilization(
    network: &Network,
    plan: &ActivationPlan,
    traffic: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if traffic.len() != network.arcs().len() {
        return Err(Error::InvalidInput(format!(
            "{} arc loads for {} arcs",
            traffic.len(),
            network.arcs().len()
        )));
    }
    let caps = plan.arc_capacities(network);
    let mut lu = Vec::with_capacity(caps.len());
    let mut mlu = 0.0f64;
    for (a, (&c, &t)) in caps.iter().zip(traffic).enumerate() {
        if c > 0.0 {
            lu.push(t / c);
            mlu = mlu.max(t / c);
        } else if t > 0.0 {
            return Err(Error::TrafficOnInactive {
                arc: ArcId(a),
                traffic: t,
            });
        } else {
            lu.push(0.0);
        }
    }
    Ok((lu, mlu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MluReport {
    pub utilization: Vec<f64>,
    pub mlu: f64,
}

/// Utilisation of every arc after deactivating the configuration's idle
/// ports.
pub fn evaluate_mlu(network: &Network, config: &SrConfiguration) -> Result<MluReport> {
    let (utilization, mlu) = utilization(network, &config.plan, &config.traffic)?;
    Ok(MluReport { utilization, mlu })
}

/// Shortest-path routing with every port switched off that the routed
/// traffic does not need. Links already above `theta` keep all ports and are
/// listed in `flagged_links`.
pub fn spr_baseline(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    theta: f64,
) -> Result<SrConfiguration> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!("theta {theta} outside (0, 1]")));
    }
    let routing = Routing::shortest_path(matrix);
    let traffic = arc_traffic(table, matrix, &routing)?;
    let mut port_active = vec![false; network.ports().len()];
    let mut flagged = Vec::new();
    for (l, load) in link_loads(network, &traffic).into_iter().enumerate() {
        let link = LinkId(l);
        let keep = match select_ports(network, link, load, theta) {
            Some(keep) => keep,
            None => {
                flagged.push(link);
                network.link(link).ports.clone()
            }
        };
        for p in &network.link(link).ports {
            port_active[p.0] = network.ports()[p.0].role == PortRole::Access;
        }
        for p in keep {
            port_active[p.0] = true;
        }
    }
    let plan = ActivationPlan::from_ports(network, port_active);
    let (utilization, mlu) = utilization(network, &plan, &traffic)?;
    Ok(SrConfiguration {
        method: Method::Spr,
        theta,
        routing,
        plan,
        traffic,
        utilization,
        mlu,
        status: SearchStatus::Complete,
        lower_bound: None,
        flagged_links: flagged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouterLinecards {
    pub router: NodeId,
    pub linecards: usize,
    pub inactive_linecards: usize,
    pub endpoints: usize,
    pub inactive_endpoints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinecardPacking {
    pub plan: ActivationPlan,
    pub routers: Vec<RouterLinecards>,
}

impl LinecardPacking {
    pub fn total(&self) -> usize {
        self.plan.linecard_active.len()
    }

    pub fn inactive(&self) -> usize {
        self.plan.inactive_linecards()
    }
}

/// Remaps port endpoints so that each router fills
/// `floor(inactive backbone endpoints / ports_per_linecard)` linecards with
/// idle endpoints only, and switches those linecards off.
pub fn pack_linecards(
    network: &Network,
    plan: &ActivationPlan,
    ports_per_linecard: usize,
) -> Result<LinecardPacking> {
    if ports_per_linecard == 0 {
        return Err(Error::InvalidInput("ports per linecard must be positive".into()));
    }
    if plan.port_active.len() != network.ports().len() {
        return Err(Error::PlanSize {
            expected: network.ports().len(),
            got: plan.port_active.len(),
        });
    }
    let mut endpoints: Vec<Vec<(PortId, usize)>> = vec![Vec::new(); network.num_nodes()];
    for (i, port) in network.ports().iter().enumerate() {
        for side in 0..2 {
            endpoints[port.ends[side].0].push((PortId(i), side));
        }
    }
    let mut out = ActivationPlan {
        port_active: plan.port_active.clone(),
        linecard_active: vec![true; network.linecards().len()],
        endpoint_linecard: plan.endpoint_linecard.clone(),
    };
    let mut routers = Vec::with_capacity(network.num_nodes());
    for r in network.nodes() {
        let cards: &[LinecardId] = network.router_linecards(r);
        let eps = &endpoints[r.0];
        let idle = |&(p, _): &(PortId, usize)| {
            !plan.port_active[p.0] && network.ports()[p.0].role == PortRole::Backbone
        };
        let inactive: Vec<(PortId, usize)> = eps.iter().copied().filter(idle).collect();
        let active: Vec<(PortId, usize)> = eps.iter().copied().filter(|e| !idle(e)).collect();
        let per_card = |lc: LinecardId| network.linecards()[lc.0].slots.min(ports_per_linecard);
        let room: usize = cards.iter().map(|&c| per_card(c)).sum();

        let mut off = (inactive.len() / ports_per_linecard).min(cards.len());
        // the remaining cards must still host every other endpoint
        while off > 0 {
            let freed: usize = cards[..off].iter().map(|&c| per_card(c)).sum();
            let fits_off = cards[..off].iter().all(|&c| per_card(c) == ports_per_linecard);
            if fits_off && eps.len() - freed <= room - freed {
                break;
            }
            off -= 1;
        }
        if eps.len() <= room {
            let mut queue = inactive.iter().chain(active.iter());
            for (k, &card) in cards.iter().enumerate() {
                for _ in 0..per_card(card) {
                    let Some(&(p, side)) = queue.next() else { break };
                    out.endpoint_linecard[p.0][side] = card;
                }
                if k < off {
                    out.linecard_active[card.0] = false;
                }
            }
        }
        routers.push(RouterLinecards {
            router: r,
            linecards: cards.len(),
            inactive_linecards: if eps.len() <= room { off } else { 0 },
            endpoints: eps.len(),
            inactive_endpoints: inactive.len(),
        });
    }
    Ok(LinecardPacking { plan: out, routers })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub ports_total: usize,
    pub ports_inactive: usize,
    pub backbone_ports: usize,
    pub linecards_total: usize,
    pub linecards_inactive: usize,
    pub linecard_share: f64,
    pub linecard_off_fraction: f64,
    pub port_off_fraction: f64,
    pub energy_saving: f64,
    pub routers: Vec<RouterLinecards>,
}

/// Energy saving of a packed plan: the linecards' share of network power
/// times the fraction of linecards that are off.
pub fn energy_report(
    network: &Network,
    packing: &LinecardPacking,
    linecard_share: f64,
) -> Result<EnergyReport> {
    if !(0.0..=1.0).contains(&linecard_share) {
        return Err(Error::InvalidInput(format!("linecard share {linecard_share} outside [0, 1]")));
    }
    let plan = &packing.plan;
    let total = plan.linecard_active.len();
    let off = plan.inactive_linecards();
    let lc_frac = if total == 0 { 0.0 } else { off as f64 / total as f64 };
    let ports = plan.port_active.len();
    Ok(EnergyReport {
        ports_total: ports,
        ports_inactive: plan.inactive_ports(),
        backbone_ports: network.num_backbone_ports(),
        linecards_total: total,
        linecards_inactive: off,
        linecard_share,
        linecard_off_fraction: lc_frac,
        port_off_fraction: if ports == 0 {
            0.0
        } else {
            plan.inactive_ports() as f64 / ports as f64
        },
        energy_saving: linecard_share * lc_frac,
        routers: packing.routers.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{validate_plan, LinecardSpec};
    use crate::par::Exec;
    use crate::spr::{compute_fractions, EcmpMode};

    fn pair(load: f64) -> (Network, TrafficMatrix, FlowFractionTable) {
        let mut b = Network::builder();
        let u = b.add_node("u");
        let v = b.add_node("v");
        b.add_link(u, v, 1.0, 1.0, &[(25.0, PortRole::Backbone); 4]).unwrap();
        let net = b.build(LinecardSpec::default()).unwrap();
        let mut m = TrafficMatrix::zeros(2);
        m.set(u, v, load).unwrap();
        let t = compute_fractions(&net, None, EcmpMode::EvenSplit, Exec::Sequential).unwrap();
        (net, m, t)
    }

    #[test]
    fn baseline_keeps_two_of_four_ports() {
        // 30 <= 0.7 * c needs c >= 42.9, i.e. two 25-unit ports
        let (net, m, t) = pair(30.0);
        let c = spr_baseline(&net, &m, &t, 0.7).unwrap();
        assert_eq!(c.plan.inactive_ports(), 2);
        assert!((c.mlu - 0.6).abs() < 1e-12);
        assert!(c.flagged_links.is_empty());
    }

    #[test]
    fn idle_link_loses_every_port() {
        let (net, _, t) = pair(0.0);
        let c = spr_baseline(&net, &TrafficMatrix::zeros(2), &t, 0.7).unwrap();
        assert_eq!(c.plan.inactive_ports(), 4);
        assert_eq!(c.mlu, 0.0);
    }

    #[test]
    fn overloaded_link_is_flagged() {
        let (net, m, t) = pair(80.0);
        let c = spr_baseline(&net, &m, &t, 0.7).unwrap();
        assert_eq!(c.plan.inactive_ports(), 0);
        assert_eq!(c.flagged_links, vec![LinkId(0)]);
        assert!((c.mlu - 0.8).abs() < 1e-12);
    }

    #[test]
    fn traffic_on_dark_link_is_an_error() {
        let (net, m, t) = pair(10.0);
        let mut c = spr_baseline(&net, &m, &t, 0.7).unwrap();
        c.plan.port_active = vec![false; 4];
        assert!(matches!(evaluate_mlu(&net, &c), Err(Error::TrafficOnInactive { .. })));
    }

    /// Router 0 with `backbone` ports to a peer and `access` ports to an
    /// access node.
    fn router(backbone: usize, access: usize) -> Network {
        let mut b = Network::builder();
        let r = b.add_node("r");
        let peer = b.add_node("peer");
        let acc = b.add_node("access");
        b.add_link(r, peer, 1.0, 1.0, &vec![(10.0, PortRole::Backbone); backbone]).unwrap();
        if access > 0 {
            b.add_link(r, acc, 1.0, 1.0, &vec![(10.0, PortRole::Access); access]).unwrap();
        }
        b.build(LinecardSpec::default()).unwrap()
    }

    fn off_at_router(net: &Network, inactive: usize) -> usize {
        let mut active = vec![true; net.ports().len()];
        for a in active.iter_mut().take(inactive) {
            *a = false;
        }
        let plan = ActivationPlan::from_ports(net, active);
        let packed = pack_linecards(net, &plan, 8).unwrap();
        assert!(validate_plan(net, &packed.plan).unwrap().is_empty());
        packed.routers[0].inactive_linecards
    }

    #[test]
    fn fourteen_plus_six_turns_one_card_off() {
        let net = router(14, 6);
        assert_eq!(net.router_linecards(NodeId(0)).len(), 3);
        assert_eq!(off_at_router(&net, 14), 1);
    }

    #[test]
    fn card_count_is_floor_of_idle_endpoints() {
        let net = router(16, 0);
        assert_eq!(off_at_router(&net, 16), 2);
        assert_eq!(off_at_router(&net, 7), 0);
        assert_eq!(off_at_router(&net, 8), 1);
    }

    #[test]
    fn energy_saving_scales_with_share() {
        let net = router(16, 0);
        let plan = ActivationPlan::from_ports(&net, vec![false; 16]);
        let packed = pack_linecards(&net, &plan, 8).unwrap();
        // every card of all three routers is idle
        let r = energy_report(&net, &packed, 0.8).unwrap();
        assert_eq!(r.linecards_inactive, r.linecards_total);
        assert_eq!(r.energy_saving, 0.8);
        let none = pack_linecards(&net, &ActivationPlan::all_active(&net), 8).unwrap();
        assert_eq!(energy_report(&net, &none, 0.8).unwrap().energy_saving, 0.0);
    }
}
