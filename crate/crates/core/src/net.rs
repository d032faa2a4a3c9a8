//! Backbone network model: routers, paired arcs, ports and linecards.
//!
//! A [`Link`] is one physical connection. It owns two opposite [`Arc`]s and
//! a set of [`Port`]s whose capacities count for both directions. Each port
//! has one endpoint on each of the link's routers, and every endpoint sits on
//! a [`Linecard`] of that router.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! index_type {
    ($name:ident, $tag:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($tag, "{}"), self.0)
            }
        }
    };
}

index_type!(NodeId, "n");
index_type!(ArcId, "a");
index_type!(LinkId, "l");
index_type!(PortId, "p");
index_type!(LinecardId, "lc");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Backbone,
    /// Connects an access network; never switched off.
    Access,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
    /// IGP weight used by shortest-path routing.
    pub weight: f64,
    pub link: LinkId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// Arc from the link's first endpoint to its second.
    pub fwd: ArcId,
    pub bwd: ArcId,
    pub ports: Vec<PortId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub link: LinkId,
    pub capacity: f64,
    pub role: PortRole,
    pub ends: [NodeId; 2],
    /// Linecard hosting each endpoint in the as-built mapping.
    pub linecards: [LinecardId; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linecard {
    pub router: NodeId,
    pub slots: usize,
    pub energy: f64,
    pub port_energy: f64,
}

/// Linecard hardware used when allocating linecards to routers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinecardSpec {
    pub slots: usize,
    pub energy: f64,
    pub port_energy: f64,
}

impl Default for LinecardSpec {
    fn default() -> Self {
        Self {
            slots: 8,
            energy: 1.0,
            port_energy: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    names: Vec<String>,
    arcs: Vec<Arc>,
    links: Vec<Link>,
    ports: Vec<Port>,
    linecards: Vec<Linecard>,
    out_arcs: Vec<Vec<ArcId>>,
    router_linecards: Vec<Vec<LinecardId>>,
    spec: LinecardSpec,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn num_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.names.len()).map(NodeId)
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> Result<&Arc> {
        self.arcs.get(id.0).ok_or(Error::UnknownArc(id))
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    /// The routers at the two ends of `link`, in forward-arc order.
    pub fn link_ends(&self, link: LinkId) -> (NodeId, NodeId) {
        let a = &self.arcs[self.links[link.0].fwd.0];
        (a.from, a.to)
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn port(&self, id: PortId) -> Result<&Port> {
        self.ports.get(id.0).ok_or(Error::UnknownPort(id))
    }

    pub fn linecards(&self) -> &[Linecard] {
        &self.linecards
    }

    pub fn router_linecards(&self, node: NodeId) -> &[LinecardId] {
        &self.router_linecards[node.0]
    }

    pub fn linecard_spec(&self) -> LinecardSpec {
        self.spec
    }

    pub fn out_arcs(&self, node: NodeId) -> &[ArcId] {
        &self.out_arcs[node.0]
    }

    /// The opposite arc of the same link.
    pub fn reverse(&self, arc: ArcId) -> ArcId {
        let link = &self.links[self.arcs[arc.0].link.0];
        if link.fwd == arc {
            link.bwd
        } else {
            link.fwd
        }
    }

    /// Total capacity of the link's ports, optionally only the active ones.
    pub fn link_capacity(&self, link: LinkId, plan: Option<&ActivationPlan>) -> f64 {
        self.links[link.0]
            .ports
            .iter()
            .filter(|p| plan.is_none_or(|pl| pl.port_active[p.0]))
            .map(|p| self.ports[p.0].capacity)
            .sum()
    }

    /// Capacity of the always-on access ports of `link`.
    pub fn access_capacity(&self, link: LinkId) -> f64 {
        self.links[link.0]
            .ports
            .iter()
            .map(|p| &self.ports[p.0])
            .filter(|p| p.role == PortRole::Access)
            .map(|p| p.capacity)
            .sum()
    }

    pub fn num_backbone_ports(&self) -> usize {
        self.ports.iter().filter(|p| p.role == PortRole::Backbone).count()
    }

    /// Starts a builder holding the same routers and links, to be rebuilt
    /// with different ports or linecards.
    pub fn to_builder(&self) -> NetworkBuilder {
        let mut b = NetworkBuilder {
            names: self.names.clone(),
            links: Vec::new(),
        };
        for (l, link) in self.links.iter().enumerate() {
            let (u, v) = self.link_ends(LinkId(l));
            b.links.push(PendingLink {
                u,
                v,
                w_uv: self.arcs[link.fwd.0].weight,
                w_vu: self.arcs[link.bwd.0].weight,
                ports: link
                    .ports
                    .iter()
                    .map(|p| (self.ports[p.0].capacity, self.ports[p.0].role))
                    .collect(),
            });
        }
        b
    }
}

/// Capacity of `arc`: the summed capacity of its link's ports, restricted to
/// the ports active in `plan` when one is given.
pub fn arc_capacity(network: &Network, arc: ArcId, plan: Option<&ActivationPlan>) -> Result<f64> {
    let link = network.arc(arc)?.link;
    if let Some(p) = plan {
        if p.port_active.len() != network.ports.len() {
            return Err(Error::PlanSize {
                expected: network.ports.len(),
                got: p.port_active.len(),
            });
        }
    }
    Ok(network.link_capacity(link, plan))
}

#[derive(Debug, Clone)]
struct PendingLink {
    u: NodeId,
    v: NodeId,
    w_uv: f64,
    w_vu: f64,
    ports: Vec<(f64, PortRole)>,
}

#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    names: Vec<String>,
    links: Vec<PendingLink>,
}

impl NetworkBuilder {
    pub fn add_node(&mut self, name: impl Into<String>) -> NodeId {
        self.names.push(name.into());
        NodeId(self.names.len() - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Adds a link between `u` and `v` with the given per-direction IGP
    /// weights and ports `(capacity, role)`.
    pub fn add_link(
        &mut self,
        u: NodeId,
        v: NodeId,
        w_uv: f64,
        w_vu: f64,
        ports: &[(f64, PortRole)],
    ) -> Result<LinkId> {
        let n = self.names.len();
        for x in [u, v] {
            if x.0 >= n {
                return Err(Error::UnknownNode(x.to_string()));
            }
        }
        if u == v {
            return Err(Error::InvalidInput(format!("self loop at {}", self.names[u.0])));
        }
        if !(w_uv > 0.0 && w_vu > 0.0 && w_uv.is_finite() && w_vu.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "link {}-{} needs positive finite weights",
                self.names[u.0], self.names[v.0]
            )));
        }
        if ports.is_empty() {
            return Err(Error::InvalidInput(format!(
                "link {}-{} has no ports",
                self.names[u.0], self.names[v.0]
            )));
        }
        if let Some(&(c, _)) = ports.iter().find(|(c, _)| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "link {}-{} has port capacity {c}",
                self.names[u.0], self.names[v.0]
            )));
        }
        self.links.push(PendingLink {
            u,
            v,
            w_uv,
            w_vu,
            ports: ports.to_vec(),
        });
        Ok(LinkId(self.links.len() - 1))
    }

    /// Replaces the ports of every link with the result of `f(link, ports)`.
    pub fn map_ports<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(LinkId, &[(f64, PortRole)]) -> Result<Vec<(f64, PortRole)>>,
    {
        for (l, link) in self.links.iter_mut().enumerate() {
            let ports = f(LinkId(l), &link.ports)?;
            if ports.is_empty() || ports.iter().any(|(c, _)| !(*c > 0.0 && c.is_finite())) {
                return Err(Error::InvalidInput(format!("link {l} needs positive port capacities")));
            }
            link.ports = ports;
        }
        Ok(())
    }

    /// Finishes the network, allocating `ceil(endpoints / slots)` linecards
    /// per router and filling them with port endpoints in port order.
    pub fn build(self, spec: LinecardSpec) -> Result<Network> {
        if spec.slots == 0 {
            return Err(Error::InvalidInput("linecards need at least one slot".into()));
        }
        let n = self.names.len();
        let mut arcs = Vec::with_capacity(2 * self.links.len());
        let mut links = Vec::with_capacity(self.links.len());
        let mut ports = Vec::new();
        let mut out_arcs = vec![Vec::new(); n];
        let mut endpoints: Vec<Vec<(PortId, usize)>> = vec![Vec::new(); n];
        for (l, pl) in self.links.iter().enumerate() {
            let link = LinkId(l);
            let fwd = ArcId(arcs.len());
            arcs.push(Arc {
                from: pl.u,
                to: pl.v,
                weight: pl.w_uv,
                link,
            });
            let bwd = ArcId(arcs.len());
            arcs.push(Arc {
                from: pl.v,
                to: pl.u,
                weight: pl.w_vu,
                link,
            });
            out_arcs[pl.u.0].push(fwd);
            out_arcs[pl.v.0].push(bwd);
            let mut ids = Vec::with_capacity(pl.ports.len());
            for &(capacity, role) in &pl.ports {
                let id = PortId(ports.len());
                ports.push(Port {
                    link,
                    capacity,
                    role,
                    ends: [pl.u, pl.v],
                    linecards: [LinecardId(0); 2],
                });
                endpoints[pl.u.0].push((id, 0));
                endpoints[pl.v.0].push((id, 1));
                ids.push(id);
            }
            links.push(Link { fwd, bwd, ports: ids });
        }
        let mut linecards = Vec::new();
        let mut router_linecards = vec![Vec::new(); n];
        for (r, eps) in endpoints.iter().enumerate() {
            for chunk in eps.chunks(spec.slots) {
                let lc = LinecardId(linecards.len());
                linecards.push(Linecard {
                    router: NodeId(r),
                    slots: spec.slots,
                    energy: spec.energy,
                    port_energy: spec.port_energy,
                });
                router_linecards[r].push(lc);
                for &(p, side) in chunk {
                    ports[p.0].linecards[side] = lc;
                }
            }
        }
        Ok(Network {
            names: self.names,
            arcs,
            links,
            ports,
            linecards,
            out_arcs,
            router_linecards,
            spec,
        })
    }
}

/// On/off state of every port and linecard together with the linecard
/// hosting each port endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationPlan {
    pub port_active: Vec<bool>,
    pub linecard_active: Vec<bool>,
    /// Linecard of each port's endpoint at `ends[0]` and `ends[1]`.
    pub endpoint_linecard: Vec<[LinecardId; 2]>,
}

impl ActivationPlan {
    pub fn all_active(network: &Network) -> Self {
        Self::from_ports(network, vec![true; network.ports.len()])
    }

    /// Plan with the given port states, every linecard on and the as-built
    /// endpoint mapping.
    pub fn from_ports(network: &Network, port_active: Vec<bool>) -> Self {
        Self {
            port_active,
            linecard_active: vec![true; network.linecards.len()],
            endpoint_linecard: network.ports.iter().map(|p| p.linecards).collect(),
        }
    }

    pub fn active_ports(&self) -> usize {
        self.port_active.iter().filter(|&&a| a).count()
    }

    pub fn inactive_ports(&self) -> usize {
        self.port_active.len() - self.active_ports()
    }

    pub fn inactive_linecards(&self) -> usize {
        self.linecard_active.iter().filter(|&&a| !a).count()
    }

    /// Active capacity of every arc, indexed by [`ArcId`].
    pub fn arc_capacities(&self, network: &Network) -> Vec<f64> {
        network
            .arcs
            .iter()
            .map(|a| network.link_capacity(a.link, Some(self)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PlanViolation {
    AccessPortInactive { port: PortId },
    PortOnInactiveLinecard { port: PortId, linecard: LinecardId },
    LinecardOverfull { linecard: LinecardId, assigned: usize, slots: usize },
    WrongRouter { port: PortId, linecard: LinecardId },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::AccessPortInactive { port } => {
                write!(f, "access port {port} is inactive")
            }
            PlanViolation::PortOnInactiveLinecard { port, linecard } => {
                write!(f, "active port {port} sits on inactive linecard {linecard}")
            }
            PlanViolation::LinecardOverfull {
                linecard,
                assigned,
                slots,
            } => write!(f, "linecard {linecard} hosts {assigned} endpoints but has {slots} slots"),
            PlanViolation::WrongRouter { port, linecard } => {
                write!(f, "port {port} is mapped to linecard {linecard} of another router")
            }
        }
    }
}

/// Lists every rule of `plan` that is broken. An empty list means the plan
/// is consistent with `network`.
pub fn validate_plan(network: &Network, plan: &ActivationPlan) -> Result<Vec<PlanViolation>> {
    let np = network.ports.len();
    if plan.port_active.len() != np || plan.endpoint_linecard.len() != np {
        return Err(Error::PlanSize {
            expected: np,
            got: plan.port_active.len().max(plan.endpoint_linecard.len()),
        });
    }
    let nl = network.linecards.len();
    if plan.linecard_active.len() != nl {
        return Err(Error::InvalidInput(format!(
            "plan has {} linecard states, network has {nl} linecards",
            plan.linecard_active.len()
        )));
    }
    let mut out = Vec::new();
    let mut load = vec![0usize; nl];
    for (i, port) in network.ports.iter().enumerate() {
        let id = PortId(i);
        let active = plan.port_active[i];
        if port.role == PortRole::Access && !active {
            out.push(PlanViolation::AccessPortInactive { port: id });
        }
        for side in 0..2 {
            let lc = plan.endpoint_linecard[i][side];
            let Some(card) = network.linecards.get(lc.0) else {
                return Err(Error::InvalidInput(format!("port {id} maps to unknown linecard {lc}")));
            };
            load[lc.0] += 1;
            if card.router != port.ends[side] {
                out.push(PlanViolation::WrongRouter { port: id, linecard: lc });
            }
            if active && !plan.linecard_active[lc.0] {
                out.push(PlanViolation::PortOnInactiveLinecard { port: id, linecard: lc });
            }
        }
    }
    for (l, card) in network.linecards.iter().enumerate() {
        if load[l] > card.slots {
            out.push(PlanViolation::LinecardOverfull {
                linecard: LinecardId(l),
                assigned: load[l],
                slots: card.slots,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_routers(ports: &[(f64, PortRole)]) -> Network {
        let mut b = Network::builder();
        let u = b.add_node("u");
        let v = b.add_node("v");
        b.add_link(u, v, 1.0, 1.0, ports).unwrap();
        b.build(LinecardSpec::default()).unwrap()
    }

    #[test]
    fn capacity_is_sum_of_active_ports() {
        let net = two_routers(&[(25.0, PortRole::Backbone); 4]);
        assert_eq!(arc_capacity(&net, ArcId(0), None).unwrap(), 100.0);
        let mut plan = ActivationPlan::all_active(&net);
        plan.port_active[2] = false;
        assert_eq!(arc_capacity(&net, ArcId(0), Some(&plan)).unwrap(), 75.0);
        assert_eq!(arc_capacity(&net, ArcId(1), Some(&plan)).unwrap(), 75.0);
        plan.port_active = vec![false; 4];
        assert_eq!(arc_capacity(&net, ArcId(1), Some(&plan)).unwrap(), 0.0);
        assert!(matches!(arc_capacity(&net, ArcId(7), None), Err(Error::UnknownArc(_))));
    }

    #[test]
    fn plan_rules() {
        let net = two_routers(&[
            (10.0, PortRole::Backbone),
            (10.0, PortRole::Backbone),
            (10.0, PortRole::Access),
        ]);
        let plan = ActivationPlan::all_active(&net);
        assert!(validate_plan(&net, &plan).unwrap().is_empty());

        let mut bad = plan.clone();
        bad.linecard_active[0] = false;
        let v = validate_plan(&net, &bad).unwrap();
        assert!(v.iter().all(|x| matches!(x, PlanViolation::PortOnInactiveLinecard { .. })));
        assert_eq!(v.len(), 3);

        let mut bad = plan.clone();
        bad.port_active[2] = false;
        assert_eq!(
            validate_plan(&net, &bad).unwrap(),
            vec![PlanViolation::AccessPortInactive { port: PortId(2) }]
        );

        let mut short = plan;
        short.port_active.pop();
        assert!(matches!(validate_plan(&net, &short), Err(Error::PlanSize { .. })));
    }

    #[test]
    fn linecards_are_allocated_by_ceiling() {
        let mut b = Network::builder();
        let hub = b.add_node("hub");
        for i in 0..3 {
            let leaf = b.add_node(format!("leaf{i}"));
            b.add_link(hub, leaf, 1.0, 1.0, &[(1.0, PortRole::Backbone); 4]).unwrap();
        }
        let net = b.build(LinecardSpec::default()).unwrap();
        assert_eq!(net.router_linecards(NodeId(0)).len(), 2);
        assert_eq!(net.router_linecards(NodeId(1)).len(), 1);
        assert_eq!(net.linecards().len(), 5);
    }

    #[test]
    fn builder_rejects_bad_links() {
        let mut b = Network::builder();
        let u = b.add_node("u");
        let v = b.add_node("v");
        assert!(b.add_link(u, u, 1.0, 1.0, &[(1.0, PortRole::Backbone)]).is_err());
        assert!(b.add_link(u, v, 0.0, 1.0, &[(1.0, PortRole::Backbone)]).is_err());
        assert!(b.add_link(u, v, 1.0, 1.0, &[(0.0, PortRole::Backbone)]).is_err());
        assert!(b.add_link(u, NodeId(9), 1.0, 1.0, &[(1.0, PortRole::Backbone)]).is_err());
    }
}
