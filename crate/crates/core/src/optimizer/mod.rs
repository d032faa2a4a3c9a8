//! Port-minimising two-segment routing.
//!
//! [`optimize`] solves the relaxation in which every demand may be split
//! over intermediate nodes and port counts are continuous, by column
//! generation over intermediates. Port counts are then made integral by a
//! bounded best-first branch and bound whose incumbents come from
//! [`round_ports`]. In [`Mode::NoSplitting`] incumbents come from diving on
//! the splitting fractions until every demand uses a single intermediate.
//! The shortest-path routing is always tried as well, so a returned
//! configuration never needs more ports than the shortest-path baseline
//! whenever that baseline respects `theta`.

mod explicit;
mod local;
mod master;
mod search;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{link_loads, select_ports, utilization};
use crate::net::{ActivationPlan, LinkId, Network, NodeId, PortRole};
use crate::par::Exec;
use crate::spr::{arc_traffic, compute_fractions, EcmpMode, FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

pub use explicit::{build_port_lp, exact_oracle, OracleObjective, PortLp};
pub use master::min_mlu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Demands may be split over several intermediates.
    #[default]
    #[serde(rename = "2srg")]
    Splitting,
    /// Every demand uses exactly one intermediate.
    #[serde(rename = "2srg-ns")]
    NoSplitting,
}

/// Which procedure produced a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "spr")]
    Spr,
    #[serde(rename = "2srg")]
    Splitting,
    #[serde(rename = "2srg-ns")]
    NoSplitting,
    #[serde(rename = "exact")]
    Exact,
}

impl From<Mode> for Method {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Splitting => Method::Splitting,
            Mode::NoSplitting => Method::NoSplitting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    /// The search ran to completion.
    Complete,
    /// The time or node budget ran out; the result is the best found.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub time_limit: Duration,
    /// Branch-and-bound nodes after the root. Zero gives plain
    /// relax-and-round.
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(3600),
            max_nodes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationParams {
    /// Upper bound on every arc's utilisation.
    pub theta: f64,
    pub mode: Mode,
    pub ecmp: EcmpMode,
    pub limits: SearchLimits,
    /// Restricts the intermediates a demand may use besides its destination.
    pub candidates: Option<Vec<NodeId>>,
    pub exec: Exec,
}

impl Default for OptimizationParams {
    fn default() -> Self {
        Self {
            theta: 0.7,
            mode: Mode::Splitting,
            ecmp: EcmpMode::EvenSplit,
            limits: SearchLimits::default(),
            candidates: None,
            exec: Exec::default(),
        }
    }
}

impl OptimizationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidInput(format!("theta {} outside (0, 1]", self.theta)));
        }
        Ok(())
    }
}

/// Routing, activation plan and the loads they produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrConfiguration {
    pub method: Method,
    pub theta: f64,
    pub routing: Routing,
    pub plan: ActivationPlan,
    /// `tr(a)` per arc.
    pub traffic: Vec<f64>,
    /// `LU(a)` per arc; zero on arcs without active capacity.
    pub utilization: Vec<f64>,
    pub mlu: f64,
    pub status: SearchStatus,
    /// Proven lower bound on the number of active backbone ports.
    pub lower_bound: Option<f64>,
    /// Links whose traffic exceeds `theta` even with every port on.
    pub flagged_links: Vec<LinkId>,
}

impl SrConfiguration {
    pub fn active_backbone_ports(&self, network: &Network) -> usize {
        network
            .ports()
            .iter()
            .zip(&self.plan.port_active)
            .filter(|(p, &a)| a && p.role == PortRole::Backbone)
            .count()
    }

    pub fn inactive_port_share(&self) -> f64 {
        let n = self.plan.port_active.len();
        if n == 0 {
            0.0
        } else {
            self.plan.inactive_ports() as f64 / n as f64
        }
    }
}

/// Activates, per link, the fewest ports (largest capacity first) that keep
/// both directions of `routing`'s traffic within `theta`, then re-checks
/// every arc.
pub fn round_ports(
    network: &Network,
    routing: &Routing,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    params: &OptimizationParams,
) -> Result<SrConfiguration> {
    params.validate()?;
    let traffic = arc_traffic(table, matrix, routing)?;
    let mut port_active: Vec<bool> = network
        .ports()
        .iter()
        .map(|p| p.role == PortRole::Access)
        .collect();
    for (l, load) in link_loads(network, &traffic).into_iter().enumerate() {
        let keep = select_ports(network, LinkId(l), load, params.theta)
            .ok_or(Error::LinkOverload { link: LinkId(l) })?;
        for p in keep {
            port_active[p.0] = true;
        }
    }
    let plan = ActivationPlan::from_ports(network, port_active);
    let (utilization, mlu) = utilization(network, &plan, &traffic)?;
    if mlu > params.theta + crate::eval::LU_TOL {
        return Err(Error::Infeasible {
            theta: params.theta,
            reason: format!("rounded configuration reaches {mlu}"),
        });
    }
    let method = if routing.is_unsplit() && params.mode == Mode::NoSplitting {
        Method::NoSplitting
    } else {
        Method::from(params.mode)
    };
    Ok(SrConfiguration {
        method,
        theta: params.theta,
        routing: routing.clone(),
        plan,
        traffic,
        utilization,
        mlu,
        status: SearchStatus::Complete,
        lower_bound: None,
        flagged_links: Vec::new(),
    })
}

/// Computes shortest-path fractions for `network` and runs
/// [`optimize_with_table`].
pub fn optimize(
    network: &Network,
    matrix: &TrafficMatrix,
    params: &OptimizationParams,
) -> Result<SrConfiguration> {
    params.validate()?;
    let table = compute_fractions(network, None, params.ecmp, params.exec)?;
    optimize_with_table(network, matrix, &table, params)
}

/// Full pipeline on a precomputed fraction table: relaxation, branch and
/// bound over port counts, rounding and verification.
pub fn optimize_with_table(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    params: &OptimizationParams,
) -> Result<SrConfiguration> {
    params.validate()?;
    check_inputs(network, matrix, table)?;
    let deadline = Instant::now() + params.limits.time_limit;
    let mut config = search::run(network, matrix, table, params, deadline)?;
    config.method = Method::from(params.mode);
    Ok(config)
}

pub(crate) fn check_inputs(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
) -> Result<()> {
    if matrix.num_nodes() != network.num_nodes() || table.num_nodes() != network.num_nodes() {
        return Err(Error::InvalidInput(format!(
            "network has {} nodes, traffic matrix {}, fraction table {}",
            network.num_nodes(),
            matrix.num_nodes(),
            table.num_nodes()
        )));
    }
    if table.num_arcs() != network.arcs().len() {
        return Err(Error::InvalidInput("fraction table built for another network".into()));
    }
    if let Some((u, v, _)) = matrix.demands().find(|&(u, v, _)| !table.is_reachable(u, v)) {
        return Err(Error::Unreachable { src: u, dst: v });
    }
    Ok(())
}

#[cfg(test)]
mod tests;
